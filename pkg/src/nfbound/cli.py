"""Command-line front end.

Subcommands: ``boundary`` (closed-form and numerical criteria), ``edof``
(EDoF report and spherical/planar ratio at one distance), ``capacity``
(capacities and estimation error at one distance), ``sweep`` (boundary
criteria over an aperture grid, CSV), and ``experiment`` (the named
preset studies).

Angles are taken in degrees on the command line and converted once to
radians; frequencies are in GHz with wavelength = c / f.  Exit codes:
0 success, 1 solver non-convergence (results still printed), 2 argument
errors.  The ``NFBOUND_OUTPUT_DIR`` environment variable supplies a
default directory for relative CSV output paths.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import boundary as bnd
from .analysis import capacity, capacity_error, edof_ratio, edof_report
from .channel import composite_channel, los_channel_pwm
from .experiments import (
    EXPERIMENT_IDS,
    ExperimentConfig,
    run_experiment,
    ura_to_ula_scene,
    wavelength_for_ghz,
    write_rows_csv,
)
from .geometry import ArraySpec, LinkScene, UlaToUla, UraToUla

CLOSED_FORM_CRITERIA = (
    "rayleigh", "rayleigh-array", "mimo-ard", "critical", "uniform-power",
    "effective-rayleigh", "bjornson", "equi-power-ula", "equi-power-upa",
    "eigen-threshold", "capacity-threshold", "ebd-ula-ula", "ebd-ura-ula",
)
NUMERICAL_CRITERIA = ("ebd", "emd", "capacity-ratio")


def _add_scene_arguments(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("scene")
    g.add_argument("--scene", choices=("ula-ula", "ura-ula"), default="ula-ula",
                   help="link geometry (default: %(default)s)")
    g.add_argument("--freq-ghz", type=float, default=100.0,
                   help="carrier frequency in GHz (default: %(default)s)")
    g.add_argument("--wavelength", type=float, default=None,
                   help="carrier wavelength in meters (overrides --freq-ghz)")
    g.add_argument("--dt", type=float, default=0.1, help="transmit ULA length in m")
    g.add_argument("--dr", type=float, default=0.1, help="receive ULA length in m")
    g.add_argument("--nt", type=int, default=2, help="transmit ULA element count")
    g.add_argument("--nr", type=int, default=2, help="receive ULA element count")
    g.add_argument("--dtx", type=float, default=0.05, help="URA horizontal length in m")
    g.add_argument("--dtz", type=float, default=0.05, help="URA vertical length in m")
    g.add_argument("--nx", type=int, default=8, help="URA horizontal element count")
    g.add_argument("--nz", type=int, default=8, help="URA vertical element count")
    g.add_argument("--alpha-deg", type=float, default=0.0,
                   help="user-center elevation from boresight (ula-ula)")
    g.add_argument("--beta-deg", type=float, default=0.0,
                   help="user-array tilt from vertical (ula-ula)")
    g.add_argument("--theta-deg", type=float, default=0.0,
                   help="user-array tilt from vertical (ura-ula)")


def _wavelength(args) -> float:
    if args.wavelength is not None:
        return args.wavelength
    return wavelength_for_ghz(args.freq_ghz)


def _scene(args, distance: float) -> LinkScene:
    lam = _wavelength(args)
    rx = ArraySpec.ula(args.nr, args.dr)
    if args.scene == "ula-ula":
        tx = ArraySpec.ula(args.nt, args.dt)
        kind = UlaToUla(math.radians(args.alpha_deg), math.radians(args.beta_deg))
    else:
        tx = ArraySpec.ura(args.nx, args.nz, args.dtx, args.dtz)
        kind = UraToUla(math.radians(args.theta_deg))
    return LinkScene(tx, rx, distance, lam, kind)


def _resolve_out(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("NFBOUND_OUTPUT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit_record(record: dict, fmt: str, stream) -> None:
    if fmt == "json":
        stream.write(json.dumps(record, indent=2) + "\n")
    elif fmt == "csv":
        keys = list(record)
        stream.write(",".join(keys) + "\n")
        stream.write(",".join(str(record[k]) for k in keys) + "\n")
    else:
        width = max(len(k) for k in record)
        for key, value in record.items():
            stream.write(f"{key:<{width}}  {value}\n")


def _require(args, names: list[str]) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise SystemExit(f"error: --{missing[0]} is required for this criterion")


def _cmd_boundary(args) -> int:
    lam = _wavelength(args)
    name = args.criterion
    converged = True
    residual = 0.0
    metadata: dict = {}
    if name in CLOSED_FORM_CRITERIA:
        if name == "rayleigh":
            _require(args, ["aperture"])
            distance = bnd.rayleigh(0.0, args.aperture, lam, point_to_array=True)
        elif name == "rayleigh-array":
            distance = bnd.rayleigh(args.dt, args.dr, lam)
        elif name == "mimo-ard":
            distance = bnd.mimo_ard(args.dt, args.dr, lam)
        elif name == "critical":
            _require(args, ["aperture"])
            distance = bnd.critical_distance(args.aperture)
        elif name == "uniform-power":
            _require(args, ["aperture", "gamma-th"])
            distance = bnd.uniform_power_distance(args.gamma_th, args.aperture)
        elif name == "effective-rayleigh":
            _require(args, ["aperture"])
            distance = bnd.effective_rayleigh_distance(
                math.radians(args.phi_deg), args.aperture, lam)
        elif name == "bjornson":
            _require(args, ["element-diagonal", "n-antennas"])
            distance = bnd.bjornson_distance(args.element_diagonal, args.n_antennas)
        elif name == "equi-power-ula":
            _require(args, ["aperture"])
            distance = bnd.equi_power_distance(args.aperture, planar=False)
        elif name == "equi-power-upa":
            _require(args, ["aperture"])
            distance = bnd.equi_power_distance(args.aperture, planar=True)
        elif name == "eigen-threshold":
            _require(args, ["tau-g", "spacing-t", "spacing-r"])
            distance = bnd.eigen_threshold_distance(
                args.tau_g, args.spacing_t, args.spacing_r, lam,
                math.radians(args.rot_t_deg), math.radians(args.rot_r_deg))
        elif name == "capacity-threshold":
            _require(args, ["epsilon"])
            distance = bnd.capacity_threshold_distance(
                args.epsilon, args.dt, args.dr, lam,
                math.radians(args.rot_t_deg), math.radians(args.rot_r_deg))
        elif name == "ebd-ula-ula":
            _require(args, ["aux"])
            distance = bnd.ebd_closed_form_ula_ula(
                args.dt, args.dr, lam,
                math.radians(args.alpha_deg), math.radians(args.beta_deg), args.aux)
        else:  # ebd-ura-ula
            _require(args, ["aux"])
            distance = bnd.ebd_closed_form_ura_ula(
                args.dr, args.dtx, args.dtz, lam, math.radians(args.theta_deg), args.aux)
        if distance == 0.0:
            metadata["degenerate"] = True
    else:
        scene = _scene(args, distance=1.0)
        if name == "ebd":
            objective = bnd.EdofRatioObjective(args.threshold)
        elif name == "emd":
            objective = bnd.EigenRatioObjective(args.eigenratio_db, args.m)
        else:  # capacity-ratio
            objective = bnd.CapacityRatioObjective(args.factor, 10.0 ** (args.snr_db / 10.0))
        bracket = None
        if args.d_lo is not None and args.d_hi is not None:
            bracket = (args.d_lo, args.d_hi)
        result = bnd.solve_numerical(scene, objective, bracket)
        distance = result.distance
        converged = result.converged
        residual = result.residual
        metadata = result.metadata
    record = {
        "criterion": name,
        "distance_m": distance,
        "converged": converged,
        "residual": residual,
    }
    if args.format == "json":
        record["metadata"] = metadata
    _emit_record(record, args.format, sys.stdout)
    return 0 if converged else 1


def _cmd_edof(args) -> int:
    scene = _scene(args, args.distance)
    swm = edof_report(composite_channel(scene, "swm"))
    pwm = edof_report(los_channel_pwm(scene))
    record = {
        "distance_m": args.distance,
        "edof_swm": swm.edof,
        "edof_pwm": pwm.edof,
        "edof_ratio": edof_ratio(scene),
        "trace": swm.trace,
        "frobenius": swm.frobenius,
        "eigenvalues": list(swm.eigenvalues),
    }
    if args.format != "json":
        record["eigenvalues"] = " ".join(format(v, ".6g") for v in swm.eigenvalues)
    _emit_record(record, args.format, sys.stdout)
    return 0


def _cmd_capacity(args) -> int:
    scene = _scene(args, args.distance)
    snr = 10.0 ** (args.snr_db / 10.0)
    c_swm = capacity(composite_channel(scene, "swm"), snr)
    c_pwm = capacity(los_channel_pwm(scene), snr)
    record = {
        "distance_m": args.distance,
        "snr_db": args.snr_db,
        "capacity_swm_bits": c_swm,
        "capacity_pwm_bits": c_pwm,
        "capacity_error": capacity_error(scene, None, snr),
    }
    _emit_record(record, args.format, sys.stdout)
    return 0


def _parse_criteria(text: str) -> list[tuple[str, float | None]]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            name, value = item.split(":", 1)
            out.append((name.strip(), float(value)))
        else:
            out.append((item, None))
    return out


def _cmd_sweep(args) -> int:
    lam = _wavelength(args)
    apertures = np.linspace(args.aperture_min, args.aperture_max, args.points)
    criteria = _parse_criteria(args.criteria)
    rows = []
    all_converged = True
    for aperture in apertures:
        aperture = float(aperture)
        if args.scene == "ura-ula":
            scene = ura_to_ula_scene(
                aperture, horizontal_length=args.dtx, rx_length=args.dr,
                rx_elements=args.nr, wavelength=lam,
                theta=math.radians(args.theta_deg))
        else:
            tx = ArraySpec.ula(args.nt, aperture)
            rx = ArraySpec.ula(args.nr, args.dr)
            scene = LinkScene(tx, rx, 1.0, lam, UlaToUla(
                math.radians(args.alpha_deg), math.radians(args.beta_deg)))
        for name, value in criteria:
            if name == "ebd":
                res = bnd.solve_numerical(scene, bnd.EdofRatioObjective(value or 1.01))
                row = (f"ebd_{(value or 1.01):g}", res.distance, res.converged, res.residual)
            elif name == "emd":
                res = bnd.solve_numerical(scene, bnd.EigenRatioObjective(value if value is not None else -20.0))
                row = (f"emd_{(value if value is not None else -20.0):g}db",
                       res.distance, res.converged, res.residual)
            elif name == "rayleigh":
                row = ("rayleigh", bnd.rayleigh(0.0, aperture, lam, point_to_array=True), True, 0.0)
            elif name == "rayleigh-array":
                row = ("rayleigh_array", bnd.rayleigh(aperture, args.dr, lam), True, 0.0)
            elif name == "mimo-ard":
                row = ("mimo_ard", bnd.mimo_ard(aperture, args.dr, lam), True, 0.0)
            elif name == "critical":
                row = ("critical", bnd.critical_distance(aperture), True, 0.0)
            elif name == "cap":
                eps = value if value is not None else 4.0
                row = (f"cap_{eps:g}",
                       bnd.capacity_threshold_distance(eps, aperture, args.dr, lam), True, 0.0)
            else:
                raise SystemExit(f"error: unknown sweep criterion {name!r}")
            all_converged = all_converged and row[2]
            rows.append({
                "aperture_m": aperture,
                "criterion": row[0],
                "distance_m": row[1],
                "converged": row[2],
                "residual": row[3],
            })
    fields = ["aperture_m", "criterion", "distance_m", "converged", "residual"]
    out = _resolve_out(args.out)
    if out is None:
        import csv as _csv

        writer = _csv.DictWriter(sys.stdout, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    else:
        write_rows_csv(out, fields, rows, {"sweep": args.scene, "points": args.points})
        print(f"wrote {len(rows)} rows to {out}")
    return 0 if all_converged else 1


def _parse_override(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _cmd_experiment(args) -> int:
    overrides: dict = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise SystemExit("error: the override file must contain a JSON object")
        overrides.update(loaded)
    for item in args.set or []:
        if "=" not in item:
            raise SystemExit(f"error: --set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_override(value.strip())
    out = _resolve_out(args.out) or f"{args.experiment_id}.csv"
    config = ExperimentConfig(args.experiment_id, overrides, args.seed, out)
    rows = run_experiment(config)
    not_converged = sum(1 for row in rows if str(row.get("converged", True)).lower() == "false"
                        or row.get("converged", True) is False)
    print(f"wrote {len(rows)} rows to {out}")
    if not_converged:
        print(f"{not_converged} rows did not converge", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfbound",
        description="Near-field / far-field boundary analysis for MIMO antenna arrays.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_boundary = sub.add_parser(
        "boundary", help="evaluate one boundary criterion",
        description="Closed-form criteria use their own parameters; numerical "
                    "criteria (ebd, emd, capacity-ratio) solve against the scene.")
    p_boundary.add_argument("--criterion", required=True,
                            choices=CLOSED_FORM_CRITERIA + NUMERICAL_CRITERIA)
    p_boundary.add_argument("--aperture", type=float, default=None, help="array aperture in m")
    p_boundary.add_argument("--gamma-th", type=float, default=None,
                            help="power-ratio threshold in (0, 1)")
    p_boundary.add_argument("--phi-deg", type=float, default=0.0, help="incidence angle")
    p_boundary.add_argument("--element-diagonal", type=float, default=None,
                            help="per-element diagonal in m")
    p_boundary.add_argument("--n-antennas", type=int, default=None)
    p_boundary.add_argument("--tau-g", type=float, default=None,
                            help="eigenvalue-ratio auxiliary constant")
    p_boundary.add_argument("--spacing-t", type=float, default=None, help="tx element spacing in m")
    p_boundary.add_argument("--spacing-r", type=float, default=None, help="rx element spacing in m")
    p_boundary.add_argument("--rot-t-deg", type=float, default=0.0)
    p_boundary.add_argument("--rot-r-deg", type=float, default=0.0)
    p_boundary.add_argument("--epsilon", type=float, default=None,
                            help="capacity-threshold auxiliary constant")
    p_boundary.add_argument("--aux", type=float, default=None,
                            help="compact-expression auxiliary constant")
    p_boundary.add_argument("--threshold", type=float, default=1.01,
                            help="EDoF ratio threshold (default: %(default)s)")
    p_boundary.add_argument("--eigenratio-db", type=float, default=-20.0,
                            help="eigenvalue ratio threshold in dB (default: %(default)s)")
    p_boundary.add_argument("--m", type=int, default=2, help="eigenvalue index (default: 2)")
    p_boundary.add_argument("--factor", type=float, default=1.5,
                            help="capacity ratio threshold (default: %(default)s)")
    p_boundary.add_argument("--snr-db", type=float, default=20.0)
    p_boundary.add_argument("--d-lo", type=float, default=None, help="bracket lower edge in m")
    p_boundary.add_argument("--d-hi", type=float, default=None, help="bracket upper edge in m")
    p_boundary.add_argument("--format", choices=("table", "csv", "json"), default="table")
    _add_scene_arguments(p_boundary)
    p_boundary.set_defaults(func=_cmd_boundary)

    p_edof = sub.add_parser("edof", help="EDoF report and spherical/planar ratio")
    p_edof.add_argument("--distance", type=float, required=True, help="link distance in m")
    p_edof.add_argument("--format", choices=("table", "csv", "json"), default="table")
    _add_scene_arguments(p_edof)
    p_edof.set_defaults(func=_cmd_edof)

    p_cap = sub.add_parser("capacity", help="capacities and estimation error at one distance")
    p_cap.add_argument("--distance", type=float, required=True, help="link distance in m")
    p_cap.add_argument("--snr-db", type=float, default=20.0,
                       help="per-branch receive SNR in dB (default: %(default)s)")
    p_cap.add_argument("--format", choices=("table", "csv", "json"), default="table")
    _add_scene_arguments(p_cap)
    p_cap.set_defaults(func=_cmd_capacity)

    p_sweep = sub.add_parser("sweep", help="boundary criteria over an aperture grid (CSV)")
    p_sweep.add_argument("--aperture-min", type=float, required=True)
    p_sweep.add_argument("--aperture-max", type=float, required=True)
    p_sweep.add_argument("--points", type=int, default=9)
    p_sweep.add_argument("--criteria", default="ebd:1.01,rayleigh,mimo-ard",
                         help="comma list, e.g. 'ebd:1.01,emd:-20,rayleigh,cap:4' "
                              "(default: %(default)s)")
    p_sweep.add_argument("--out", default=None, help="CSV path (default: stdout)")
    _add_scene_arguments(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_exp = sub.add_parser("experiment", help="run a named preset study")
    p_exp.add_argument("experiment_id", choices=EXPERIMENT_IDS,
                       help="fig2: boundaries vs aperture; fig3: boundary vs orientation and "
                            "vertical length; fig4: boundary vs scatterer count; "
                            "fig5a/fig5b: capacity error vs SNR / aperture")
    p_exp.add_argument("--out", default=None, help="output CSV (default: <id>.csv)")
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
    p_exp.add_argument("--config", default=None, help="JSON file with overrides")
    p_exp.set_defaults(func=_cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
