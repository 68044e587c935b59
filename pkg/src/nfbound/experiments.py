"""Deterministic sweep experiments emitting machine-readable CSV.

Each experiment has a named default configuration; overrides are merged
key-by-key and the fully resolved configuration (plus its hash) is written
as ``#``-prefixed comment lines ahead of the CSV header, so a run is
reproducible from its own output.  Re-running with the same seed produces
byte-identical files.

Experiments:

* ``fig2``  - boundary distances versus the transmit-array aperture for a
  rectangular transmitter and a two-element user line array.
* ``fig3``  - numerical EDoF boundary over user orientation x transmit
  vertical length at fixed diagonal aperture.
* ``fig4``  - numerical EDoF boundary versus scatterer count for three
  scattering modes, averaged over seeds.
* ``fig5a`` - capacity estimation error at each boundary versus SNR.
* ``fig5b`` - capacity estimation error at each boundary versus aperture.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .boundary import (
    BoundaryResult,
    EdofRatioObjective,
    EigenRatioObjective,
    capacity_threshold_distance,
    mimo_ard,
    rayleigh,
    solve_numerical,
)
from .analysis import capacity_error
from .channel import sample_scatterer_set, scene_element_coordinates
from .geometry import ArraySpec, LinkScene, UlaToUla, UraToUla, half_wavelength_ura

__all__ = [
    "EXPERIMENT_IDS",
    "ExperimentConfig",
    "default_config",
    "resolve_config",
    "run_experiment",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_fig5a",
    "run_fig5b",
    "ura_to_ula_scene",
    "wavelength_for_ghz",
    "write_rows_csv",
]

SPEED_OF_LIGHT = 299_792_458.0


def wavelength_for_ghz(freq_ghz: float) -> float:
    """Carrier wavelength in meters for a frequency in GHz."""
    if freq_ghz <= 0.0:
        raise ValueError("frequency must be positive")
    return SPEED_OF_LIGHT / (freq_ghz * 1e9)


_COMMON = {"freq_ghz": 100.0}

_DEFAULTS: dict[str, dict] = {
    "fig2": {
        **_COMMON,
        "rx_length": 0.1,
        "rx_elements": 2,
        "horizontal_length": 0.05,
        "theta_deg": 0.0,
        "aperture_min": 0.05,
        "aperture_max": 0.5,
        "aperture_points": 20,
        "edof_thresholds": [1.01, 1.05],
        "eigen_ratios_db": [-20.0, -10.0],
        "capacity_epsilons": [4.0, 12.0],
    },
    "fig3": {
        **_COMMON,
        "aperture": 0.5,
        "n_x": 8,
        "n_z": 8,
        "rx_length": 0.1,
        "rx_elements": 2,
        "edof_threshold": 1.01,
        "theta_min_deg": 0.0,
        "theta_max_deg": 90.0,
        "theta_points": 19,
        "vertical_min": 0.05,
        "vertical_max": 0.495,
        "vertical_points": 19,
    },
    "fig4": {
        **_COMMON,
        "tx_length": 2.0,
        "tx_elements": 16,
        "rx_length": 0.1,
        "rx_elements": 8,
        "edof_threshold": 1.05,
        "scatterer_counts": [0, 1, 2, 4, 8, 16],
        "n_seeds": 20,
        "modes": ["random_per_pair", "per_scatterer", "fixed_ratio"],
        "power_ratio": 0.1,
        "placement_distance": 20.0,
        "box_span": 0.8,
        "box_halfwidth": 1.0,
        "guard_radius_wavelengths": 10.0,
    },
    "fig5a": {
        **_COMMON,
        "rx_length": 0.1,
        "rx_elements": 2,
        "horizontal_length": 0.05,
        "theta_deg": 0.0,
        "aperture": 0.3,
        "snr_min_db": 0.0,
        "snr_max_db": 30.0,
        "snr_points": 31,
        "edof_threshold": 1.01,
        "eigen_ratio_db": -20.0,
        "capacity_epsilon": 4.0,
    },
    "fig5b": {
        **_COMMON,
        "rx_length": 0.1,
        "rx_elements": 2,
        "horizontal_length": 0.05,
        "theta_deg": 0.0,
        "snr_db": 20.0,
        "aperture_min": 0.1,
        "aperture_max": 0.5,
        "aperture_points": 9,
        "edof_threshold": 1.01,
        "eigen_ratio_db": -20.0,
        "capacity_epsilon": 4.0,
    },
}

EXPERIMENT_IDS = tuple(_DEFAULTS)


@dataclass
class ExperimentConfig:
    """An experiment id, overrides to its defaults, a seed, and an output path."""

    experiment_id: str
    overrides: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str | None = None


def default_config(experiment_id: str) -> dict:
    if experiment_id not in _DEFAULTS:
        raise ValueError(f"unknown experiment {experiment_id!r}; known: {', '.join(EXPERIMENT_IDS)}")
    return json.loads(json.dumps(_DEFAULTS[experiment_id]))


def resolve_config(config: ExperimentConfig) -> dict:
    """Defaults merged with overrides; unknown override keys are rejected."""
    resolved = default_config(config.experiment_id)
    for key, value in config.overrides.items():
        if key not in resolved:
            raise ValueError(f"unknown override {key!r} for {config.experiment_id}")
        resolved[key] = value
    resolved["experiment"] = config.experiment_id
    resolved["seed"] = int(config.seed)
    return resolved


def _config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_rows_csv(path: str, fieldnames: list[str], rows: list[dict], meta: dict) -> None:
    """CSV with ``#``-prefixed metadata comment lines ahead of the header."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in fieldnames})


def _metadata(resolved: dict, extra: dict | None = None) -> dict:
    meta = {
        "experiment": resolved["experiment"],
        "seed": resolved["seed"],
        "config_hash": _config_hash(resolved),
        "config": json.dumps(resolved, sort_keys=True, separators=(",", ":")),
    }
    if extra:
        meta.update(extra)
    return meta


# ----------------------------------------------------------------------
# scene builders
# ----------------------------------------------------------------------

def ura_to_ula_scene(
    aperture: float,
    *,
    horizontal_length: float = 0.05,
    rx_length: float = 0.1,
    rx_elements: int = 2,
    wavelength: float,
    theta: float = 0.0,
    distance: float = 1.0,
) -> LinkScene:
    """Half-wavelength-spaced URA transmitter with a requested diagonal aperture.

    The vertical side is ``sqrt(aperture**2 - horizontal**2)``; realized
    side lengths come from the half-wavelength construction, whose element
    counts are floored at two per axis, so a requested aperture at (or
    below) the horizontal length degenerates to a minimal two-row array.
    """
    if aperture <= 0.0:
        raise ValueError("aperture must be positive")
    vertical = math.sqrt(max(aperture * aperture - horizontal_length * horizontal_length, 0.0))
    tx = half_wavelength_ura(horizontal_length, vertical, wavelength)
    rx = ArraySpec.ula(rx_elements, rx_length)
    return LinkScene(tx, rx, distance, wavelength, UraToUla(theta))


def _fig5_boundaries(scene: LinkScene, aperture: float, rx_length: float,
                     cfg: dict, wavelength: float) -> list[tuple[str, BoundaryResult | None, float]]:
    """(criterion name, solver result or None, distance) for the error studies."""
    out: list[tuple[str, BoundaryResult | None, float]] = []
    ebd = solve_numerical(scene, EdofRatioObjective(cfg["edof_threshold"]))
    out.append((f"ebd_{cfg['edof_threshold']:g}", ebd, ebd.distance))
    emd = solve_numerical(scene, EigenRatioObjective(cfg["eigen_ratio_db"]))
    out.append((f"emd_{cfg['eigen_ratio_db']:g}db", emd, emd.distance))
    out.append(("rayleigh", None, rayleigh(0.0, aperture, wavelength, point_to_array=True)))
    out.append(("mimo_ard", None, mimo_ard(aperture, rx_length, wavelength)))
    eps = cfg["capacity_epsilon"]
    out.append((f"cap_{eps:g}", None,
                capacity_threshold_distance(eps, aperture, rx_length, wavelength)))
    return out


# ----------------------------------------------------------------------
# experiment runners
# ----------------------------------------------------------------------

def run_fig2(config: ExperimentConfig) -> list[dict]:
    """Boundary distances versus transmit aperture (one row per pair)."""
    cfg = resolve_config(config)
    lam = wavelength_for_ghz(cfg["freq_ghz"])
    theta = math.radians(cfg["theta_deg"])
    apertures = np.linspace(cfg["aperture_min"], cfg["aperture_max"], cfg["aperture_points"])
    rows: list[dict] = []
    for aperture in apertures:
        scene = ura_to_ula_scene(
            float(aperture),
            horizontal_length=cfg["horizontal_length"],
            rx_length=cfg["rx_length"],
            rx_elements=cfg["rx_elements"],
            wavelength=lam,
            theta=theta,
        )
        extras = {"vertical_m": scene.tx.lengths[1], "horizontal_m": scene.tx.lengths[0]}

        def add(criterion: str, distance: float, converged: bool = True, residual: float = 0.0):
            rows.append({
                "aperture_m": float(aperture),
                "criterion": criterion,
                "distance_m": float(distance),
                "converged": converged,
                "residual": float(residual),
                **extras,
            })

        for threshold in cfg["edof_thresholds"]:
            res = solve_numerical(scene, EdofRatioObjective(threshold))
            add(f"ebd_{threshold:g}", res.distance, res.converged, res.residual)
        for ratio_db in cfg["eigen_ratios_db"]:
            res = solve_numerical(scene, EigenRatioObjective(ratio_db))
            add(f"emd_{ratio_db:g}db", res.distance, res.converged, res.residual)
        add("rayleigh", rayleigh(0.0, float(aperture), lam, point_to_array=True))
        add("mimo_ard", mimo_ard(float(aperture), cfg["rx_length"], lam))
        for eps in cfg["capacity_epsilons"]:
            add(f"cap_{eps:g}", capacity_threshold_distance(eps, float(aperture), cfg["rx_length"], lam))
    fields = ["aperture_m", "criterion", "distance_m", "converged", "residual",
              "vertical_m", "horizontal_m"]
    _maybe_write(config, cfg, fields, rows)
    return rows


def run_fig3(config: ExperimentConfig) -> list[dict]:
    """Numerical EDoF boundary over (user orientation, vertical length)."""
    cfg = resolve_config(config)
    lam = wavelength_for_ghz(cfg["freq_ghz"])
    aperture = cfg["aperture"]
    thetas = np.linspace(cfg["theta_min_deg"], cfg["theta_max_deg"], cfg["theta_points"])
    verticals = np.linspace(cfg["vertical_min"], cfg["vertical_max"], cfg["vertical_points"])
    rx = ArraySpec.ula(cfg["rx_elements"], cfg["rx_length"])
    rows: list[dict] = []
    for vertical in verticals:
        horizontal = math.sqrt(aperture * aperture - vertical * vertical)
        tx = ArraySpec.ura(cfg["n_x"], cfg["n_z"], horizontal, float(vertical))
        for theta_deg in thetas:
            scene = LinkScene(tx, rx, 1.0, lam, UraToUla(math.radians(float(theta_deg))))
            res = solve_numerical(scene, EdofRatioObjective(cfg["edof_threshold"]))
            rows.append({
                "theta_deg": float(theta_deg),
                "vertical_m": float(vertical),
                "horizontal_m": horizontal,
                "distance_m": res.distance,
                "converged": res.converged,
                "residual": res.residual,
            })
    fields = ["theta_deg", "vertical_m", "horizontal_m", "distance_m", "converged", "residual"]
    _maybe_write(config, cfg, fields, rows)
    return rows


_FIG4_MODES = {
    "random_per_pair": {"phase_model": "per_pair", "fixed_ratio": False},
    "per_scatterer": {"phase_model": "per_scatterer", "fixed_ratio": False},
    "fixed_ratio": {"phase_model": "per_pair", "fixed_ratio": True},
}


def run_fig4(config: ExperimentConfig) -> list[dict]:
    """Mean and spread of the numerical boundary versus scatterer count."""
    cfg = resolve_config(config)
    lam = wavelength_for_ghz(cfg["freq_ghz"])
    for mode in cfg["modes"]:
        if mode not in _FIG4_MODES:
            raise ValueError(f"unknown scattering mode {mode!r}")
    tx = ArraySpec.ula(cfg["tx_elements"], cfg["tx_length"])
    rx = ArraySpec.ula(cfg["rx_elements"], cfg["rx_length"])
    d_ref = cfg["placement_distance"]
    base = LinkScene(tx, rx, d_ref, lam, UlaToUla())
    objective = EdofRatioObjective(cfg["edof_threshold"])

    los_result = solve_numerical(base, objective)

    span = cfg["box_span"]
    halfwidth = cfg["box_halfwidth"]
    lower = np.array([-halfwidth, (1.0 - span) / 2.0 * d_ref, -halfwidth])
    upper = np.array([halfwidth, (1.0 + span) / 2.0 * d_ref, halfwidth])
    guard = cfg["guard_radius_wavelengths"] * lam
    elements = scene_element_coordinates(base)
    counts = [int(c) for c in cfg["scatterer_counts"]]
    max_count = max(counts)

    samples: dict[tuple[str, int], list[float]] = {
        (mode, count): [] for mode in cfg["modes"] for count in counts
    }
    all_converged: dict[tuple[str, int], bool] = {key: True for key in samples}
    for seed_offset in range(int(cfg["n_seeds"])):
        seed = int(cfg["seed"]) + seed_offset
        full = None
        if max_count > 0:
            full = sample_scatterer_set(max_count, lower, upper, seed=seed,
                                        avoid=elements, guard_radius=guard)
        for count in counts:
            for mode in cfg["modes"]:
                if count == 0:
                    samples[(mode, count)].append(los_result.distance)
                    all_converged[(mode, count)] &= los_result.converged
                    continue
                spec = _FIG4_MODES[mode]
                subset = replace(
                    full.take(count),
                    phase_model=spec["phase_model"],
                    power_ratio=cfg["power_ratio"] if spec["fixed_ratio"] else None,
                )
                scene = replace(base, scatterers=subset)
                res = solve_numerical(scene, objective)
                samples[(mode, count)].append(res.distance)
                all_converged[(mode, count)] &= res.converged

    rows = []
    for count in counts:
        for mode in cfg["modes"]:
            values = np.array(samples[(mode, count)])
            rows.append({
                "n_scatterers": count,
                "mode": mode,
                "ebd_mean_m": float(values.mean()),
                "ebd_std_m": float(values.std()),
                "n_seeds": int(cfg["n_seeds"]),
                "converged": all_converged[(mode, count)],
            })
    fields = ["n_scatterers", "mode", "ebd_mean_m", "ebd_std_m", "n_seeds", "converged"]
    _maybe_write(config, cfg, fields, rows)
    return rows


def run_fig5a(config: ExperimentConfig) -> list[dict]:
    """Capacity estimation error at each boundary distance versus SNR."""
    cfg = resolve_config(config)
    lam = wavelength_for_ghz(cfg["freq_ghz"])
    scene = ura_to_ula_scene(
        cfg["aperture"],
        horizontal_length=cfg["horizontal_length"],
        rx_length=cfg["rx_length"],
        rx_elements=cfg["rx_elements"],
        wavelength=lam,
        theta=math.radians(cfg["theta_deg"]),
    )
    boundaries = _fig5_boundaries(scene, cfg["aperture"], cfg["rx_length"], cfg, lam)
    snrs_db = np.linspace(cfg["snr_min_db"], cfg["snr_max_db"], cfg["snr_points"])
    rows = []
    for snr_db in snrs_db:
        snr = 10.0 ** (float(snr_db) / 10.0)
        for name, result, distance in boundaries:
            rows.append({
                "snr_db": float(snr_db),
                "criterion": name,
                "boundary_m": distance,
                "capacity_error": capacity_error(scene, distance, snr),
                "converged": True if result is None else result.converged,
            })
    fields = ["snr_db", "criterion", "boundary_m", "capacity_error", "converged"]
    _maybe_write(config, cfg, fields, rows)
    return rows


def run_fig5b(config: ExperimentConfig) -> list[dict]:
    """Capacity estimation error at each boundary distance versus aperture."""
    cfg = resolve_config(config)
    lam = wavelength_for_ghz(cfg["freq_ghz"])
    snr = 10.0 ** (cfg["snr_db"] / 10.0)
    apertures = np.linspace(cfg["aperture_min"], cfg["aperture_max"], cfg["aperture_points"])
    rows = []
    for aperture in apertures:
        scene = ura_to_ula_scene(
            float(aperture),
            horizontal_length=cfg["horizontal_length"],
            rx_length=cfg["rx_length"],
            rx_elements=cfg["rx_elements"],
            wavelength=lam,
            theta=math.radians(cfg["theta_deg"]),
        )
        for name, result, distance in _fig5_boundaries(scene, float(aperture),
                                                       cfg["rx_length"], cfg, lam):
            rows.append({
                "aperture_m": float(aperture),
                "criterion": name,
                "boundary_m": distance,
                "capacity_error": capacity_error(scene, distance, snr),
                "converged": True if result is None else result.converged,
            })
    fields = ["aperture_m", "criterion", "boundary_m", "capacity_error", "converged"]
    _maybe_write(config, cfg, fields, rows)
    return rows


_RUNNERS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5a": run_fig5a,
    "fig5b": run_fig5b,
}


def _maybe_write(config: ExperimentConfig, resolved: dict,
                 fields: list[str], rows: list[dict]) -> None:
    if config.output_path is not None:
        write_rows_csv(config.output_path, fields, rows, _metadata(resolved))


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Dispatch an experiment by id; returns the rows (and writes CSV if asked)."""
    if config.experiment_id not in _RUNNERS:
        raise ValueError(
            f"unknown experiment {config.experiment_id!r}; known: {', '.join(EXPERIMENT_IDS)}")
    return _RUNNERS[config.experiment_id](config)
