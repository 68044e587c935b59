"""Near-field / far-field boundary criteria.

Closed-form benchmark distances (Rayleigh and friends) plus a numerical
solver that finds the largest distance at which a spherical-vs-planar
objective (EDoF ratio, Gram eigenvalue ratio, or capacity ratio) crosses a
threshold.  The solver scans a geometric distance grid for the outermost
sign change and refines it by bisection; objectives can be non-monotone
close to the arrays, so the outermost crossing defines the boundary and
multiple crossings are flagged in the result metadata.

Auxiliary constants of the compact EDoF-boundary expressions are not fixed
a priori; ``calibrate_aux`` fits one against the numerical solver over an
aperture sweep and reports the fit quality.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .analysis import capacity, edof_ratio, eigen_ratio_db
from .channel import composite_channel, los_channel_pwm
from .geometry import LinkScene, UlaToUla, UraToUla

__all__ = [
    "BoundaryResult",
    "CalibrationResult",
    "CapacityRatioObjective",
    "EdofRatioObjective",
    "EigenRatioObjective",
    "FitDiverged",
    "benchmark_distances",
    "bjornson_distance",
    "calibrate_aux",
    "capacity_threshold_distance",
    "critical_distance",
    "ebd_closed_form_prefactor",
    "ebd_closed_form_ula_ula",
    "ebd_closed_form_ura_ula",
    "effective_rayleigh_distance",
    "eigen_threshold_distance",
    "equi_power_distance",
    "fit_aux",
    "mimo_ard",
    "rayleigh",
    "solve_numerical",
    "uniform_power_distance",
]


# ----------------------------------------------------------------------
# closed-form benchmark boundaries
# ----------------------------------------------------------------------

def rayleigh(d_t: float, d_r: float, wavelength: float, point_to_array: bool = False) -> float:
    """Rayleigh (Fraunhofer) distance.

    Point-to-array treats the transmitter as a point and uses the receive
    aperture alone: ``2 d_r**2 / wavelength``.  Array-to-array uses the
    summed apertures: ``2 (d_t + d_r)**2 / wavelength``.
    """
    if point_to_array:
        return 2.0 * d_r * d_r / wavelength
    s = d_t + d_r
    return 2.0 * s * s / wavelength


def mimo_ard(d_t: float, d_r: float, wavelength: float) -> float:
    """MIMO advanced Rayleigh distance ``4 d_t d_r / wavelength``."""
    return 4.0 * d_t * d_r / wavelength


def critical_distance(aperture: float) -> float:
    """Weakest-to-strongest element power-ratio boundary, ``9 D``."""
    return 9.0 * aperture


def uniform_power_distance(gamma_th: float, aperture: float) -> float:
    """Uniform-power distance for a planar array and power threshold.

    ``sqrt(g / (1 - g)) * D / 2`` with ``g = gamma_th**(2/3)``.
    """
    if not 0.0 < gamma_th < 1.0:
        raise ValueError("gamma_th must lie strictly between 0 and 1")
    g = gamma_th ** (2.0 / 3.0)
    return math.sqrt(g / (1.0 - g)) * aperture / 2.0


def effective_rayleigh_distance(incidence_angle: float, aperture: float, wavelength: float) -> float:
    """Beamforming-gain corrected Rayleigh distance, ``0.367 cos^2(phi) 2 D^2 / lambda``."""
    c = math.cos(incidence_angle)
    return 0.367 * c * c * 2.0 * aperture * aperture / wavelength


def bjornson_distance(element_diagonal: float, n_antennas: int) -> float:
    """Array-gain boundary ``2 L sqrt(N)`` for per-element diagonal ``L``."""
    if n_antennas < 1:
        raise ValueError("n_antennas must be positive")
    return 2.0 * element_diagonal * math.sqrt(n_antennas)


def equi_power_distance(aperture: float, planar: bool = False) -> float:
    """Received-power boundary: ``2.86 D`` for a line, ``3.96 D`` for a plane."""
    return (3.96 if planar else 2.86) * aperture


def eigen_threshold_distance(tau_g: float, spacing_t: float, spacing_r: float,
                             wavelength: float, rot_t: float = 0.0, rot_r: float = 0.0) -> float:
    """Largest-eigenvalue-ratio boundary from element spacings and rotations."""
    return tau_g * spacing_t * spacing_r * math.cos(rot_t) * math.cos(rot_r) / wavelength


def capacity_threshold_distance(epsilon: float, d_t: float, d_r: float,
                                wavelength: float, rot_t: float = 0.0, rot_r: float = 0.0) -> float:
    """Capacity-ratio boundary ``epsilon d_t d_r cos cos / wavelength``."""
    return epsilon * d_t * d_r * math.cos(rot_t) * math.cos(rot_r) / wavelength


def ebd_closed_form_ula_ula(d_t: float, d_r: float, wavelength: float,
                            alpha: float, beta: float, aux_a: float) -> float:
    """Compact EDoF boundary for a ULA pair.

    ``pi d_t d_r / (lambda a) * |cos(beta) - sin(alpha) sin(alpha + beta)|``;
    a vanishing angular factor (endfire geometry) yields zero.
    """
    if aux_a <= 0.0:
        raise ValueError("aux_a must be positive")
    factor = abs(math.cos(beta) - math.sin(alpha) * math.sin(alpha + beta))
    return math.pi * d_t * d_r * factor / (wavelength * aux_a)


def ebd_closed_form_ura_ula(d_r: float, d_tx: float, d_tz: float, wavelength: float,
                            theta: float, aux_b: float) -> float:
    """Compact EDoF boundary for a URA-to-ULA link.

    ``pi d_r sqrt(d_tx^2 sin^2(theta) + d_tz^2 cos^2(theta)) / (lambda b)``.
    """
    if aux_b <= 0.0:
        raise ValueError("aux_b must be positive")
    s, c = math.sin(theta), math.cos(theta)
    proj = math.sqrt(d_tx * d_tx * s * s + d_tz * d_tz * c * c)
    return math.pi * d_r * proj / (wavelength * aux_b)


def benchmark_distances(
    wavelength: float,
    *,
    d_t: float | None = None,
    d_r: float | None = None,
    aperture: float | None = None,
    gamma_th: float | None = None,
    incidence_angle: float = 0.0,
    element_diagonal: float | None = None,
    n_antennas: int | None = None,
    spacing_t: float | None = None,
    spacing_r: float | None = None,
    rot_t: float = 0.0,
    rot_r: float = 0.0,
    tau_g: float | None = None,
    epsilon: float | None = None,
) -> dict[str, float]:
    """Every closed-form boundary whose parameters were supplied.

    ``aperture`` feeds the single-array boundaries (point-to-array
    Rayleigh, critical, uniform-power, effective-Rayleigh, equi-power);
    ``d_t``/``d_r`` feed the two-array ones.
    """
    out: dict[str, float] = {}
    if aperture is not None:
        out["rayleigh"] = rayleigh(0.0, aperture, wavelength, point_to_array=True)
        out["critical"] = critical_distance(aperture)
        out["effective_rayleigh"] = effective_rayleigh_distance(incidence_angle, aperture, wavelength)
        out["equi_power_ula"] = equi_power_distance(aperture, planar=False)
        out["equi_power_upa"] = equi_power_distance(aperture, planar=True)
        if gamma_th is not None:
            out["uniform_power"] = uniform_power_distance(gamma_th, aperture)
    if d_t is not None and d_r is not None:
        out["rayleigh_array"] = rayleigh(d_t, d_r, wavelength)
        out["mimo_ard"] = mimo_ard(d_t, d_r, wavelength)
        if epsilon is not None:
            out["capacity_threshold"] = capacity_threshold_distance(
                epsilon, d_t, d_r, wavelength, rot_t, rot_r)
    if element_diagonal is not None and n_antennas is not None:
        out["bjornson"] = bjornson_distance(element_diagonal, n_antennas)
    if tau_g is not None and spacing_t is not None and spacing_r is not None:
        out["eigen_threshold"] = eigen_threshold_distance(
            tau_g, spacing_t, spacing_r, wavelength, rot_t, rot_r)
    return out


# ----------------------------------------------------------------------
# numerical boundary solver
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EdofRatioObjective:
    """Spherical-over-planar EDoF ratio crossing ``threshold`` (> 1)."""

    threshold: float
    planar_multipath_reference: bool = False

    def __post_init__(self) -> None:
        if not self.threshold > 1.0:
            raise ValueError("EDoF ratio threshold must exceed 1")


@dataclass(frozen=True)
class EigenRatioObjective:
    """m-th-to-largest Gram eigenvalue ratio crossing ``ratio_db`` (dB)."""

    ratio_db: float
    m: int = 2

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError("m must be at least 2")


@dataclass(frozen=True)
class CapacityRatioObjective:
    """Spherical-over-planar capacity ratio crossing ``factor`` at ``snr``."""

    factor: float
    snr: float

    def __post_init__(self) -> None:
        if not self.factor > 1.0:
            raise ValueError("capacity ratio factor must exceed 1")
        if not self.snr > 0.0:
            raise ValueError("snr must be positive (linear units)")


Objective = EdofRatioObjective | EigenRatioObjective | CapacityRatioObjective


@dataclass
class BoundaryResult:
    """Outcome of a boundary computation."""

    criterion: str
    distance: float
    converged: bool
    residual: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "distance_m": self.distance,
            "converged": self.converged,
            "residual": self.residual,
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _objective_fn(scene: LinkScene, objective: Objective,
                  scale_scatterers: bool) -> tuple[Callable[[float], float], float, float, str]:
    """(f, target, tolerance, name) for a solver objective."""
    if isinstance(objective, EdofRatioObjective):
        def f(d: float) -> float:
            return edof_ratio(scene.at_distance(d, scale_scatterers),
                              planar_multipath_reference=objective.planar_multipath_reference)
        return f, objective.threshold, 1e-6, f"edof_ratio_{objective.threshold:g}"
    if isinstance(objective, EigenRatioObjective):
        def f(d: float) -> float:
            return eigen_ratio_db(scene.at_distance(d, scale_scatterers), m=objective.m)
        return f, objective.ratio_db, 0.01, f"eigen_ratio_{objective.ratio_db:g}db"
    if isinstance(objective, CapacityRatioObjective):
        def f(d: float) -> float:
            s = scene.at_distance(d, scale_scatterers)
            c_swm = capacity(composite_channel(s, "swm"), objective.snr)
            c_pwm = capacity(los_channel_pwm(s), objective.snr)
            return c_swm / c_pwm
        return f, objective.factor, 1e-6, f"capacity_ratio_{objective.factor:g}"
    raise TypeError(f"unknown objective {objective!r}")


def solve_numerical(
    scene: LinkScene,
    objective: Objective,
    bracket: tuple[float, float] | None = None,
    *,
    scan_factor: float = 1.2,
    rel_tol: float = 1e-4,
    max_bisect: int = 200,
    scale_scatterers: bool = True,
) -> BoundaryResult:
    """Largest distance at which the objective crosses its threshold.

    A geometric scan (``scan_factor`` spacing) over the bracket locates the
    outermost above-to-below sign change, which bisection then refines to
    ``rel_tol`` relative distance accuracy and to the objective tolerance.
    Without an explicit bracket the scan runs from the summed apertures out
    to ``1e4`` times the array-to-array Rayleigh distance.

    When the objective never exceeds the threshold the boundary is reported
    as 0 with ``converged=False``; multiple crossings set a
    ``non_monotone`` flag in the metadata.
    """
    f, target, tol, name = _objective_fn(scene, objective, scale_scatterers)
    if bracket is None:
        d_lo = scene.tx.aperture + scene.rx.aperture
        d_hi = 1e4 * rayleigh(scene.tx.aperture, scene.rx.aperture, scene.wavelength)
        d_hi = max(d_hi, 10.0 * d_lo)
    else:
        d_lo, d_hi = float(bracket[0]), float(bracket[1])
        if not 0.0 < d_lo < d_hi:
            raise ValueError("bracket must satisfy 0 < d_lo < d_hi")
    metadata: dict = {"target": target, "scan_lo_m": d_lo, "scan_hi_m": d_hi}

    n_steps = max(1, math.ceil(math.log(d_hi / d_lo) / math.log(scan_factor)))
    grid = np.geomspace(d_lo, d_hi, n_steps + 1)
    values = np.array([f(d) for d in grid])
    above = values >= target

    if not above.any():
        metadata["reason"] = "objective never reaches the threshold"
        return BoundaryResult(name, 0.0, False, float(target - values.max()), metadata)
    if above[-1]:
        metadata["reason"] = "objective still above the threshold at the bracket top"
        return BoundaryResult(name, float(d_hi), False, float(values[-1] - target), metadata)

    crossings = np.flatnonzero(above[:-1] & ~above[1:])
    if crossings.size > 1:
        metadata["non_monotone"] = True
        metadata["crossing_count"] = int(crossings.size)
    i = int(crossings[-1])
    lo, hi = float(grid[i]), float(grid[i + 1])

    mid = math.sqrt(lo * hi)
    val = f(mid)
    for _ in range(max_bisect):
        if abs(val - target) <= tol and (hi - lo) / hi <= rel_tol:
            break
        if val >= target:
            lo = mid
        else:
            hi = mid
        mid = math.sqrt(lo * hi)
        val = f(mid)
    residual = abs(val - target)
    converged = residual <= tol and (hi - lo) / hi <= rel_tol
    metadata["bracket_m"] = (lo, hi)
    return BoundaryResult(name, mid, converged, float(residual), metadata)


# ----------------------------------------------------------------------
# auxiliary-constant calibration
# ----------------------------------------------------------------------

class FitDiverged(RuntimeError):
    """The compact expression cannot follow the numerical boundary."""


def ebd_closed_form_prefactor(scene: LinkScene) -> float:
    """Compact EDoF-boundary expression evaluated at unit auxiliary constant."""
    if isinstance(scene.kind, UlaToUla):
        return ebd_closed_form_ula_ula(scene.tx.lengths[0], scene.rx.lengths[0],
                                       scene.wavelength, scene.kind.alpha,
                                       scene.kind.beta, 1.0)
    if isinstance(scene.kind, UraToUla):
        return ebd_closed_form_ura_ula(scene.rx.lengths[0], scene.tx.lengths[0],
                                       scene.tx.lengths[1], scene.wavelength,
                                       scene.kind.theta, 1.0)
    raise ValueError(f"unknown scene kind {scene.kind!r}")


def fit_aux(prefactors: Sequence[float], distances: Sequence[float]) -> tuple[float, float]:
    """Least-squares auxiliary constant for ``distance = prefactor / aux``.

    Returns the fitted constant and the maximum relative deviation of the
    fit from the supplied distances.
    """
    k = np.asarray(prefactors, dtype=float)
    y = np.asarray(distances, dtype=float)
    if k.shape != y.shape or k.ndim != 1 or k.size < 1:
        raise ValueError("prefactors and distances must be equal-length 1-D sequences")
    if np.any(k <= 0.0) or np.any(y <= 0.0):
        raise ValueError("prefactors and distances must be positive")
    aux = float(np.sum(k * k) / np.sum(k * y))
    deviation = float(np.max(np.abs(k / aux - y) / y))
    return aux, deviation


@dataclass
class CalibrationResult:
    """Fitted auxiliary constant plus the sweep it was fitted on."""

    aux: float
    max_rel_deviation: float
    threshold: float
    apertures: tuple[float, ...]
    distances: tuple[float, ...]
    prefactors: tuple[float, ...]
    metadata: dict = field(default_factory=dict)


def calibrate_aux(
    scene_family: Callable[[float], LinkScene],
    threshold: float,
    apertures: Sequence[float],
    *,
    max_deviation: float = 0.25,
    **solver_kwargs,
) -> CalibrationResult:
    """Fit the compact expression's auxiliary constant over an aperture sweep.

    ``scene_family`` maps an aperture to a scene; the numerical
    EDoF-ratio boundary at ``threshold`` is solved per aperture and the
    auxiliary constant is fitted by least squares.  Raises
    :class:`FitDiverged` when the maximum relative deviation exceeds
    ``max_deviation`` (the compact form does not apply).
    """
    apertures = tuple(float(a) for a in apertures)
    if len(apertures) < 3:
        raise ValueError("calibration needs at least 3 sweep points")
    distances = []
    prefactors = []
    all_converged = True
    for aperture in apertures:
        scene = scene_family(aperture)
        result = solve_numerical(scene, EdofRatioObjective(threshold), **solver_kwargs)
        all_converged = all_converged and result.converged
        distances.append(result.distance)
        prefactors.append(ebd_closed_form_prefactor(scene))
    aux, deviation = fit_aux(prefactors, distances)
    metadata = {"all_converged": all_converged, "threshold": threshold}
    if deviation > max_deviation:
        raise FitDiverged(
            f"max relative deviation {deviation:.3f} exceeds {max_deviation:.3f}; "
            "the compact expression does not fit this configuration")
    return CalibrationResult(aux, deviation, threshold, apertures,
                             tuple(distances), tuple(prefactors), metadata)
