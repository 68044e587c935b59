"""Channel matrices under spherical (exact) and planar (rank-1) wavefronts.

The spherical model uses exact per-element-pair Euclidean distances for
both amplitude (free-space, ``wavelength / (4 pi d)``) and phase.  The
planar model keeps the center-to-center amplitude for every entry and a
phase that is linear in the element offsets, i.e. the first-order Taylor
expansion of the spherical distances, which makes it exactly rank one.

Scattered paths follow the product-of-distances amplitude law: each
scatterer contributes ``attenuation * (wavelength / 4 pi) /
(d_tx_to_scatterer * d_scatterer_to_rx)`` per element pair, with a phase
accumulated over both legs plus a random shift drawn per pair or per
scatterer.  Random phases come from a counter-based generator keyed on the
scatterer-set seed, so results are reproducible and order-independent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import LinkScene, ScattererSet, scene_positions

__all__ = [
    "ChannelMatrix",
    "composite_channel",
    "free_space_gain",
    "los_channel_pwm",
    "los_channel_swm",
    "los_entries_pwm",
    "los_entries_swm",
    "pairwise_distances",
    "sample_scatterer_set",
    "scattered_channel",
]

TWO_PI = 2.0 * math.pi

# Stream tags for the counter-based generator, one per consumer so draws
# never alias across uses of the same seed.
_PAIR_PHASE_STREAM = 1
_SCATTERER_PHASE_STREAM = 2
_PLACEMENT_STREAM = 3


def _philox(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=(int(seed), int(stream))))
    )


def free_space_gain(wavelength: float, distance) -> np.ndarray | float:
    """Free-space amplitude gain ``wavelength / (4 pi distance)``."""
    return wavelength / (4.0 * math.pi * distance)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Complex per-element-pair gains, receive elements along rows."""

    entries: np.ndarray
    wavelength: float
    model: str  # "swm" | "pwm"
    center_distance: float | None = None

    def __post_init__(self) -> None:
        h = np.asarray(self.entries, dtype=complex)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise ValueError("channel entries must form a 2-D matrix")
        if not np.all(np.isfinite(h)):
            raise ValueError("channel entries must be finite")
        if self.model not in ("swm", "pwm"):
            raise ValueError(f"unknown channel model {self.model!r}")
        object.__setattr__(self, "entries", h)

    @property
    def nr(self) -> int:
        return self.entries.shape[0]

    @property
    def nt(self) -> int:
        return self.entries.shape[1]

    def to_csv(self, target) -> None:
        """Write one row per receive element, entries as "re,im" pairs."""
        if hasattr(target, "write"):
            self._write_csv(target)
        else:
            with open(target, "w", newline="", encoding="utf-8") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"tx{j}" for j in range(self.nt)])
        for row in self.entries:
            writer.writerow([f"{z.real:.17g},{z.imag:.17g}" for z in row])


def channel_from_csv(source) -> np.ndarray:
    """Read entries written by :meth:`ChannelMatrix.to_csv`."""
    if hasattr(source, "read"):
        rows = list(csv.reader(source))
    else:
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    data = []
    for row in rows[1:]:
        data.append([complex(*map(float, cell.split(","))) for cell in row])
    return np.array(data, dtype=complex)


def pairwise_distances(rx_positions: np.ndarray, tx_positions: np.ndarray) -> np.ndarray:
    """Euclidean distances, shape (n_rx, n_tx)."""
    rx = np.asarray(rx_positions, dtype=float)
    tx = np.asarray(tx_positions, dtype=float)
    return np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)


def los_entries_swm(tx_positions, rx_positions, wavelength: float) -> np.ndarray:
    """Spherical-wavefront entries from raw element coordinates."""
    d = pairwise_distances(rx_positions, tx_positions)
    if np.any(d <= 0.0):
        raise ValueError("overlapping transmit/receive elements (zero distance)")
    return free_space_gain(wavelength, d) * np.exp(-1j * TWO_PI * d / wavelength)


def los_entries_pwm(tx_positions, rx_positions, tx_center, rx_center, wavelength: float) -> np.ndarray:
    """Planar-wavefront entries: rank-1, single amplitude, linear phase."""
    tx_center = np.asarray(tx_center, dtype=float)
    rx_center = np.asarray(rx_center, dtype=float)
    link = rx_center - tx_center
    d0 = float(np.linalg.norm(link))
    if d0 <= 0.0:
        raise ValueError("coincident array centers")
    u = link / d0
    rx_lin = (np.asarray(rx_positions, dtype=float) - rx_center) @ u
    tx_lin = (np.asarray(tx_positions, dtype=float) - tx_center) @ u
    g0 = free_space_gain(wavelength, d0)
    phase0 = np.exp(-1j * TWO_PI * d0 / wavelength)
    rx_factor = np.exp(-1j * TWO_PI * rx_lin / wavelength)
    tx_factor = np.exp(1j * TWO_PI * tx_lin / wavelength)
    return g0 * phase0 * np.outer(rx_factor, tx_factor)


def los_channel_swm(scene: LinkScene) -> ChannelMatrix:
    """Line-of-sight spherical-wavefront channel for a scene."""
    tx_pos, rx_pos = scene_positions(scene)
    entries = los_entries_swm(tx_pos, rx_pos, scene.wavelength)
    return ChannelMatrix(entries, scene.wavelength, "swm", scene.distance)


def los_channel_pwm(scene: LinkScene) -> ChannelMatrix:
    """Line-of-sight planar-wavefront channel for a scene."""
    tx_pos, rx_pos = scene_positions(scene)
    entries = los_entries_pwm(tx_pos, rx_pos, np.zeros(3), scene.rx_center, scene.wavelength)
    return ChannelMatrix(entries, scene.wavelength, "pwm", scene.distance)


def _scatter_phases(sc: ScattererSet, nr: int, nt: int) -> np.ndarray:
    n = len(sc)
    if sc.phases is not None:
        ph = sc.phases
        if sc.phase_model == "per_scatterer":
            if ph.shape != (n,):
                raise ValueError("per-scatterer phase override must have shape (n,)")
            return ph[:, None, None]
        if ph.shape != (n, nr, nt):
            raise ValueError("per-pair phase override must have shape (n, nr, nt)")
        return ph
    if sc.phase_model == "per_scatterer":
        rng = _philox(sc.seed, _SCATTERER_PHASE_STREAM)
        return rng.uniform(0.0, TWO_PI, size=n)[:, None, None]
    rng = _philox(sc.seed, _PAIR_PHASE_STREAM)
    return rng.uniform(0.0, TWO_PI, size=(n, nr, nt))


def scattered_channel(scene: LinkScene, model: str = "swm") -> ChannelMatrix:
    """Aggregate single-bounce scattered channel for a scene.

    Under the planar model each leg is linearized about the scatterer
    direction seen from the respective array center, so every scatterer
    contributes an exactly rank-1 term with a single amplitude.
    """
    sc = scene.scatterers
    if sc is None or len(sc) == 0:
        raise ValueError("scene has no scatterers")
    if model not in ("swm", "pwm"):
        raise ValueError(f"unknown channel model {model!r}")
    tx_pos, rx_pos = scene_positions(scene)
    nr, nt = rx_pos.shape[0], tx_pos.shape[0]
    lam = scene.wavelength
    amp_const = lam / (4.0 * math.pi)
    phases = _scatter_phases(sc, nr, nt)
    entries = np.zeros((nr, nt), dtype=complex)
    if model == "swm":
        d_ts = np.linalg.norm(sc.positions[:, None, :] - tx_pos[None, :, :], axis=-1)
        d_sr = np.linalg.norm(rx_pos[None, :, :] - sc.positions[:, None, :], axis=-1)
        if np.any(d_ts <= 0.0) or np.any(d_sr <= 0.0):
            raise ValueError("scatterer coincides with an array element")
        for s in range(len(sc)):
            path = d_sr[s][:, None] + d_ts[s][None, :]
            amp = sc.attenuations[s] * amp_const / (d_sr[s][:, None] * d_ts[s][None, :])
            entries += amp * np.exp(-1j * TWO_PI * path / lam + 1j * phases[s])
    else:
        tx_center = np.zeros(3)
        rx_center = scene.rx_center
        tx_off = tx_pos - tx_center
        rx_off = rx_pos - rx_center
        for s in range(len(sc)):
            p = sc.positions[s]
            d1 = float(np.linalg.norm(p - tx_center))
            d2 = float(np.linalg.norm(rx_center - p))
            if d1 <= 0.0 or d2 <= 0.0:
                raise ValueError("scatterer coincides with an array center")
            u1 = (p - tx_center) / d1
            u2 = (rx_center - p) / d2
            leg1 = d1 - tx_off @ u1
            leg2 = d2 + rx_off @ u2
            amp = sc.attenuations[s] * amp_const / (d1 * d2)
            path = leg2[:, None] + leg1[None, :]
            entries += amp * np.exp(-1j * TWO_PI * path / lam + 1j * phases[s])
    if sc.power_ratio is not None:
        los = los_channel_swm(scene) if model == "swm" else los_channel_pwm(scene)
        target = sc.power_ratio * float(np.sum(np.abs(los.entries) ** 2))
        current = float(np.sum(np.abs(entries) ** 2))
        if current <= 0.0:
            raise ValueError("cannot rescale a zero-power scattered channel")
        entries *= math.sqrt(target / current)
    return ChannelMatrix(entries, lam, model, scene.distance)


def composite_channel(scene: LinkScene, model: str = "swm", include_los: bool = True) -> ChannelMatrix:
    """Line-of-sight plus scattered channel (or either part alone)."""
    has_scatterers = scene.scatterers is not None and len(scene.scatterers) > 0
    if not include_los and not has_scatterers:
        raise ValueError("composite channel with neither line of sight nor scatterers")
    if not has_scatterers:
        return los_channel_swm(scene) if model == "swm" else los_channel_pwm(scene)
    scat = scattered_channel(scene, model)
    if not include_los:
        return scat
    los = los_channel_swm(scene) if model == "swm" else los_channel_pwm(scene)
    return ChannelMatrix(los.entries + scat.entries, scene.wavelength, model, scene.distance)


def sample_scatterer_set(
    n: int,
    lower,
    upper,
    *,
    seed: int = 0,
    avoid=None,
    guard_radius: float = 0.0,
    attenuations=None,
    phase_model: str = "per_pair",
    power_ratio: float | None = None,
) -> ScattererSet:
    """Draw ``n`` scatterers uniformly inside an axis-aligned box.

    Points closer than ``guard_radius`` to any coordinate in ``avoid``
    (typically the array elements) are rejected and redrawn.  Attenuations
    default to a uniform draw on [0, 1] from the same seeded stream.
    """
    if n < 1:
        raise ValueError("need at least one scatterer")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (3,) or upper.shape != (3,) or np.any(upper <= lower):
        raise ValueError("box bounds must be 3-vectors with upper > lower")
    avoid = None if avoid is None else np.asarray(avoid, dtype=float)
    rng = _philox(seed, _PLACEMENT_STREAM)
    accepted = []
    attempts = 0
    max_attempts = max(10_000, 1_000 * n)
    while len(accepted) < n:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError("scatterer placement rejected too often; shrink the guard radius")
        point = rng.uniform(lower, upper)
        if avoid is not None and guard_radius > 0.0:
            if np.min(np.linalg.norm(avoid - point[None, :], axis=1)) < guard_radius:
                continue
        accepted.append(point)
    positions = np.array(accepted)
    if attenuations is None:
        attenuations = rng.uniform(0.0, 1.0, size=n)
    return ScattererSet(positions, attenuations, phase_model, power_ratio, seed)


def scene_element_coordinates(scene: LinkScene) -> np.ndarray:
    """All element coordinates of a scene stacked, transmit first."""
    tx_pos, rx_pos = scene_positions(scene)
    return np.vstack([tx_pos, rx_pos])
