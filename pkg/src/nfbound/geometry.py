"""Array layouts, link scenes, and 3-D element coordinates.

Coordinate conventions: the base-station (transmit) array is centered at
the origin with boresight along +Y.  A base-station ULA runs along the Z
axis; a base-station URA lies in the XZ plane.  The user (receive) array
is always a ULA and its placement depends on the scene kind:

* ``UlaToUla``: the user center sits at ``distance * (0, cos(alpha),
  sin(alpha))``, i.e. ``alpha`` elevates the link direction from the +Y
  boresight within the YZ plane, and the user axis points along
  ``(0, sin(beta), cos(beta))``, so ``beta`` tilts it away from +Z within
  the YZ plane.
* ``UraToUla``: the user center sits at ``(0, distance, 0)`` and the user
  axis points along ``(sin(theta), 0, cos(theta))``, parallel to the XZ
  plane.

All angles are radians and are stored normalized to (-pi, pi].  The
broadside-parallel configuration corresponds to all angles equal to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ArraySpec",
    "LinkScene",
    "ScattererSet",
    "UlaToUla",
    "UraToUla",
    "bs_element_positions",
    "half_wavelength_ula",
    "half_wavelength_ura",
    "normalize_angle",
    "scene_positions",
    "user_element_positions",
]


def normalize_angle(angle: float) -> float:
    """Map an angle in radians to the interval (-pi, pi]."""
    a = math.remainder(float(angle), math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


def _cos_sin(angle: float) -> tuple[float, float]:
    # Snap near-zero / near-unit components so cardinal orientations give
    # exact unit vectors (e.g. theta = pi/2 -> direction (1, 0, 0)).
    c = math.cos(angle)
    s = math.sin(angle)
    if abs(c) < 1e-15:
        c = 0.0
    elif abs(abs(c) - 1.0) < 1e-15:
        c = math.copysign(1.0, c)
    if abs(s) < 1e-15:
        s = 0.0
    elif abs(abs(s) - 1.0) < 1e-15:
        s = math.copysign(1.0, s)
    return c, s


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and positive, got {value!r}")
    return value


@dataclass(frozen=True)
class ArraySpec:
    """Uniform antenna array layout.

    A ULA carries one element count and one length (its aperture); a URA
    carries per-axis counts ``(n_x, n_z)`` and side lengths
    ``(length_x, length_z)``.  Element spacing per axis is
    ``length / (count - 1)``; single-element "arrays" are rejected.
    """

    kind: str
    counts: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("ula", "ura"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        counts = tuple(int(c) for c in self.counts)
        lengths = tuple(float(x) for x in self.lengths)
        n_axes = 1 if self.kind == "ula" else 2
        if len(counts) != n_axes or len(lengths) != n_axes:
            raise ValueError(f"a {self.kind} needs {n_axes} count(s) and length(s)")
        if any(c < 2 for c in counts):
            raise ValueError("arrays need at least 2 elements per axis")
        if any(not math.isfinite(x) or x <= 0.0 for x in lengths):
            raise ValueError("array lengths must be finite and positive")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def ula(cls, n_elements: int, length: float) -> "ArraySpec":
        return cls("ula", (n_elements,), (length,))

    @classmethod
    def ura(cls, n_x: int, n_z: int, length_x: float, length_z: float) -> "ArraySpec":
        return cls("ura", (n_x, n_z), (length_x, length_z))

    @property
    def n_total(self) -> int:
        n = 1
        for c in self.counts:
            n *= c
        return n

    @property
    def aperture(self) -> float:
        """Maximum extent: the ULA length, or the URA diagonal."""
        if self.kind == "ula":
            return self.lengths[0]
        return math.hypot(*self.lengths)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(x / (c - 1) for x, c in zip(self.lengths, self.counts))

    def axis_offsets(self, axis: int = 0) -> np.ndarray:
        """Element offsets along one axis, centered on zero."""
        n = self.counts[axis]
        return (np.arange(n) - (n - 1) / 2.0) * self.spacings[axis]


def _half_wavelength_axis(length: float, wavelength: float) -> tuple[int, float]:
    # Count rounded down to what fits, floored at two elements; the realized
    # length (count - 1) * wavelength / 2 is what the spec stores.
    spacing = wavelength / 2.0
    n = max(2, int(math.floor(length / spacing)) + 1)
    return n, (n - 1) * spacing


def half_wavelength_ula(length: float, wavelength: float) -> ArraySpec:
    """ULA with half-wavelength element spacing fitted inside ``length``."""
    _check_positive("wavelength", wavelength)
    if not math.isfinite(length) or length < 0.0:
        raise ValueError("length must be finite and non-negative")
    n, realized = _half_wavelength_axis(length, wavelength)
    return ArraySpec.ula(n, realized)


def half_wavelength_ura(length_x: float, length_z: float, wavelength: float) -> ArraySpec:
    """URA with half-wavelength element spacing fitted inside the side lengths."""
    _check_positive("wavelength", wavelength)
    for name, val in (("length_x", length_x), ("length_z", length_z)):
        if not math.isfinite(val) or val < 0.0:
            raise ValueError(f"{name} must be finite and non-negative")
    n_x, real_x = _half_wavelength_axis(length_x, wavelength)
    n_z, real_z = _half_wavelength_axis(length_z, wavelength)
    return ArraySpec.ura(n_x, n_z, real_x, real_z)


@dataclass(frozen=True)
class UlaToUla:
    """ULA base station to ULA user.

    ``alpha`` is the elevation of the user-array center from the +Y
    boresight within the YZ plane; ``beta`` is the tilt of the user axis
    from +Z within the YZ plane.
    """

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", normalize_angle(self.alpha))
        object.__setattr__(self, "beta", normalize_angle(self.beta))


@dataclass(frozen=True)
class UraToUla:
    """URA base station to ULA user.

    ``theta`` is the tilt of the user axis from +Z within a plane parallel
    to XZ; the user center lies on the +Y boresight.
    """

    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True, eq=False)
class ScattererSet:
    """Point scatterers with per-scatterer attenuation and phase behaviour.

    ``phase_model`` is ``"per_pair"`` (an independent phase for every
    (scatterer, rx element, tx element) triple) or ``"per_scatterer"`` (one
    phase per scatterer).  ``power_ratio=None`` keeps free-space
    product-of-distances amplitudes; a positive value rescales the aggregate
    scattered matrix so its squared Frobenius norm is that fraction of the
    line-of-sight one.  ``phases`` overrides the seeded draw (shape ``(n,)``
    for per-scatterer or ``(n, nr, nt)`` for per-pair); mainly a test hook.
    """

    positions: np.ndarray
    attenuations: np.ndarray
    phase_model: str = "per_pair"
    power_ratio: float | None = None
    seed: int = 0
    phases: np.ndarray | None = None

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("positions must have shape (n, 3) with n >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("scatterer positions must be finite")
        att = np.array(self.attenuations, dtype=float)
        if att.shape != (pos.shape[0],):
            raise ValueError("attenuations must have one entry per scatterer")
        if not np.all(np.isfinite(att)) or np.any(att < 0.0) or np.any(att > 1.0):
            raise ValueError("attenuations must lie in [0, 1]")
        if self.phase_model not in ("per_pair", "per_scatterer"):
            raise ValueError(f"unknown phase model {self.phase_model!r}")
        if self.power_ratio is not None:
            object.__setattr__(self, "power_ratio", _check_positive("power_ratio", self.power_ratio))
        if self.phases is not None:
            ph = np.array(self.phases, dtype=float)
            if ph.shape[0] != pos.shape[0]:
                raise ValueError("phases must have one leading entry per scatterer")
            ph.setflags(write=False)
            object.__setattr__(self, "phases", ph)
        pos.setflags(write=False)
        att.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "attenuations", att)
        object.__setattr__(self, "seed", int(self.seed))

    def __len__(self) -> int:
        return self.positions.shape[0]

    def take(self, n: int) -> "ScattererSet":
        """First ``n`` scatterers, keeping the seed (coupled sub-sampling)."""
        if not 1 <= n <= len(self):
            raise ValueError(f"cannot take {n} of {len(self)} scatterers")
        phases = None if self.phases is None else self.phases[:n]
        return ScattererSet(self.positions[:n], self.attenuations[:n],
                            self.phase_model, self.power_ratio, self.seed, phases)

    def scaled(self, factor: float) -> "ScattererSet":
        """Positions scaled about the origin by ``factor``."""
        _check_positive("factor", factor)
        return ScattererSet(self.positions * factor, self.attenuations,
                            self.phase_model, self.power_ratio, self.seed, self.phases)


@dataclass(frozen=True)
class LinkScene:
    """A transmit array, a receive array, and their relative placement.

    ``distance`` is center-to-center in meters, ``wavelength`` in meters.
    """

    tx: ArraySpec
    rx: ArraySpec
    distance: float
    wavelength: float
    kind: UlaToUla | UraToUla = UlaToUla()
    scatterers: ScattererSet | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "distance", _check_positive("distance", self.distance))
        object.__setattr__(self, "wavelength", _check_positive("wavelength", self.wavelength))
        if isinstance(self.kind, UlaToUla):
            if self.tx.kind != "ula" or self.rx.kind != "ula":
                raise ValueError("UlaToUla scenes need ULA arrays on both ends")
        elif isinstance(self.kind, UraToUla):
            if self.tx.kind != "ura" or self.rx.kind != "ula":
                raise ValueError("UraToUla scenes need a URA transmitter and a ULA receiver")
        else:
            raise ValueError(f"unknown scene kind {self.kind!r}")

    @property
    def rx_center(self) -> np.ndarray:
        if isinstance(self.kind, UlaToUla):
            c, s = _cos_sin(self.kind.alpha)
            return self.distance * np.array([0.0, c, s])
        return np.array([0.0, self.distance, 0.0])

    @property
    def rx_direction(self) -> np.ndarray:
        if isinstance(self.kind, UlaToUla):
            c, s = _cos_sin(self.kind.beta)
            return np.array([0.0, s, c])
        c, s = _cos_sin(self.kind.theta)
        return np.array([s, 0.0, c])

    def at_distance(self, distance: float, scale_scatterers: bool = True) -> "LinkScene":
        """Same scene at a new center distance.

        With ``scale_scatterers`` the scatterer cloud is dilated
        proportionally, keeping the scattering geometry self-similar.
        """
        distance = _check_positive("distance", distance)
        scatterers = self.scatterers
        if scatterers is not None and scale_scatterers and distance != self.distance:
            scatterers = scatterers.scaled(distance / self.distance)
        return replace(self, distance=distance, scatterers=scatterers)


def _line_positions(n: int, spacing: float, center: np.ndarray, direction: np.ndarray) -> np.ndarray:
    offsets = (np.arange(n) - (n - 1) / 2.0) * spacing
    return center[None, :] + offsets[:, None] * direction[None, :]


def bs_element_positions(spec: ArraySpec) -> np.ndarray:
    """Element coordinates of the base-station array centered at the origin.

    A ULA runs along Z; a URA lies in the XZ plane with columns spaced
    along X (slow index) and rows along Z (fast index).
    """
    if spec.kind == "ula":
        z = spec.axis_offsets(0)
        pos = np.zeros((spec.counts[0], 3))
        pos[:, 2] = z
        return pos
    x = spec.axis_offsets(0)
    z = spec.axis_offsets(1)
    pos = np.zeros((spec.n_total, 3))
    pos[:, 0] = np.repeat(x, spec.counts[1])
    pos[:, 2] = np.tile(z, spec.counts[0])
    return pos


def user_element_positions(spec: ArraySpec, kind: UlaToUla | UraToUla, distance: float) -> np.ndarray:
    """Element coordinates of the user ULA placed per the scene kind."""
    if spec.kind != "ula":
        raise ValueError("the user array must be a ULA")
    distance = _check_positive("distance", distance)
    if isinstance(kind, UlaToUla):
        ca, sa = _cos_sin(kind.alpha)
        cb, sb = _cos_sin(kind.beta)
        center = distance * np.array([0.0, ca, sa])
        direction = np.array([0.0, sb, cb])
    elif isinstance(kind, UraToUla):
        ct, st = _cos_sin(kind.theta)
        center = np.array([0.0, distance, 0.0])
        direction = np.array([st, 0.0, ct])
    else:
        raise ValueError(f"unknown scene kind {kind!r}")
    return _line_positions(spec.counts[0], spec.spacings[0], center, direction)


def scene_positions(scene: LinkScene) -> tuple[np.ndarray, np.ndarray]:
    """(transmit, receive) element coordinates for a scene."""
    return (bs_element_positions(scene.tx),
            user_element_positions(scene.rx, scene.kind, scene.distance))
