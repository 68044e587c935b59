"""Effective degrees of freedom, eigenvalue spectra, and channel capacity.

EDoF is ``(tr R / ||R||_F)**2`` with ``R`` the Gram (covariance) matrix of
the channel, i.e. the effective number of equal-power sub-channels.  It is
invariant to channel scaling and to which side the Gram matrix is formed
on.  Capacity uses equal power allocation with the channel normalized by
the center-to-center free-space gain, so the SNR argument is the
per-branch receive SNR referenced at the array centers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix, composite_channel, free_space_gain, los_channel_pwm
from .geometry import LinkScene

__all__ = [
    "EdofReport",
    "capacity",
    "capacity_error",
    "covariance",
    "edof",
    "edof_ratio",
    "edof_report",
    "eigen_ratio_db",
]


def _entries(h) -> np.ndarray:
    if isinstance(h, ChannelMatrix):
        return h.entries
    m = np.asarray(h, dtype=complex)
    if m.ndim != 2:
        raise ValueError("channel must be a 2-D matrix")
    return m


def covariance(h) -> np.ndarray:
    """Gram matrix of the channel, formed on the smaller dimension side.

    Both sides share the same nonzero eigenvalues, trace, and Frobenius
    norm, so every downstream statistic is side-independent.
    """
    m = _entries(h)
    if m.shape[0] <= m.shape[1]:
        return m @ m.conj().T
    return m.conj().T @ m


def edof(h) -> float:
    """Effective degrees of freedom ``(tr R / ||R||_F)**2``."""
    r = covariance(h)
    trace = float(np.trace(r).real)
    frob = float(np.linalg.norm(r))
    if frob == 0.0:
        raise ValueError("EDoF is undefined for an all-zero channel")
    return (trace / frob) ** 2


@dataclass(frozen=True)
class EdofReport:
    """EDoF value plus the diagnostics it was computed from."""

    edof: float
    trace: float
    frobenius: float
    eigenvalues: tuple[float, ...]
    model: str
    wavelength: float | None = None

    def to_dict(self) -> dict:
        return {
            "edof": self.edof,
            "trace": self.trace,
            "frobenius": self.frobenius,
            "eigenvalues": list(self.eigenvalues),
            "model": self.model,
            "wavelength": self.wavelength,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def edof_report(h) -> EdofReport:
    """EDoF with the eigenvalue spectrum of the Gram matrix.

    Eigenvalues below ``1e-14 * max`` are clamped to zero for reporting
    only; trace and Frobenius norm come directly from the Gram matrix.
    """
    r = covariance(h)
    trace = float(np.trace(r).real)
    frob = float(np.linalg.norm(r))
    if frob == 0.0:
        raise ValueError("EDoF is undefined for an all-zero channel")
    eig = np.linalg.eigvalsh(r)[::-1]
    eig = np.where(eig < 1e-14 * eig[0], 0.0, eig)
    model = h.model if isinstance(h, ChannelMatrix) else "raw"
    lam = h.wavelength if isinstance(h, ChannelMatrix) else None
    return EdofReport((trace / frob) ** 2, trace, frob, tuple(float(x) for x in eig),
                      model, lam)


def eigen_ratio_db(scene: LinkScene, distance: float | None = None, m: int = 2) -> float:
    """Ratio of the m-th largest to the largest Gram eigenvalue, in dB.

    Gram eigenvalues are power-like quantities, hence ``10 log10``.
    Returns ``-inf`` when the m-th eigenvalue underflows to zero.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    s = scene if distance is None else scene.at_distance(distance)
    h = composite_channel(s, "swm")
    eig = np.linalg.eigvalsh(covariance(h))[::-1]
    if m > eig.size:
        raise ValueError(f"channel supports at most {eig.size} eigenvalues, m={m}")
    lam_1 = float(eig[0])
    lam_m = max(float(eig[m - 1]), 0.0)
    if lam_m == 0.0:
        return -math.inf
    return 10.0 * math.log10(lam_m / lam_1)


def edof_ratio(scene: LinkScene, distance: float | None = None, *,
               planar_multipath_reference: bool = False) -> float:
    """EDoF of the spherical channel over the EDoF of the planar reference.

    Scatterers, when present, enter the spherical numerator; the planar
    reference is line-of-sight only unless ``planar_multipath_reference``
    asks for a planar multipath channel instead.
    """
    s = scene if distance is None else scene.at_distance(distance)
    numerator = composite_channel(s, "swm")
    has_scatterers = s.scatterers is not None and len(s.scatterers) > 0
    if planar_multipath_reference and has_scatterers:
        reference = composite_channel(s, "pwm")
    else:
        reference = los_channel_pwm(s)
    return edof(numerator) / edof(reference)


def capacity(h, snr: float, *, center_gain: float | None = None) -> float:
    """Equal-power log-det capacity in bits/s/Hz.

    The channel is normalized by ``center_gain`` (defaulting to the
    free-space gain at the matrix's center distance) so ``snr`` is the
    per-branch receive SNR at the array centers.
    """
    if not math.isfinite(snr) or snr <= 0.0:
        raise ValueError("snr must be finite and positive (linear units)")
    m = _entries(h)
    if center_gain is None:
        if not isinstance(h, ChannelMatrix) or h.center_distance is None:
            raise ValueError("center_gain is required for channels without a center distance")
        center_gain = free_space_gain(h.wavelength, h.center_distance)
    if center_gain <= 0.0:
        raise ValueError("center_gain must be positive")
    n_t = m.shape[1]
    gram = covariance(m / center_gain)
    eig = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    return float(np.sum(np.log2(1.0 + snr * eig / n_t)))


def capacity_error(scene: LinkScene, distance: float | None, snr: float) -> float:
    """Relative capacity gap ``|C_swm - C_pwm| / C_swm`` at one distance.

    The planar side is the line-of-sight planar reference channel.
    """
    s = scene if distance is None else scene.at_distance(distance)
    c_swm = capacity(composite_channel(s, "swm"), snr)
    c_pwm = capacity(los_channel_pwm(s), snr)
    if c_swm == 0.0:
        raise ValueError("capacity error undefined when the reference capacity is zero")
    return abs(c_swm - c_pwm) / c_swm
