"""Non-coherent detection.

The detectors average received samples directly (not their energies):
Manchester compares the magnitudes of the two half-frame averages Z0 and
Z1, so its decision rule needs no system parameter at all; direct OOK
compares a single full-frame average against a variance-derived
threshold.  The multi-antenna chain phase-aligns every antenna to the
direct link, subtracts the reference antenna (exact DL nulling) and
combines the residual with MMSE weights against the colored residual
noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateVariancesError,
    InsufficientAntennasError,
    OddSampleCountError,
    SingularCovarianceError,
)
from .phy import ArrayGeometry


class TestStatistics(NamedTuple):
    """Half-frame averages of a Manchester frame."""

    z0: complex
    z1: complex


def test_statistics_manchester(frame) -> TestStatistics:
    """Z0 = (2/N) sum of the first N/2 samples, Z1 the same over the
    second half.  frame may carry leading batch dimensions."""
    frame = np.asarray(frame)
    n = frame.shape[-1]
    if n % 2:
        raise OddSampleCountError("Manchester statistics need an even frame")
    z0 = frame[..., : n // 2].mean(axis=-1)
    z1 = frame[..., n // 2 :].mean(axis=-1)
    return TestStatistics(z0, z1)


def test_statistic_ook(frame):
    """Full-frame average Z = (1/N) sum y[n]."""
    return np.asarray(frame).mean(axis=-1)


def decide_manchester(z0, z1):
    """Bit decision |z0|^2 > |z1|^2 -> 1, else 0 (ties resolve to 0).

    Independent of every system parameter; scale-invariant in (z0, z1).
    """
    return (np.abs(np.asarray(z0)) ** 2 > np.abs(np.asarray(z1)) ** 2).astype(int)


def ook_threshold(s0: float, s1: float) -> float:
    """Optimal |Z|^2 threshold between exponential hypotheses with means
    s0 (tag off) and s1 (tag on):  tau = ln(s1/s0) s1 s0 / (s1 - s0).

    Approaches s0 in the s1 -> s0 limit, but equal variances mean the
    hypotheses are indistinguishable, hence the error below.
    """
    if not (s1 > s0 > 0.0):
        raise DegenerateVariancesError(
            "ook_threshold needs s1 > s0 > 0 (got s0=%g, s1=%g)" % (s0, s1)
        )
    r = s1 / s0
    # log(r)/(r-1) via log1p for stability near r = 1.
    return s1 * np.log1p(r - 1.0) / (r - 1.0)


def decide_ook(z, tau: float):
    """Bit decision |z|^2 > tau -> 1, else 0 (ties resolve to 0)."""
    return (np.abs(np.asarray(z)) ** 2 > tau).astype(int)


def dl_cancel(frame, phi1):
    """Direct-link cancellation across the array.

    Forms y~_i[n] = exp(-j i phi1) y_i[n] - y_0[n] for i = 1..m_r-1.
    The DL term cancels exactly; the BL term picks up the coefficient
    exp(j i (phi2 - phi1)) - 1, and the noise becomes
    exp(-j i phi1) w_i[n] - w_0[n] (correlated across i through the
    common w_0).  frame: (..., m_r, n) -> (..., m_r - 1, n).
    """
    frame = np.asarray(frame)
    m_r = frame.shape[-2]
    if m_r < 2:
        raise InsufficientAntennasError("dl_cancel needs m_r >= 2")
    i = np.arange(1, m_r)
    ph = np.exp(-1j * np.multiply.outer(np.asarray(phi1), i))[..., :, None]
    return ph * frame[..., 1:, :] - frame[..., 0:1, :]


def steering_residual(m_r: int, delta_phi) -> np.ndarray:
    """Post-cancellation BL steering vector, entries
    exp(j i delta_phi) - 1 for i = 1..m_r-1 (magnitudes
    2 |sin(i delta_phi / 2)|).  delta_phi may carry batch dims."""
    i = np.arange(1, m_r)
    return np.exp(1j * np.multiply.outer(np.asarray(delta_phi), i)) - 1.0


def antenna_gain(m_r: int, delta_phi):
    """Closed-form array gain of the backscatter link after cancellation
    and MMSE combining:

        G = m_r - sin^2(m_r dphi/2) / (m_r sin^2(dphi/2)),

    evaluated through the equivalent cancellation-free expansion

        G = (4/m_r) sum_{m=1}^{m_r-1} (m_r - m) sin^2(m dphi/2),

    which is exact at the removable singularities (dphi = 0 and any
    multiple of 2 pi, where the two links are indistinguishable to the
    array and G = 0).  Vectorized over delta_phi; G lies in [0, m_r].
    """
    if m_r < 2:
        raise InsufficientAntennasError("antenna_gain needs m_r >= 2")
    dphi = np.asarray(delta_phi, dtype=float)
    m = np.arange(1, m_r)
    terms = (m_r - m) * np.sin(np.multiply.outer(dphi, m) / 2.0) ** 2
    g = 4.0 / m_r * terms.sum(axis=-1)
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class MmseWeights:
    """Combining weights for the cancelled array output.

    Built from the noise covariance normalized to unit noise power,
    K = I + 1 1^T (the common -w_0 couples every entry), so the combined
    stream keeps per-sample noise variance sigma_n^2 and the backscatter
    term is scaled by sqrt(gain).  The bit decision is scale-invariant,
    so this normalization is a pure bookkeeping choice.
    """

    a_tilde: np.ndarray
    weights: np.ndarray
    gain: float


def mmse_weights(geom: ArrayGeometry, sigma_n_sq: float = 1.0) -> MmseWeights:
    """MMSE weight vector r = K^-1 a~ / |K^-1/2 a~| and the antenna gain
    sigma_n_sq * a~* K_w~^-1 a~ computed from the covariance directly
    (the closed form in antenna_gain must agree to rounding).

    When the two AoAs coincide the residual steering vector vanishes:
    gain 0, zero weights, and the detector is blind by construction.
    """
    if sigma_n_sq <= 0:
        raise ValueError("sigma_n_sq must be > 0")
    m = geom.m_r
    at = steering_residual(m, geom.phi2 - geom.phi1)
    cov = sigma_n_sq * (np.eye(m - 1) + np.ones((m - 1, m - 1)))
    try:
        k_inv_at = np.linalg.solve(cov, at)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by sigma_n_sq > 0
        raise SingularCovarianceError(str(exc)) from exc
    gain = float(np.real(np.conj(at) @ k_inv_at) * sigma_n_sq)
    if gain <= 0.0:
        return MmseWeights(a_tilde=at, weights=np.zeros_like(at), gain=0.0)
    # Scale so that w* K w = sigma_n_sq, i.e. weights built from the
    # unit-noise covariance K / sigma_n_sq.
    w = k_inv_at * sigma_n_sq / np.sqrt(gain)
    return MmseWeights(a_tilde=at, weights=w, gain=gain)


def ma_effective_frame(frame, geom: ArrayGeometry, sigma_n_sq: float = 1.0):
    """Full array front end: cancel the direct link, then combine with
    the MMSE weights.  Output feeds the same scalar detectors as the
    single-antenna receiver; shape (..., m_r, n) -> (..., n)."""
    resid = dl_cancel(frame, geom.phi1)
    w = mmse_weights(geom, sigma_n_sq).weights
    return np.einsum("i,...in->...n", np.conj(w), resid)
