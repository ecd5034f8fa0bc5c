"""Baseband signal composition: ambient source, tag modulation and the
received-sample models of the single-antenna and uniform-linear-array
receivers.

Single-antenna samples follow

    y[n] = h_r[n] x[n] + alpha s[n] h_b[n] h_t[n] x[n] + w[n]

with s[n] the tag's on/off state (Manchester codeword or direct OOK) and
w[n] ~ CN(0, sigma_n^2).  Antenna i of the array adds per-link phase
progressions exp(j i phi_k), phi_k = 2 pi (d/lambda) cos(theta_k), with
antenna 0 as phase reference.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import FadingProcess, complex_normal
from .errors import OddSampleCountError


class SourceKind(enum.Enum):
    COMPLEX_GAUSSIAN = "gaussian"
    QPSK = "qpsk"
    CONSTANT_CARRIER = "carrier"


@dataclass(frozen=True)
class AmbientSource:
    """Ambient transmitter model: i.i.d. samples with E[|X|^2] =
    mean_abs_sq.  Gaussian and QPSK sources are zero mean; the constant
    carrier has |E[X]|^2 = E[|X|^2] (it is deterministic)."""

    kind: SourceKind = SourceKind.COMPLEX_GAUSSIAN
    mean_abs_sq: float = 1.0

    def __post_init__(self):
        if self.mean_abs_sq <= 0:
            raise ValueError("mean_abs_sq must be > 0")

    @property
    def mean(self) -> complex:
        if self.kind is SourceKind.CONSTANT_CARRIER:
            return complex(np.sqrt(self.mean_abs_sq))
        return 0j

    @property
    def mean_sq_mag(self) -> float:
        """|E[X]|^2, the quantity entering the fading-correlation terms."""
        return abs(self.mean) ** 2

    def sample(self, shape, rng) -> np.ndarray:
        if self.kind is SourceKind.COMPLEX_GAUSSIAN:
            return complex_normal(rng, shape, self.mean_abs_sq)
        if self.kind is SourceKind.QPSK:
            sym = np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, shape)))
            return np.sqrt(self.mean_abs_sq) * sym
        return np.full(shape, self.mean)


class Encoding(enum.Enum):
    MANCHESTER = "manchester"
    DIRECT_OOK = "ook"


@dataclass(frozen=True)
class TagParams:
    """Backscatter transmitter: reflection-path coefficient alpha, data
    bit and line code."""

    alpha: complex
    bit: int = 0
    encoding: Encoding = Encoding.MANCHESTER

    def __post_init__(self):
        if abs(self.alpha) > 1.0 + 1e-12:
            raise ValueError("|alpha| must be <= 1")
        if self.bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")


def tag_waveform(tag: TagParams, n: int) -> np.ndarray:
    """Per-sample on/off state of the tag over one backscatter symbol.

    Manchester maps bit 0 to codeword [0 1] (off-half then on-half) and
    bit 1 to [1 0]; both codeword symbols share the N ambient samples of
    a single backscatter symbol.  Direct OOK holds the bit for all N.
    """
    if tag.encoding is Encoding.MANCHESTER:
        if n % 2:
            raise OddSampleCountError("Manchester needs an even sample count")
        return manchester_on_mask(np.asarray(tag.bit), n).astype(float)
    return np.full(n, float(tag.bit))


def manchester_on_mask(bits, n: int) -> np.ndarray:
    """Vectorized Manchester on/off mask; bits may be a scalar or a
     1-D batch, output has shape bits.shape + (n,)."""
    if n % 2:
        raise OddSampleCountError("Manchester needs an even sample count")
    idx = np.arange(n)
    bits = np.asarray(bits)
    return np.where(bits[..., None] == 0, idx >= n // 2, idx < n // 2)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array and the AoAs of the two links (theta1 for
    the direct link, theta2 for the backscatter link)."""

    m_r: int
    theta1: float
    theta2: float
    d_over_lambda: float = 0.5

    def __post_init__(self):
        if self.m_r < 2:
            raise ValueError("m_r must be >= 2")
        if self.d_over_lambda <= 0:
            raise ValueError("d_over_lambda must be > 0")
        for th in (self.theta1, self.theta2):
            if not (-np.pi < th <= np.pi):
                raise ValueError("AoAs must lie in (-pi, pi]")

    @property
    def phi1(self) -> float:
        return 2.0 * np.pi * self.d_over_lambda * np.cos(self.theta1)

    @property
    def phi2(self) -> float:
        return 2.0 * np.pi * self.d_over_lambda * np.cos(self.theta2)


@dataclass(frozen=True)
class NoiseSpec:
    """Receiver noise level.  SNR is defined as E[|X|^2] / sigma_n_sq."""

    sigma_n_sq: float

    def __post_init__(self):
        if self.sigma_n_sq <= 0:
            raise ValueError("sigma_n_sq must be > 0")

    @classmethod
    def from_snr_db(cls, snr_db: float, mean_abs_sq: float = 1.0) -> "NoiseSpec":
        return cls(mean_abs_sq / 10.0 ** (snr_db / 10.0))


def compose_sa(h_r, h_b, h_t, x, w, alpha, on_state):
    """Per-sample single-antenna received signal.  Shape-agnostic: all
    inputs broadcast together, so one call serves a single frame (N,) or
    a batch (B, N)."""
    return h_r * x + alpha * on_state * h_b * h_t * x + w


def compose_ma(dl, bl, w, phi1, phi2, m_r):
    """Stack the array's antennas from the per-sample direct-link and
    backscatter-link contributions.

    dl and bl carry shape (..., N); w carries (..., m_r, N); phi1/phi2
    broadcast against the leading dimensions.  Antenna i picks up phase
    exp(j i phi_k) on link k.
    """
    i = np.arange(m_r)
    ph1 = np.exp(1j * np.multiply.outer(np.asarray(phi1), i))[..., :, None]
    ph2 = np.exp(1j * np.multiply.outer(np.asarray(phi2), i))[..., :, None]
    return ph1 * dl[..., None, :] + ph2 * bl[..., None, :] + w


def sa_received_frame(
    src: AmbientSource,
    tag: TagParams,
    h_r: FadingProcess,
    h_b: FadingProcess,
    h_t: FadingProcess,
    noise: NoiseSpec,
    n: int,
    rng,
) -> np.ndarray:
    """One received frame of n samples at the single-antenna receiver."""
    s = tag_waveform(tag, n)
    x = src.sample(n, rng)
    w = complex_normal(rng, n, noise.sigma_n_sq)
    return compose_sa(h_r.sequence(n), h_b.sequence(n), h_t.sequence(n), x, w, tag.alpha, s)


def ma_received_frame(
    geom: ArrayGeometry,
    src: AmbientSource,
    tag: TagParams,
    h_r: FadingProcess,
    h_b: FadingProcess,
    h_t: FadingProcess,
    noise: NoiseSpec,
    n: int,
    rng,
) -> np.ndarray:
    """One received frame at the m_r-antenna array, shape (m_r, n).

    Fading is common across antennas (co-located array, plane-wave
    arrival); noise is i.i.d. per antenna.
    """
    s = tag_waveform(tag, n)
    x = src.sample(n, rng)
    dl = h_r.sequence(n) * x
    bl = tag.alpha * s * h_b.sequence(n) * h_t.sequence(n) * x
    w = complex_normal(rng, (geom.m_r, n), noise.sigma_n_sq)
    return compose_ma(dl, bl, w, geom.phi1, geom.phi2, geom.m_r)
