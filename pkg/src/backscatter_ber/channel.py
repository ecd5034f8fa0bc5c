"""Time-selective Rayleigh fading: AR(1) gain processes and the
Doppler-derived lag-1 correlation factors of the three links (direct,
backscatter-forward, backscatter-back).

Per-sample gains follow h[n] = rho h[n-1] + sqrt(1-rho^2) g[n] with
g[n] ~ CN(0, sigma_h^2), started from the stationary distribution so the
marginal is CN(0, sigma_h^2) from the first sample on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import OutOfRangeError
from .numerics import bessel_j0


def complex_normal(rng, shape=None, var=1.0):
    """Draw circularly symmetric complex Gaussian samples, CN(0, var).

    Real and imaginary parts are drawn pairwise per sample, so emitting
    a block of n samples consumes the stream exactly like n single-
    sample draws (block and streaming generation stay bit-identical).
    """
    if shape is None:
        pair = rng.standard_normal(2)
        return complex(pair[0], pair[1]) * np.sqrt(var / 2.0)
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    pair = rng.standard_normal(shape + (2,))
    return (pair[..., 0] + 1j * pair[..., 1]) * np.sqrt(var / 2.0)


class LinkKind(enum.Enum):
    SINGLE_END = "single-end"  # only one terminal moves: J0(2 pi fd Ts)
    DUAL_END = "dual-end"      # both move: J0(2 pi fd Ts) J0(2 pi a fd Ts)


@dataclass(frozen=True)
class DopplerSpec:
    """Doppler description of one link.

    f_d is the maximum Doppler spread in Hz, t_s the sample duration in
    seconds, and a the ratio of the Doppler spreads at the two ends of a
    dual-end link (ignored for single-end links).
    """

    f_d: float
    t_s: float
    a: float = 1.0
    link_kind: LinkKind = LinkKind.SINGLE_END

    def __post_init__(self):
        if self.f_d < 0:
            raise ValueError("f_d must be >= 0")
        if self.t_s <= 0:
            raise ValueError("t_s must be > 0")
        if self.a < 0:
            raise ValueError("a must be >= 0")


def correlation_factor(spec: DopplerSpec) -> float:
    """Lag-1 correlation factor of the AR(1) fading model for a link.

    Single-end links use J0(2 pi f_d T_s); dual-end links multiply in a
    second Bessel factor for the other terminal's Doppler.  Values must
    land in [0, 1]: once the Doppler-duration product pushes J0 negative
    the AR(1) abstraction no longer applies and OutOfRangeError is
    raised.
    """
    arg = 2.0 * np.pi * spec.f_d * spec.t_s
    rho = float(bessel_j0(arg))
    if spec.link_kind is LinkKind.DUAL_END:
        rho *= float(bessel_j0(spec.a * arg))
    if rho < 0.0:
        raise OutOfRangeError(
            "correlation factor %g < 0 (f_d*T_s = %g too large for the "
            "AR(1) fading model)" % (rho, spec.f_d * spec.t_s)
        )
    return min(rho, 1.0)


def validate_rho(rho: float, name: str = "rho") -> float:
    if not 0.0 <= rho <= 1.0:
        raise OutOfRangeError("%s = %g outside [0, 1]" % (name, rho))
    return float(rho)


@dataclass
class FadingProcess:
    """Single-owner AR(1) complex-Gaussian gain stream.

    rho = 1 is accepted and yields a block-static channel (every sample
    equals the first draw), useful as a slow-fading sanity limit.
    """

    rho: float
    sigma_h_sq: float = 1.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    _state: complex | None = field(default=None, repr=False)

    def __post_init__(self):
        validate_rho(self.rho)
        if self.sigma_h_sq <= 0:
            raise ValueError("sigma_h_sq must be > 0")

    def step(self) -> complex:
        """Advance one sample: h[n] = rho h[n-1] + sqrt(1-rho^2) g[n]."""
        if self._state is None:
            self._state = complex(complex_normal(self.rng, var=self.sigma_h_sq))
        else:
            g = complex(complex_normal(self.rng, var=self.sigma_h_sq))
            self._state = self.rho * self._state + np.sqrt(1.0 - self.rho**2) * g
        return self._state

    def sequence(self, n: int) -> np.ndarray:
        """Emit the next n gains; identical to n successive step() calls."""
        if n < 1:
            raise ValueError("n must be >= 1")
        first = None
        if self._state is None:
            first = complex(complex_normal(self.rng, var=self.sigma_h_sq))
            self._state = first
            n_rest = n - 1
        else:
            n_rest = n
        innov = complex_normal(self.rng, n_rest, self.sigma_h_sq)
        seq = _ar1_filter(self.rho, self._state, innov)
        if first is not None:
            seq = np.concatenate([[first], seq])
        if len(seq):
            self._state = complex(seq[-1])
        return seq


def _ar1_filter(rho, h_prev, innovations):
    """Run the AR(1) recursion over a 1-D innovation array."""
    if len(innovations) == 0:
        return np.empty(0, dtype=complex)
    x = np.sqrt(1.0 - rho**2) * innovations
    # Inject the previous state through the filter's initial condition.
    zi = np.array([rho * h_prev])
    out, _ = lfilter([1.0], [1.0, -rho], x, zi=zi)
    return out


def ar1_sequence_batch(rho, sigma_h_sq, n_frames, n_samples, rng):
    """Independent length-n_samples AR(1) gain sequences for a batch of
    frames, shape (n_frames, n_samples).  Statistically identical to
    building n_frames fresh FadingProcess streams; vectorized for the
    Monte Carlo engines.
    """
    validate_rho(rho)
    h1 = complex_normal(rng, (n_frames, 1), sigma_h_sq)
    if n_samples == 1:
        return h1
    if rho == 0.0:
        rest = complex_normal(rng, (n_frames, n_samples - 1), sigma_h_sq)
        return np.concatenate([h1, rest], axis=1)
    if rho == 1.0:
        return np.repeat(h1, n_samples, axis=1)
    g = complex_normal(rng, (n_frames, n_samples - 1), sigma_h_sq)
    x = np.concatenate([h1, np.sqrt(1.0 - rho**2) * g], axis=1)
    return lfilter([1.0], [1.0, -rho], x, axis=1)
