"""Closed-form second-order statistics and bit error rates.

All formulas operate on the frame averages Z (not sample energies).  The
averages are treated as circular complex Gaussians, which is exact for
the noise part and holds for the fading-times-source part in the
large-frame limit; the second moments themselves are exact at any frame
length, and the Monte Carlo suite checks both regimes.

Variance bookkeeping, with E2 = E[|X|^2], M2 = |E[X]|^2 and the lag sums
of the AR(1) links folded into correlation brackets:

  half-frame bracket  c_h(rho) = (2 rho/(1-rho)) (1 - 2(1-rho^(N/2))/(N(1-rho)))
  full-frame bracket  c_f(rho) = (2 rho/(1-rho)) (1 - (1-rho^N)/(N(1-rho)))

The backscatter product channel h_b h_t enters through rho_b * rho_t.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import AoaKind, AoaModel, SystemConfig
from .errors import DegenerateVariancesError, DivergentFactorError
from .numerics import QuadratureSpec, integrate_1d, integrate_2d, marcum_q1
from .receiver import antenna_gain, ook_threshold


class BerMethod(enum.Enum):
    EXACT = "exact"
    LARGE_N = "large-n"
    ASYMPTOTIC = "asymptotic"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class BerResult:
    """A BER value plus how it was obtained; Monte Carlo results carry a
    95% confidence halfwidth."""

    value: float
    method: BerMethod
    ci_halfwidth: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("BER must lie in [0, 1]")
        if (self.ci_halfwidth is not None) != (self.method is BerMethod.MONTE_CARLO):
            raise ValueError("ci_halfwidth is present iff method is MONTE_CARLO")


@dataclass(frozen=True)
class ChannelStats:
    """Second-order statistics of (Z0, Z1) for one hypothesis/receiver:
    var0 for the tag-off half, var1 for the tag-on half, their covariance
    and the normalized correlation."""

    var0: float
    var1: float
    cov: float = 0.0

    def __post_init__(self):
        if self.var0 <= 0 or self.var1 <= 0:
            raise ValueError("variances must be positive")
        if self.cov < 0:
            raise ValueError("cov must be >= 0 (common DL component)")
        if self.corr >= 1.0:
            raise ValueError("normalized correlation must be < 1")

    @property
    def corr(self) -> float:
        return self.cov / np.sqrt(self.var0 * self.var1)


def _check_rho_product(rho, what):
    if rho >= 1.0:
        raise DivergentFactorError(
            "%s = 1 makes the correlation bracket singular; route the "
            "static channel through the simulation path instead" % what
        )


def half_frame_corr_factor(rho: float, n: int) -> float:
    """c_h(rho) over a half frame of n/2 samples (n even)."""
    if rho == 0.0:
        return 0.0
    _check_rho_product(rho, "rho")
    return (2.0 * rho / (1.0 - rho)) * (
        1.0 - 2.0 * (1.0 - rho ** (n // 2)) / (n * (1.0 - rho))
    )


def full_frame_corr_factor(rho: float, n: int) -> float:
    """c_f(rho) over the full frame of n samples."""
    if rho == 0.0:
        return 0.0
    _check_rho_product(rho, "rho")
    return (2.0 * rho / (1.0 - rho)) * (
        1.0 - (1.0 - rho**n) / (n * (1.0 - rho))
    )


# ---------------------------------------------------------------------------
# Single-antenna Manchester statistics
# ---------------------------------------------------------------------------


def sa_var0(cfg: SystemConfig) -> float:
    """Variance of the half-frame average when the tag is silent:

        (2/N) (sh2 E2 + sh2 c_h(rho_r) M2 + sn2).
    """
    e2, m2 = cfg.source.mean_abs_sq, cfg.source.mean_sq_mag
    ch = half_frame_corr_factor(cfg.rho_r, cfg.n_samples)
    return (2.0 / cfg.n_samples) * (
        cfg.sigma_h_sq * e2 + cfg.sigma_h_sq * ch * m2 + cfg.sigma_n_sq
    )


def sa_var1(cfg: SystemConfig) -> float:
    """Variance of the half-frame average when the tag reflects: adds the
    backscatter power |alpha|^2 sh2^2 and the product-channel bracket."""
    e2, m2 = cfg.source.mean_abs_sq, cfg.source.mean_sq_mag
    a2, sh2 = cfg.abs_alpha_sq, cfg.sigma_h_sq
    ch_r = half_frame_corr_factor(cfg.rho_r, cfg.n_samples)
    ch_bt = half_frame_corr_factor(cfg.rho_t * cfg.rho_b, cfg.n_samples)
    return (2.0 / cfg.n_samples) * (
        sh2 * (1.0 + a2 * sh2) * e2
        + sh2 * (ch_r + a2 * sh2 * ch_bt) * m2
        + cfg.sigma_n_sq
    )


def sa_cov(cfg: SystemConfig) -> float:
    """Covariance of (Z0, Z1) from the direct-link component common to
    both half frames:

        sh2 * 4 rho_r (1 - rho_r^(N/2))^2 / (N^2 (1 - rho_r)^2) * M2.

    Zero for a zero-mean ambient source or an uncorrelated direct link.
    """
    rho, n = cfg.rho_r, cfg.n_samples
    m2 = cfg.source.mean_sq_mag
    if rho == 0.0 or m2 == 0.0:
        return 0.0
    _check_rho_product(rho, "rho_r")
    return (
        cfg.sigma_h_sq
        * 4.0
        * rho
        * (1.0 - rho ** (n // 2)) ** 2
        / (n**2 * (1.0 - rho) ** 2)
        * m2
    )


def sa_channel_stats(cfg: SystemConfig) -> ChannelStats:
    return ChannelStats(var0=sa_var0(cfg), var1=sa_var1(cfg), cov=sa_cov(cfg))


def sa_ber_exact(stats: ChannelStats, quad: QuadratureSpec | None = None) -> BerResult:
    """Average Manchester BER from the joint density of (|Z0|^2, |Z1|^2)
    (squared bivariate Rayleigh):

        P(e) = Pr{|Z0|^2 > |Z1|^2 | tag-off half is Z0}.

    The inner integral reduces to a first-order Marcum Q (conditioned on
    Z1, the statistic Z0 is Rice distributed), leaving one semi-infinite
    integral evaluated adaptively.  With corr = 0 this collapses to
    (1 + var1/var0)^-1 exactly.
    """
    c = stats.corr
    ratio = stats.var1 / stats.var0
    if c == 0.0:
        return BerResult(1.0 / (1.0 + ratio), BerMethod.EXACT)
    omc = 1.0 - c * c

    def integrand(t):
        a = c * np.sqrt(2.0 * t / omc)
        b = np.sqrt(2.0 * t * ratio / omc)
        return np.exp(-t) * marcum_q1(a, b)

    quad = quad or QuadratureSpec(rel_tol=1e-6)
    value = integrate_1d(integrand, 0.0, np.inf, quad)
    return BerResult(min(max(value, 0.0), 1.0), BerMethod.EXACT)


def sa_ber_approx(stats: ChannelStats) -> BerResult:
    """Large-frame approximation P = (1 + var1/var0)^-1, valid because
    the covariance decays one order faster in N than the variances."""
    return BerResult(1.0 / (1.0 + stats.var1 / stats.var0), BerMethod.LARGE_N)


def sa_ber_asymptotic(cfg: SystemConfig) -> BerResult:
    """Infinite-SNR limit of the single-antenna Manchester BER: the
    uncancelled direct link leaves an error floor

        P = (2 + a2 sh2^2 (1 + c_h(rho_b rho_t) q)
                 / (sh2 (1 + c_h(rho_r) q)))^-1,

    q = |E[X]|^2 / E[|X|^2].  Obtained as the SNR -> inf limit of the
    variance ratio; reduces to (2 + a2 sh2)^-1 for a zero-mean source.
    """
    q = cfg.source.mean_sq_mag / cfg.source.mean_abs_sq
    a2, sh2 = cfg.abs_alpha_sq, cfg.sigma_h_sq
    ch_r = half_frame_corr_factor(cfg.rho_r, cfg.n_samples)
    ch_bt = half_frame_corr_factor(cfg.rho_t * cfg.rho_b, cfg.n_samples)
    k_excess = a2 * sh2**2 * (1.0 + ch_bt * q) / (sh2 * (1.0 + ch_r * q))
    return BerResult(1.0 / (2.0 + k_excess), BerMethod.ASYMPTOTIC)


# ---------------------------------------------------------------------------
# Direct OOK (single antenna)
# ---------------------------------------------------------------------------


def ook_variances(cfg: SystemConfig) -> tuple[float, float]:
    """Full-frame variances (s0, s1) of the OOK statistic Z under tag-off
    and tag-on; same structure as the Manchester halves but with 1/N in
    place of 2/N and full-frame brackets."""
    e2, m2 = cfg.source.mean_abs_sq, cfg.source.mean_sq_mag
    a2, sh2 = cfg.abs_alpha_sq, cfg.sigma_h_sq
    cf_r = full_frame_corr_factor(cfg.rho_r, cfg.n_samples)
    cf_bt = full_frame_corr_factor(cfg.rho_t * cfg.rho_b, cfg.n_samples)
    s0 = (sh2 * e2 + sh2 * cf_r * m2 + cfg.sigma_n_sq) / cfg.n_samples
    s1 = (
        sh2 * (1.0 + a2 * sh2) * e2
        + sh2 * (cf_r + a2 * sh2 * cf_bt) * m2
        + cfg.sigma_n_sq
    ) / cfg.n_samples
    return s0, s1


def _ook_ber_from_excess(g):
    """OOK error probability as a function of g = s1/s0 - 1, written so
    the g -> 0 limit (indistinguishable hypotheses, P -> 1/2) is smooth:

        P = 1/2 exp(-tau/s0) + 1/2 (1 - exp(-tau/s1)),
        tau/s0 = log(1+g)(1+g)/g,  tau/s1 = log(1+g)/g.
    """
    g = np.asarray(g, dtype=float)
    small = g < 1e-12
    gs = np.where(small, 1.0, g)
    t0 = np.where(small, 1.0, np.log1p(g) * (1.0 + g) / gs)
    t1 = np.where(small, 1.0, np.log1p(g) / gs)
    return 0.5 * np.exp(-t0) + 0.5 * (1.0 - np.exp(-t1))


def ook_ber(s0: float, s1: float) -> BerResult:
    """Analytical BER of threshold OOK detection with exponential
    |Z|^2 statistics: misses and false alarms weighted half/half at the
    optimal threshold.  Requires s1 > s0 (tag adds energy)."""
    ook_threshold(s0, s1)  # validates s1 > s0 > 0
    return BerResult(float(_ook_ber_from_excess(s1 / s0 - 1.0)), BerMethod.EXACT)


# ---------------------------------------------------------------------------
# Multi-antenna receiver
# ---------------------------------------------------------------------------


def _ma_signal_power(cfg: SystemConfig, half_frame: bool) -> float:
    """Backscatter power factor of the combined array stream (excluding
    the antenna gain): a2 sh2^2 (E2 + c(rho_b rho_t) M2)."""
    bracket = (
        half_frame_corr_factor if half_frame else full_frame_corr_factor
    )(cfg.rho_t * cfg.rho_b, cfg.n_samples)
    return cfg.abs_alpha_sq * cfg.sigma_h_sq**2 * (
        cfg.source.mean_abs_sq + bracket * cfg.source.mean_sq_mag
    )


def ma_variances(cfg: SystemConfig, gain: float) -> tuple[float, float]:
    """Half-frame variances of the combined array statistic for a given
    antenna gain: the cancelled stream carries only noise when the tag is
    silent (the direct link is nulled exactly),

        var0 = 2 sn2 / N,
        var1 = (2/N) (G a2 sh2^2 (E2 + c_h(rho_b rho_t) M2) + sn2).
    """
    if gain < 0:
        raise ValueError("gain must be >= 0")
    var0 = 2.0 * cfg.sigma_n_sq / cfg.n_samples
    var1 = (2.0 / cfg.n_samples) * (gain * _ma_signal_power(cfg, True) + cfg.sigma_n_sq)
    return var0, var1


def ma_conditional_ber(cfg: SystemConfig, gain: float) -> float:
    """Manchester BER conditioned on the AoAs (through the gain):
    sn2 / (G a2 sh2^2 {E2 + c_h M2} + 2 sn2)."""
    sig = gain * _ma_signal_power(cfg, True)
    return cfg.sigma_n_sq / (sig + 2.0 * cfg.sigma_n_sq)


def ma_ook_conditional_ber(cfg: SystemConfig, gain: float):
    """Threshold-OOK BER conditioned on the AoAs, full-frame variances
    s0 = sn2/N and s1 = (G a2 sh2^2 {E2 + c_f M2} + sn2)/N; continuous
    at gain -> 0 where it saturates at 1/2."""
    return _ook_ber_from_excess(gain * _ma_signal_power(cfg, False) / cfg.sigma_n_sq)


def _marginalize_over_aoa(cfg, aoa, conditional, quad):
    two_pi_d = 2.0 * np.pi * cfg.d_over_lambda

    if aoa.kind is AoaKind.UNIFORM_SPREAD:

        def integrand(th1, th2):
            g = antenna_gain(cfg.m_r, two_pi_d * (np.cos(th2) - np.cos(th1)))
            return conditional(g) / (4.0 * np.pi**2)

        return integrate_2d(integrand, (-np.pi, np.pi), (-np.pi, np.pi), quad)

    spread = aoa.spread_rad

    def integrand(th1, u):
        g = antenna_gain(cfg.m_r, two_pi_d * (np.cos(th1 + u) - np.cos(th1)))
        return conditional(g) / (2.0 * np.pi * spread)

    return integrate_2d(integrand, (-np.pi, np.pi), (-spread / 2, spread / 2), quad)


def ma_ber(
    cfg: SystemConfig, aoa: AoaModel | None = None, quad: QuadratureSpec | None = None
) -> BerResult:
    """Average Manchester BER of the array receiver, marginalized over
    the AoA model by adaptive 2-D quadrature (the conditional BER has a
    sharp ridge where the two AoAs align and the gain nulls out)."""
    aoa = aoa or cfg.aoa
    quad = quad or QuadratureSpec(rel_tol=1e-5)
    value = _marginalize_over_aoa(cfg, aoa, lambda g: ma_conditional_ber(cfg, g), quad)
    return BerResult(min(max(value, 0.0), 1.0), BerMethod.EXACT)


def ma_ook_ber(
    cfg: SystemConfig, aoa: AoaModel | None = None, quad: QuadratureSpec | None = None
) -> BerResult:
    """Average threshold-OOK BER of the array receiver over the AoA
    model; the comparison baseline for the Manchester scheme."""
    aoa = aoa or cfg.aoa
    quad = quad or QuadratureSpec(rel_tol=1e-5)
    value = _marginalize_over_aoa(
        cfg, aoa, lambda g: ma_ook_conditional_ber(cfg, g), quad
    )
    return BerResult(min(max(value, 0.0), 1.0), BerMethod.EXACT)


def ma_ber_asymptotic(cfg: SystemConfig, gain: float | None = None) -> BerResult:
    """Infinite-SNR conditional BER of the array receiver: exactly zero
    whenever the two links are separable (gain > 0); the degenerate
    aligned case (gain = 0) stays at coin-flip level."""
    if gain is not None and gain == 0.0:
        return BerResult(0.5, BerMethod.ASYMPTOTIC)
    return BerResult(0.0, BerMethod.ASYMPTOTIC)


# ---------------------------------------------------------------------------
# Dispatch helper for sweeps
# ---------------------------------------------------------------------------


def analytical_ber(cfg: SystemConfig, detector, quad: QuadratureSpec | None = None) -> BerResult:
    """Analytical BER of one detector chain under cfg.

    Manchester-SA uses the exact bivariate evaluation whenever the
    statistics are correlated and the large-frame form otherwise (they
    coincide at zero covariance).
    """
    from .config import Detector

    detector = Detector(detector)
    if detector is Detector.MANCHESTER_SA:
        stats = sa_channel_stats(cfg)
        if stats.cov > 0.0:
            return sa_ber_exact(stats, quad)
        return BerResult(sa_ber_approx(stats).value, BerMethod.EXACT)
    if detector is Detector.OOK_SA:
        s0, s1 = ook_variances(cfg)
        if s1 <= s0:
            raise DegenerateVariancesError("no backscatter energy: s1 <= s0")
        return ook_ber(s0, s1)
    if detector is Detector.MANCHESTER_MA:
        return ma_ber(cfg, quad=quad)
    return ma_ook_ber(cfg, quad=quad)
