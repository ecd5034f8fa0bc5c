"""Self-validation suite behind the `validate` CLI command.

Each check returns (name, passed, detail).  The checks exercise the
internal consistency of the library: algebraic identities, fixed-seed
Monte Carlo agreement of simulated moments with the closed forms, and
quadrature cross-routes.  Fixed seeds keep the outcome deterministic.
"""

from __future__ import annotations

import numpy as np

from . import analysis, channel, numerics, receiver
from .config import SystemConfig
from .errors import BackscatterError
from .montecarlo import measure_snr_gain
from .numerics import QuadratureSpec, bivariate_expsq_pdf, integrate_1d, integrate_2d
from .phy import AmbientSource, SourceKind


def _check(name, fn):
    try:
        ok, detail = fn()
    except (BackscatterError, ValueError, OverflowError) as exc:
        return name, False, "raised %s: %s" % (type(exc).__name__, exc)
    return name, bool(ok), detail


def check_decide_scale_invariance():
    rng = np.random.default_rng(101)
    z0 = channel.complex_normal(rng, 200)
    z1 = channel.complex_normal(rng, 200)
    base = receiver.decide_manchester(z0, z1)
    worst = 0
    for _ in range(20):
        c = complex(channel.complex_normal(rng)) * 10.0 ** rng.uniform(-6, 6)
        worst = max(worst, int(np.sum(receiver.decide_manchester(c * z0, c * z1) != base)))
    return worst == 0, "decision flips under rescaling: %d" % worst


def check_manchester_half_symmetry():
    rng = np.random.default_rng(102)
    frame = channel.complex_normal(rng, (64, 16))
    z0, z1 = receiver.test_statistics_manchester(frame)
    r0, r1 = receiver.test_statistics_manchester(
        np.concatenate([frame[:, 8:], frame[:, :8]], axis=1)
    )
    swapped = np.allclose(z0, r1) and np.allclose(z1, r0)
    ties = np.abs(z0) == np.abs(z1)
    flipped = np.all(
        (receiver.decide_manchester(z0, z1) != receiver.decide_manchester(r0, r1))
        | ties
    )
    return swapped and flipped, "half-swap exchanges statistics and flips decisions"


def check_dl_nulling():
    rng = np.random.default_rng(103)
    worst = 0.0
    for m_r in (2, 3, 4, 6, 8):
        th1 = rng.uniform(-np.pi, np.pi)
        phi1 = np.pi * np.cos(th1)
        i = np.arange(m_r)
        dl = channel.complex_normal(rng, 256)
        y = np.exp(1j * i * phi1)[:, None] * dl[None, :]
        resid = receiver.dl_cancel(y, phi1)
        worst = max(worst, float(np.abs(resid).max() / np.abs(y).max()))
    return worst <= 1e-12, "max residual/input = %.2e" % worst


def check_ar1_stationarity_autocorr():
    rng = np.random.default_rng(104)
    n = 1_000_000
    rho, var = 0.9, 1.7
    h = channel.ar1_sequence_batch(rho, var, 1, n, rng)[0]
    var_emp = float(np.mean(np.abs(h) ** 2))
    if abs(var_emp / var - 1.0) > 0.01:
        return False, "sample variance %.4f vs %.4f" % (var_emp, var)
    worst = 0.0
    for k in range(1, 11):
        ac = float(np.real(np.mean(h[k:] * np.conj(h[:-k])))) / var
        worst = max(worst, abs(ac - rho**k))
    return worst <= 0.01, "variance ok, max |lag-k corr - rho^k| = %.4f" % worst


def check_ar1_reproducibility():
    a = channel.FadingProcess(0.7, 1.0, np.random.default_rng(55)).sequence(64)
    b = channel.FadingProcess(0.7, 1.0, np.random.default_rng(55)).sequence(64)
    same = np.array_equal(a, b)
    return same, "identical seeds emit identical sequences: %s" % same


def check_decay_rates():
    """Var0/Var1 fall like 1/N and Cov like 1/N^2 on log-log axes."""
    cfg = SystemConfig(
        source=AmbientSource(SourceKind.CONSTANT_CARRIER), snr_db=20.0
    ).with_rho(0.2)
    ns = 2 ** np.arange(2, 15)
    logn = np.log(ns.astype(float))
    slopes = {}
    for name, fn in (("var0", analysis.sa_var0), ("var1", analysis.sa_var1),
                     ("cov", analysis.sa_cov)):
        vals = np.array([fn(cfg.replace(n_samples=int(n))) for n in ns])
        slopes[name] = np.polyfit(logn, np.log(vals), 1)[0]
    ok = (
        abs(slopes["var0"] + 1.0) <= 0.05
        and abs(slopes["var1"] + 1.0) <= 0.05
        and abs(slopes["cov"] + 2.0) <= 0.05
    )
    return ok, "slopes var0 %.3f var1 %.3f cov %.3f" % (
        slopes["var0"], slopes["var1"], slopes["cov"])


def check_gain_closed_form():
    worst = 0.0
    for m_r in range(2, 9):
        for dphi in np.linspace(np.pi / 50, np.pi, 50):
            geom_gain = receiver.antenna_gain(m_r, dphi)
            direct = receiver.mmse_weights(_geom(m_r, dphi), sigma_n_sq=0.37).gain
            worst = max(worst, abs(geom_gain - direct) / direct)
    zero = receiver.antenna_gain(4, 0.0)
    return worst <= 1e-10 and zero == 0.0, "max rel diff %.2e, G(0) = %g" % (worst, zero)


def _geom(m_r, dphi):
    from .phy import ArrayGeometry

    # theta2 = 0 puts phi2 = 2 pi d/lambda; pick theta1 to realize dphi.
    ref = 2.0 * np.pi * 0.5
    th1 = float(np.arccos(np.clip((ref - dphi) / ref, -1.0, 1.0)))
    return ArrayGeometry(m_r=m_r, theta1=th1, theta2=0.0)


def check_noise_covariance_inverse():
    worst = 0.0
    for m_r in (2, 3, 4, 6, 8):
        k = np.eye(m_r - 1) + np.ones((m_r - 1, m_r - 1))
        k_inv = np.eye(m_r - 1) - np.ones((m_r - 1, m_r - 1)) / m_r
        worst = max(worst, float(np.abs(k_inv - np.linalg.inv(k)).max()))
    return worst <= 1e-12, "max |closed-form - inv| = %.2e" % worst


def check_quadrature_sanity(quad):
    v1 = integrate_1d(lambda t: t, 0.0, 1.0, quad)
    v2 = integrate_2d(
        lambda a, b: np.full_like(a, 1.0 / (4 * np.pi**2)),
        (-np.pi, np.pi), (-np.pi, np.pi), quad,
    )
    v3 = integrate_1d(lambda t: np.exp(-t), 0.0, np.inf, quad)
    ok = abs(v1 - 0.5) <= 1e-10 and abs(v2 - 1.0) <= 1e-8 and abs(v3 - 1.0) <= 1e-8
    return ok, "int x = %.12f, int density = %.10f, int e^-t = %.10f" % (v1, v2, v3)


def check_density_normalization(quad):
    worst = 0.0
    for var0, var1, corr in ((1.0, 2.0, 0.5), (0.3, 0.9, 0.0), (2.0, 2.0, 0.8)):
        val = _integral_over_quadrant(
            lambda u, v: bivariate_expsq_pdf(u, v, var0, var1, corr), var0, var1, quad
        )
        worst = max(worst, abs(val - 1.0))
    return worst <= 1e-5, "max |integral - 1| = %.2e" % worst


def _integral_over_quadrant(f, scale_u, scale_v, quad):
    """Integrate f over (0, inf)^2 by mapping each axis to (0, 1)."""

    def mapped(p, q):
        u = scale_u * p / (1.0 - p)
        v = scale_v * q / (1.0 - q)
        jac = scale_u / (1.0 - p) ** 2 * scale_v / (1.0 - q) ** 2
        return f(u, v) * jac

    return integrate_2d(mapped, (0.0, 1.0), (0.0, 1.0), quad)


def check_marcum_vs_direct_quadrature(quad):
    """The Marcum-reduced error integral must agree with direct 2-D
    quadrature of the joint density over the error region."""
    worst = 0.0
    for ratio in (1.0, 2.0, 5.0, 20.0):
        for corr in (0.1, 0.45, 0.8):
            for scale in (0.01, 1.0):
                var0, var1 = scale, scale * ratio
                stats = analysis.ChannelStats(
                    var0=var0, var1=var1, cov=corr * np.sqrt(var0 * var1)
                )
                p_marcum = analysis.sa_ber_exact(stats).value

                def region(v, w):  # u = v + w > v, both in (0, inf)
                    return bivariate_expsq_pdf(v + w, v, var0, var1, corr)

                p_direct = _integral_over_quadrant(region, var1, var0, quad)
                worst = max(worst, abs(p_marcum - p_direct) / p_direct)
    return worst <= 1e-6, "max rel diff %.2e" % worst


def check_variance_against_simulation():
    """Fixed-seed spot check of the closed-form (Z0, Z1) moments against
    simulated frames (small frame, correlated links, carrier source)."""
    from .montecarlo import _batch_rng
    from .phy import compose_sa, manchester_on_mask

    cfg = SystemConfig(
        n_samples=8, snr_db=20.0, source=AmbientSource(SourceKind.CONSTANT_CARRIER)
    ).with_rho(0.5)
    n, frames = cfg.n_samples, 200_000
    rng = _batch_rng(7, 0, 0)
    h_r = channel.ar1_sequence_batch(cfg.rho_r, cfg.sigma_h_sq, frames, n, rng)
    h_b = channel.ar1_sequence_batch(cfg.rho_b, cfg.sigma_h_sq, frames, n, rng)
    h_t = channel.ar1_sequence_batch(cfg.rho_t, cfg.sigma_h_sq, frames, n, rng)
    x = cfg.source.sample((frames, n), rng)
    w = channel.complex_normal(rng, (frames, n), cfg.sigma_n_sq)
    on = manchester_on_mask(np.zeros(frames, dtype=int), n)
    y = compose_sa(h_r, h_b, h_t, x, w, cfg.alpha, on)
    z0 = y[:, : n // 2].mean(axis=1)
    z1 = y[:, n // 2 :].mean(axis=1)

    stats = analysis.sa_channel_stats(cfg)
    rel = np.sqrt(2.0 / frames)  # rough relative SE of the moment estimates
    v0 = np.mean(np.abs(z0) ** 2)
    v1 = np.mean(np.abs(z1) ** 2)
    cov = np.real(np.mean(z0 * np.conj(z1)))
    z_scores = (
        abs(v0 / stats.var0 - 1.0) / rel,
        abs(v1 / stats.var1 - 1.0) / rel,
        abs(cov / stats.cov - 1.0) / (rel * np.sqrt(2.0) / stats.corr),
    )
    return max(z_scores) <= 4.0, "moment z-scores: %.2f %.2f %.2f" % z_scores


def check_snr_gain_synthetic():
    snr = np.linspace(0.0, 30.0, 16)
    ber = 10 ** (-(snr / 10.0) - 0.5)
    zero = measure_snr_gain((snr, ber), (snr, ber), 1e-2)
    four = measure_snr_gain((snr, ber), (snr + 4.0, ber), 1e-2)
    ok = abs(zero) <= 1e-9 and abs(four - 4.0) <= 1e-9
    return ok, "identical -> %.3f dB, shifted -> %.3f dB" % (zero, four)


def check_snr_gain_measured(cfg, quad):
    """Coarse analytical gain sanity at BER 1e-2 for the configured
    array scenario; skipped when the tag is silent."""
    if cfg.abs_alpha_sq == 0.0:
        return True, "skipped: alpha = 0, no backscatter to compare"
    snr = np.arange(28.0, 48.0, 2.0)
    manch, ook = [], []
    for s in snr:
        pt = cfg.replace(snr_db=float(s))
        manch.append(analysis.ma_ber(pt, quad=quad).value)
        ook.append(analysis.ma_ook_ber(pt, quad=quad).value)
    gain = measure_snr_gain((snr, np.array(manch)), (snr, np.array(ook)), 1e-2)
    return 0.5 <= gain <= 8.0, "gain at BER 1e-2: %.2f dB" % gain


def run_all_checks(cfg: SystemConfig | None = None, quad_rel_tol: float = 1e-6):
    """Run the whole table; returns a list of (name, passed, detail)."""
    cfg = cfg or SystemConfig()

    def quad():
        return QuadratureSpec(rel_tol=quad_rel_tol)

    results = [
        _check("decide_manchester scale invariance", check_decide_scale_invariance),
        _check("manchester half-frame symmetry", check_manchester_half_symmetry),
        _check("exact DL nulling", check_dl_nulling),
        _check("AR(1) stationarity and autocorrelation", check_ar1_stationarity_autocorr),
        _check("AR(1) seeded reproducibility", check_ar1_reproducibility),
        _check("variance/covariance decay rates", check_decay_rates),
        _check("antenna gain closed form", check_gain_closed_form),
        _check("residual noise covariance inverse", check_noise_covariance_inverse),
        _check("quadrature sanity", lambda: check_quadrature_sanity(quad())),
        _check("bivariate density normalization", lambda: check_density_normalization(quad())),
        _check("Marcum-Q vs direct quadrature", lambda: check_marcum_vs_direct_quadrature(quad())),
        _check("closed-form moments vs simulation", check_variance_against_simulation),
        _check("SNR gain measurement (synthetic)", check_snr_gain_synthetic),
        _check("SNR gain measurement (scenario)", lambda: check_snr_gain_measured(cfg, quad())),
    ]
    return results
