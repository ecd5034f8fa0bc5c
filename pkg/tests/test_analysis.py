import numpy as np
import pytest

from backscatter_ber.analysis import (
    BerMethod,
    BerResult,
    ChannelStats,
    analytical_ber,
    ma_ber,
    ma_ber_asymptotic,
    ma_conditional_ber,
    ma_ook_ber,
    ma_ook_conditional_ber,
    ma_variances,
    ook_ber,
    ook_variances,
    sa_ber_approx,
    sa_ber_asymptotic,
    sa_ber_exact,
    sa_channel_stats,
    sa_cov,
    sa_var0,
    sa_var1,
)
from backscatter_ber.config import AoaKind, AoaModel, Detector, SystemConfig
from backscatter_ber.errors import DegenerateVariancesError, DivergentFactorError
from backscatter_ber.phy import AmbientSource, SourceKind

CARRIER = AmbientSource(SourceKind.CONSTANT_CARRIER)


def _cfg(**kw):
    return SystemConfig(**kw)


class TestSaVariances:
    def test_var0_direct_value(self):
        # rho_r=0, sh2=1, E2=1, sn2=0.1, N=100  ->  (2/100)(1 + 0.1)
        cfg = _cfg(n_samples=100, snr_db=10.0)
        assert abs(sa_var0(cfg) - 0.022) <= 1e-15

    def test_var1_direct_value(self):
        # adds |alpha|^2 = 0.776: (2/100)(1.776 + 0.1) = 0.037520
        cfg = _cfg(alpha=np.sqrt(0.776), n_samples=100, snr_db=10.0)
        assert abs(sa_var1(cfg) - 0.037520) <= 1e-15

    def test_zero_mean_source_kills_bracket(self):
        base = _cfg(n_samples=64)
        assert sa_var0(base.with_rho(0.9)) == sa_var0(base)

    def test_alpha_zero_equalizes_variances(self):
        cfg = _cfg(alpha=0.0, n_samples=64).with_rho(0.5)
        assert sa_var1(cfg) == sa_var0(cfg)

    def test_cov_direct_value(self):
        # N=4, rho=0.5, carrier: 4*0.5*(1-0.25)^2/(16*0.25) = 0.28125
        cfg = _cfg(n_samples=4, source=CARRIER).with_rho(0.5)
        assert abs(sa_cov(cfg) - 0.28125) <= 1e-15

    def test_cov_zero_cases(self):
        assert sa_cov(_cfg(source=CARRIER)) == 0.0  # rho_r = 0
        assert sa_cov(_cfg().with_rho(0.5)) == 0.0  # zero-mean source

    def test_static_channel_rejected(self):
        cfg = _cfg(source=CARRIER).with_rho(1.0)
        for fn in (sa_var0, sa_var1, sa_cov):
            with pytest.raises(DivergentFactorError):
                fn(cfg)

    def test_moments_match_simulation_small_frame(self):
        # quick 3-sigma spot check; the full grid runs in the acceptance suite
        from backscatter_ber.channel import ar1_sequence_batch, complex_normal
        from backscatter_ber.phy import compose_sa, manchester_on_mask

        cfg = _cfg(n_samples=8, source=CARRIER).with_rho(0.5)
        frames, n = 150_000, 8
        rng = np.random.default_rng(17)
        hr = ar1_sequence_batch(cfg.rho_r, 1.0, frames, n, rng)
        hb = ar1_sequence_batch(cfg.rho_b, 1.0, frames, n, rng)
        ht = ar1_sequence_batch(cfg.rho_t, 1.0, frames, n, rng)
        x = cfg.source.sample((frames, n), rng)
        w = complex_normal(rng, (frames, n), cfg.sigma_n_sq)
        y = compose_sa(hr, hb, ht, x, w, cfg.alpha, manchester_on_mask(np.zeros(frames, int), n))
        z0 = y[:, :4].mean(axis=1)
        z1 = y[:, 4:].mean(axis=1)
        stats = sa_channel_stats(cfg)
        for emp, ref in (
            (np.abs(z0) ** 2, stats.var0),
            (np.abs(z1) ** 2, stats.var1),
            (np.real(z0 * np.conj(z1)), stats.cov),
        ):
            se = np.std(emp) / np.sqrt(frames)
            assert abs(np.mean(emp) - ref) <= 3 * se


class TestSaBerExact:
    def test_symmetric_hypotheses(self):
        assert sa_ber_exact(ChannelStats(1.0, 1.0, 0.0)).value == 0.5

    def test_zero_corr_closed_form(self):
        stats = ChannelStats(1.0, 3.7, 0.0)
        assert abs(sa_ber_exact(stats).value - 1.0 / 4.7) <= 1e-14

    def test_against_frozen_monte_carlo(self):
        # 1e7 correlated circular Gaussian pairs, seed 2024, gave
        # p = 0.2408956 +- 0.0001352 (1 se) for var0=1, var1=3, corr=0.3
        stats = ChannelStats(1.0, 3.0, 0.3 * np.sqrt(3.0))
        assert abs(sa_ber_exact(stats).value - 0.2408956) <= 3 * 0.0001352

    def test_against_independent_closed_form(self):
        # Pr{U > V} for the correlated-exponential pair also has the
        # closed form (1 - (v1-v0)/sqrt((v0+v1)^2 - 4 cov^2))/2, derived
        # through the characteristic function rather than Marcum-Q.
        rng = np.random.default_rng(1)
        for _ in range(20):
            v0 = 10.0 ** rng.uniform(-3, 1)
            v1 = v0 * 10.0 ** rng.uniform(0, 2)
            corr = rng.uniform(0.0, 0.95)
            cov = corr * np.sqrt(v0 * v1)
            got = sa_ber_exact(ChannelStats(v0, v1, cov)).value
            want = 0.5 * (1.0 - (v1 - v0) / np.sqrt((v0 + v1) ** 2 - 4 * cov**2))
            assert abs(got - want) <= 1e-6 * max(want, 1e-12)

    def test_correlation_lowers_error_probability(self):
        # the common direct-link component cancels in the magnitude
        # comparison, so correlation helps at fixed variances
        vals = [
            sa_ber_exact(ChannelStats(1.0, 2.0, c * np.sqrt(2.0))).value
            for c in (0.0, 0.4, 0.8, 0.95)
        ]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestSaBerApprox:
    def test_values(self):
        assert sa_ber_approx(ChannelStats(1.0, 1.0, 0.0)).value == 0.5
        assert sa_ber_approx(ChannelStats(1.0, 3.0, 0.0)).value == 0.25

    def test_large_frame_gap(self):
        cfg = _cfg(n_samples=2000, source=CARRIER).with_rho(0.9)
        stats = sa_channel_stats(cfg)
        exact = sa_ber_exact(stats).value
        approx = sa_ber_approx(stats).value
        assert abs(exact - approx) <= 1e-3 * exact


class TestSaBerAsymptotic:
    def test_zero_mean_floor(self):
        cfg = _cfg(alpha=np.sqrt(0.776))
        assert abs(sa_ber_asymptotic(cfg).value - 1.0 / 2.776) <= 1e-12

    def test_silent_tag_is_coin_flip(self):
        assert sa_ber_asymptotic(_cfg(alpha=0.0)).value == 0.5

    def test_limit_of_variance_ratio(self):
        # approx at very high SNR must land on the asymptote, including
        # for non-unit channel variance
        for sh2 in (1.0, 2.5):
            cfg = _cfg(sigma_h_sq=sh2, snr_db=60.0, source=CARRIER).with_rho(0.5)
            gap = abs(sa_ber_approx(sa_channel_stats(cfg)).value - sa_ber_asymptotic(cfg).value)
            assert gap <= 1e-4

    def test_monotone_in_alpha_and_snr(self):
        cfgs = [_cfg(alpha=a, snr_db=20.0) for a in (0.3, 0.6, 0.9)]
        vals = [sa_ber_approx(sa_channel_stats(c)).value for c in cfgs]
        assert vals[0] > vals[1] > vals[2]
        vals = [
            sa_ber_approx(sa_channel_stats(_cfg(snr_db=s))).value for s in (0.0, 10.0, 20.0)
        ]
        assert vals[0] > vals[1] > vals[2]


class TestOok:
    def test_silent_tag_equal_variances(self):
        s0, s1 = ook_variances(_cfg(alpha=0.0))
        assert s0 == s1

    def test_factor_two_structure(self):
        cfg = _cfg(n_samples=128)
        s0, _ = ook_variances(cfg)
        assert abs(s0 - sa_var0(cfg) / 2.0) <= 1e-18

    def test_ber_frozen_value(self):
        assert abs(ook_ber(1.0, 4.0).value - 0.2637648031447113) <= 1e-14

    def test_near_degenerate_limit(self):
        assert abs(ook_ber(1.0, 1.0 + 1e-11).value - 0.5) <= 1e-6

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateVariancesError):
            ook_ber(1.0, 1.0)

    def test_ber_decreases_with_separation(self):
        vals = [ook_ber(1.0, s1).value for s1 in (1.5, 3.0, 10.0, 100.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestMaAnalysis:
    def test_zero_gain_is_coin_flip(self):
        cfg = _cfg()
        v0, v1 = ma_variances(cfg, 0.0)
        assert v0 == v1 == 2.0 * cfg.sigma_n_sq / cfg.n_samples
        assert ma_conditional_ber(cfg, 0.0) == 0.5
        assert ma_ook_conditional_ber(cfg, 0.0) == 0.5

    def test_conditional_value(self):
        # G=4, |alpha|^2 = 0.776, sn2 = 0.01: 0.01/(4*0.776 + 0.02)
        cfg = _cfg(alpha=np.sqrt(0.776), snr_db=20.0)
        want = 0.01 / (4 * 0.776 + 0.02)
        assert abs(ma_conditional_ber(cfg, 4.0) - want) <= 1e-15

    def test_conditional_is_variance_ratio(self):
        cfg = _cfg().with_rho(0.3)
        v0, v1 = ma_variances(cfg, 2.5)
        assert abs(ma_conditional_ber(cfg, 2.5) - 1.0 / (1.0 + v1 / v0)) <= 1e-15

    def test_silent_tag_average(self):
        assert abs(ma_ber(_cfg(alpha=0.0)).value - 0.5) <= 1e-6

    def test_uniform_regression_value(self):
        # adaptive quadrature at the headline operating point
        assert abs(ma_ber(_cfg()).value - 2.895117e-02) <= 2e-5

    def test_monotone_in_snr(self):
        vals = [ma_ber(_cfg(snr_db=s)).value for s in (5.0, 10.0, 20.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_narrow_spread_is_harder(self):
        narrow = ma_ber(_cfg(aoa=AoaModel(AoaKind.NARROW_SPREAD))).value
        assert narrow > ma_ber(_cfg()).value

    def test_ook_baseline_is_worse(self):
        assert ma_ook_ber(_cfg()).value > ma_ber(_cfg()).value

    def test_asymptotic(self):
        assert ma_ber_asymptotic(_cfg()).value == 0.0
        assert ma_ber_asymptotic(_cfg(), gain=0.0).value == 0.5
        # conditional BER at separable AoAs vanishes with the noise
        assert ma_conditional_ber(_cfg(snr_db=60.0), 4.0) < 1e-4

    def test_gain_zero_variance_guard(self):
        with pytest.raises(ValueError):
            ma_variances(_cfg(), -1.0)


class TestDispatch:
    def test_detector_routing(self):
        cfg = _cfg(n_samples=200)
        for det in Detector:
            res = analytical_ber(cfg, det)
            assert 0.0 < res.value < 0.5

    def test_exact_route_for_correlated_stats(self):
        cfg = _cfg(n_samples=16, source=CARRIER).with_rho(0.8)
        res = analytical_ber(cfg, Detector.MANCHESTER_SA)
        gap = abs(res.value - sa_ber_exact(sa_channel_stats(cfg)).value)
        assert gap <= 1e-12

    def test_ook_degenerate_raises(self):
        with pytest.raises(DegenerateVariancesError):
            analytical_ber(_cfg(alpha=0.0), Detector.OOK_SA)


class TestResultTypes:
    def test_ber_result_invariants(self):
        with pytest.raises(ValueError):
            BerResult(1.5, BerMethod.EXACT)
        with pytest.raises(ValueError):
            BerResult(0.1, BerMethod.EXACT, ci_halfwidth=0.01)
        with pytest.raises(ValueError):
            BerResult(0.1, BerMethod.MONTE_CARLO)

    def test_channel_stats_invariants(self):
        with pytest.raises(ValueError):
            ChannelStats(0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            ChannelStats(1.0, 1.0, -0.1)
        with pytest.raises(ValueError):
            ChannelStats(1.0, 1.0, 1.0)  # corr = 1
        assert abs(ChannelStats(1.0, 4.0, 1.0).corr - 0.5) <= 1e-15
