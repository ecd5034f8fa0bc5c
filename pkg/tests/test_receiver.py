import numpy as np
import pytest

from backscatter_ber.channel import complex_normal
from backscatter_ber.errors import (
    DegenerateVariancesError,
    InsufficientAntennasError,
    OddSampleCountError,
)
from backscatter_ber.phy import ArrayGeometry
from backscatter_ber.receiver import (
    antenna_gain,
    decide_manchester,
    decide_ook,
    dl_cancel,
    ma_effective_frame,
    mmse_weights,
    ook_threshold,
    steering_residual,
    test_statistic_ook,
    test_statistics_manchester,
)


class TestStatistics:
    def test_manchester_averages(self):
        z0, z1 = test_statistics_manchester([1 + 0j, 1 + 0j])
        assert z0 == 1 and z1 == 1
        z0, z1 = test_statistics_manchester([2.0, 0.0, 0.0, 4.0])
        assert z0 == 1.0 and z1 == 2.0
        z0, z1 = test_statistics_manchester(np.zeros(8, dtype=complex))
        assert z0 == 0 and z1 == 0

    def test_ook_average(self):
        assert test_statistic_ook([1.0, 1.0]) == 1.0
        assert test_statistic_ook([2.0, 0.0, 0.0, 4.0]) == 1.5
        assert test_statistic_ook(np.zeros(4)) == 0.0

    def test_odd_frame_rejected(self):
        with pytest.raises(OddSampleCountError):
            test_statistics_manchester([1.0, 2.0, 3.0])

    def test_batch_shapes(self):
        frames = np.arange(12.0).reshape(3, 4)
        z0, z1 = test_statistics_manchester(frames)
        assert z0.shape == (3,) and z1.shape == (3,)


class TestDecisions:
    def test_manchester_rule(self):
        assert decide_manchester(2.0, 1.0) == 1
        assert decide_manchester(1.0, 2.0) == 0
        assert decide_manchester(1.0 + 1j, 1.0 + 1j) == 0  # tie -> 0

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        z0 = complex_normal(rng, 500)
        z1 = complex_normal(rng, 500)
        base = decide_manchester(z0, z1)
        for _ in range(25):
            c = complex(complex_normal(rng)) * 10.0 ** rng.uniform(-8, 8)
            assert np.array_equal(decide_manchester(c * z0, c * z1), base)

    def test_ook_rule(self):
        assert decide_ook(np.sqrt(2.0), 1.0) == 1
        assert decide_ook(0.0, 0.5) == 0
        assert decide_ook(1.0, 1.0) == 0  # tie -> 0


class TestOokThreshold:
    def test_frozen_values(self):
        # tau = ln(s1/s0) s1 s0 / (s1 - s0)
        assert abs(ook_threshold(1.0, np.e) - 1.5819767068693265) <= 1e-14
        assert abs(ook_threshold(1.0, 4.0) - 1.8483924814931874) <= 1e-14

    def test_near_degenerate_limit(self):
        # tau -> s0 as s1 -> s0 from above
        assert abs(ook_threshold(2.0, 2.0 * (1 + 1e-9)) - 2.0) <= 1e-6

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateVariancesError):
            ook_threshold(1.0, 1.0)
        with pytest.raises(DegenerateVariancesError):
            ook_threshold(2.0, 1.0)


class TestDlCancel:
    def test_exact_nulling_of_direct_link(self):
        rng = np.random.default_rng(1)
        for m_r in (2, 4, 8):
            phi1 = rng.uniform(-np.pi, np.pi)
            dl = complex_normal(rng, 256)
            y = np.exp(1j * np.arange(m_r) * phi1)[:, None] * dl[None, :]
            resid = dl_cancel(y, phi1)
            assert np.abs(resid).max() <= 1e-12 * np.abs(y).max()

    def test_aligned_links_cancel_backscatter_too(self):
        rng = np.random.default_rng(2)
        phi = 1.234
        bl = complex_normal(rng, 64)
        y = np.exp(1j * np.arange(4) * phi)[:, None] * bl[None, :]
        assert np.abs(dl_cancel(y, phi)).max() <= 1e-12

    def test_residual_magnitude_identity(self):
        # |exp(j dphi) - 1| = 2 |sin(dphi/2)| on the surviving BL term
        rng = np.random.default_rng(3)
        phi1, phi2 = 0.4, 2.1
        bl = complex_normal(rng, 128)
        y = np.exp(1j * np.arange(2) * phi2)[:, None] * bl[None, :]
        resid = dl_cancel(y, phi1)
        want = 2.0 * abs(np.sin((phi2 - phi1) / 2.0)) * np.abs(bl)
        assert np.allclose(np.abs(resid[0]), want)

    def test_needs_two_antennas(self):
        with pytest.raises(InsufficientAntennasError):
            dl_cancel(np.zeros((1, 8), dtype=complex), 0.0)


def _geom_with_dphi(m_r, dphi, d_over_lambda=0.5):
    ref = 2.0 * np.pi * d_over_lambda
    th1 = float(np.arccos(np.clip((ref - dphi) / ref, -1.0, 1.0)))
    return ArrayGeometry(m_r=m_r, theta1=th1, theta2=0.0, d_over_lambda=d_over_lambda)


class TestAntennaGain:
    def test_frozen_values(self):
        assert antenna_gain(4, 0.0) == 0.0
        assert abs(antenna_gain(4, np.pi / 2) - 4.0) <= 1e-12
        assert abs(antenna_gain(3, 2 * np.pi / 3) - 3.0) <= 1e-12
        assert abs(antenna_gain(2, np.pi) - 2.0) <= 1e-12

    def test_range_and_nulls(self):
        dphi = np.linspace(-2 * np.pi, 2 * np.pi, 4001)
        g = antenna_gain(6, dphi)
        assert np.all(g >= 0.0) and np.all(g <= 6.0)
        assert antenna_gain(6, 2 * np.pi) <= 1e-25

    def test_matches_covariance_form(self):
        worst = 0.0
        for m_r in range(2, 9):
            for dphi in np.linspace(np.pi / 50, np.pi, 50):
                direct = mmse_weights(_geom_with_dphi(m_r, dphi), sigma_n_sq=0.7).gain
                worst = max(worst, abs(antenna_gain(m_r, dphi) - direct) / direct)
        assert worst <= 1e-10

    def test_needs_two_antennas(self):
        with pytest.raises(InsufficientAntennasError):
            antenna_gain(1, 0.5)


class TestMmseWeights:
    def test_combined_noise_and_signal_scaling(self):
        # w* K w = sigma_n^2 and |w* a~|^2 = gain, independent of sigma_n^2
        for sn2 in (0.01, 1.0, 3.7):
            geom = _geom_with_dphi(5, 1.1)
            res = mmse_weights(geom, sn2)
            k = sn2 * (np.eye(4) + np.ones((4, 4)))
            noise_var = np.real(np.conj(res.weights) @ k @ res.weights)
            assert abs(noise_var - sn2) <= 1e-12 * sn2
            sig = abs(np.conj(res.weights) @ res.a_tilde) ** 2
            assert abs(sig - res.gain) <= 1e-10 * res.gain

    def test_gain_independent_of_noise_level(self):
        geom = _geom_with_dphi(4, 0.9)
        assert abs(mmse_weights(geom, 0.01).gain - mmse_weights(geom, 10.0).gain) <= 1e-12

    def test_aligned_links_give_zero(self):
        geom = ArrayGeometry(m_r=4, theta1=0.7, theta2=0.7)
        res = mmse_weights(geom, 1.0)
        assert res.gain == 0.0
        assert np.all(res.weights == 0)

    def test_steering_residual_magnitudes(self):
        at = steering_residual(4, 0.8)
        want = 2.0 * np.abs(np.sin(np.arange(1, 4) * 0.8 / 2.0))
        assert np.allclose(np.abs(at), want)


class TestMaEffectiveFrame:
    def test_silent_tag_noise_free_is_zero(self):
        rng = np.random.default_rng(4)
        geom = ArrayGeometry(m_r=3, theta1=0.2, theta2=-0.9)
        dl = complex_normal(rng, 64)
        y = np.exp(1j * np.outer(np.arange(3), np.full(64, 1.0)) * geom.phi1) * dl[None, :]
        y_eff = ma_effective_frame(y, geom, 1.0)
        assert np.abs(y_eff).max() <= 1e-12

    def test_noise_only_variance_matches_quadratic_form(self):
        # colored residual noise, combined: per-sample variance sigma_n^2
        rng = np.random.default_rng(5)
        geom = ArrayGeometry(m_r=4, theta1=0.3, theta2=2.0)
        sn2 = 0.25
        w = complex_normal(rng, (2000, 4, 256), sn2)
        y_eff = ma_effective_frame(w, geom, sn2)
        var = np.mean(np.abs(y_eff) ** 2)
        assert abs(var / sn2 - 1.0) <= 0.01
