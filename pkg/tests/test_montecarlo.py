import numpy as np
import pytest

from backscatter_ber.analysis import ma_conditional_ber, sa_ber_approx, sa_channel_stats
from backscatter_ber.config import AoaKind, AoaModel, Detector, SystemConfig
from backscatter_ber.errors import NoCrossingError
from backscatter_ber.montecarlo import (
    ExperimentPlan,
    SweepAxis,
    measure_snr_gain,
    run_point,
    run_sweep,
)


def _cfg(**kw):
    return SystemConfig(**kw)


class TestRunPoint:
    def test_silent_tag_is_coin_flip(self):
        cfg = _cfg(alpha=0.0, n_samples=16)
        res = run_point(cfg, Detector.MANCHESTER_SA, frames=4000, seed=1)
        assert abs(res.value - 0.5) <= 2 * res.ci_halfwidth
        res = run_point(cfg, Detector.OOK_SA, frames=4000, seed=2)
        assert abs(res.value - 0.5) <= 2 * res.ci_halfwidth

    def test_noiseless_detectable_signal(self):
        # strong tag, separable AoAs, vanishing noise: no errors at all
        cfg = _cfg(alpha=1.0, n_samples=64, snr_db=120.0)
        res = run_point(
            cfg, Detector.MANCHESTER_MA, frames=30_000, seed=3, fixed_aoa=(0.4, 2.0)
        )
        assert res.value == 0.0

    def test_determinism(self):
        cfg = _cfg(n_samples=32, snr_db=5.0)
        a = run_point(cfg, Detector.MANCHESTER_MA, frames=2500, seed=7)
        b = run_point(cfg, Detector.MANCHESTER_MA, frames=2500, seed=7)
        assert a.value == b.value

    def test_fixed_aoa_matches_conditional_theory(self):
        cfg = _cfg(n_samples=500, snr_db=10.0)
        th1, th2 = 0.7, 2.1
        res = run_point(
            cfg, Detector.MANCHESTER_MA, frames=5000, seed=11, fixed_aoa=(th1, th2)
        )
        from backscatter_ber.receiver import antenna_gain

        dphi = np.pi * (np.cos(th2) - np.cos(th1))
        want = ma_conditional_ber(cfg, antenna_gain(4, dphi))
        se = max(np.sqrt(want * (1 - want) / 5000), 1e-9)
        assert abs(res.value - want) <= 3 * se

    def test_sa_matches_theory_at_moderate_snr(self):
        cfg = _cfg(n_samples=1000, snr_db=10.0)
        res = run_point(cfg, Detector.MANCHESTER_SA, frames=4000, seed=13)
        want = sa_ber_approx(sa_channel_stats(cfg)).value
        se = np.sqrt(want * (1 - want) / 4000)
        assert abs(res.value - want) <= 3 * se

    def test_ci_validity_meta(self):
        # known p = 0.5 (silent tag): the 95% CI must cover it in at
        # least 90 of 100 independent runs
        cfg = _cfg(alpha=0.0, n_samples=8)
        hits = 0
        for seed in range(100):
            res = run_point(cfg, Detector.MANCHESTER_SA, frames=300, seed=1000 + seed)
            hits += abs(res.value - 0.5) <= res.ci_halfwidth
        assert hits >= 90

    def test_frames_validation(self):
        with pytest.raises(ValueError):
            run_point(_cfg(), Detector.MANCHESTER_SA, frames=0)


class TestRunSweep:
    def test_single_point_equals_run_point(self):
        cfg = _cfg(n_samples=32, snr_db=5.0)
        plan = ExperimentPlan(
            cfg=cfg,
            axis=SweepAxis.SNR_DB,
            values=(5.0,),
            detectors=(Detector.MANCHESTER_SA,),
            frames_per_point=2000,
            target_errors=None,
            seed=21,
        )
        sweep = run_sweep(plan, mode="mc")
        direct = run_point(cfg, Detector.MANCHESTER_SA, frames=2000, seed=21)
        assert sweep.points[0].records[Detector.MANCHESTER_SA].mc == direct.value

    def test_deterministic_and_worker_invariant(self):
        plan = ExperimentPlan(
            cfg=_cfg(n_samples=16, snr_db=10.0),
            axis=SweepAxis.SNR_DB,
            values=(0.0, 10.0),
            detectors=(Detector.MANCHESTER_SA, Detector.MANCHESTER_MA),
            frames_per_point=600,
            target_errors=None,
            seed=5,
        )
        serial = run_sweep(plan, mode="mc")
        again = run_sweep(plan, mode="mc")
        parallel = run_sweep(plan, mode="mc", workers=2)
        for a, b, c in zip(serial.points, again.points, parallel.points):
            for det in plan.detectors:
                assert a.records[det].mc == b.records[det].mc == c.records[det].mc

    def test_snr_monotonicity_within_ci(self):
        plan = ExperimentPlan(
            cfg=_cfg(n_samples=64),
            axis=SweepAxis.SNR_DB,
            values=(0.0, 10.0, 20.0),
            detectors=(Detector.MANCHESTER_MA,),
            frames_per_point=3000,
            target_errors=None,
            seed=9,
        )
        sweep = run_sweep(plan, mode="mc")
        recs = [p.records[Detector.MANCHESTER_MA] for p in sweep.points]
        for lo, hi in zip(recs[1:], recs[:-1]):
            assert lo.mc <= hi.mc + lo.ci95 + hi.ci95

    def test_adaptive_early_stop(self):
        plan = ExperimentPlan(
            cfg=_cfg(alpha=0.0, n_samples=8),
            axis=SweepAxis.SNR_DB,
            values=(10.0,),
            detectors=(Detector.MANCHESTER_SA,),
            frames_per_point=100_000,
            target_errors=50,
            seed=2,
        )
        sweep = run_sweep(plan, mode="mc")
        rec = sweep.points[0].records[Detector.MANCHESTER_SA]
        assert rec.frames < 100_000  # stopped at the error target
        assert rec.mc * rec.frames >= 50

    def test_axis_application(self):
        plan = ExperimentPlan(
            cfg=_cfg(n_samples=16),
            axis=SweepAxis.RHO,
            values=(0.0, 0.9),
            detectors=(Detector.MANCHESTER_SA,),
            frames_per_point=10,
            target_errors=None,
        )
        sweep = run_sweep(plan, mode="analytical")
        a, b = (p.records[Detector.MANCHESTER_SA].analytical for p in sweep.points)
        assert a is not None and b is not None

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            ExperimentPlan(cfg=_cfg(), axis=SweepAxis.SNR_DB, values=(10.0, 0.0))
        with pytest.raises(ValueError):
            ExperimentPlan(cfg=_cfg(), axis=SweepAxis.SNR_DB, values=(0.0,), frames_per_point=0)

    def test_curve_extraction(self):
        plan = ExperimentPlan(
            cfg=_cfg(n_samples=64),
            axis=SweepAxis.SNR_DB,
            values=(0.0, 20.0),
            detectors=(Detector.MANCHESTER_MA,),
            frames_per_point=10,
            target_errors=None,
        )
        sweep = run_sweep(plan, mode="analytical")
        snr, ber = sweep.curve(Detector.MANCHESTER_MA, use="analytical")
        assert snr.tolist() == [0.0, 20.0]
        assert ber[1] < ber[0]


class TestSnrGain:
    def test_identical_curves(self):
        snr = np.linspace(0, 30, 16)
        ber = 10 ** (-snr / 10 - 0.5)
        assert abs(measure_snr_gain((snr, ber), (snr, ber), 1e-2)) <= 1e-12

    def test_synthetic_shift(self):
        snr = np.linspace(0, 30, 16)
        ber = 10 ** (-snr / 10 - 0.5)
        gain = measure_snr_gain((snr, ber), (snr + 4.0, ber), 1e-2)
        assert abs(gain - 4.0) <= 1e-9

    def test_no_crossing(self):
        snr = np.linspace(0, 30, 16)
        ber = np.full(16, 0.3)
        with pytest.raises(NoCrossingError):
            measure_snr_gain((snr, ber), (snr, ber), 1e-3)
