"""End-to-end simulated BER estimation.

Frames are independent trials: fresh stationary fading, fresh ambient
data, fresh noise and (for the array receiver) fresh AoA draws per
frame, matching the marginalized BER definitions.  Batches are keyed by
(seed, point index, batch index) through SeedSequence, so results are
reproducible and independent of how batches are scheduled.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import BerMethod, BerResult, _ma_signal_power, analytical_ber, ook_variances
from .channel import ar1_sequence_batch, complex_normal
from .config import Detector, SystemConfig
from .errors import NoCrossingError
from .phy import Encoding, compose_ma, compose_sa, manchester_on_mask
from .receiver import steering_residual

# Element budgets keeping peak batch memory in the hundreds of MB.
_SA_BATCH_ELEMS = 4_000_000
_MA_BATCH_ELEMS = 1_600_000


class SweepAxis(enum.Enum):
    SNR_DB = "snr"
    SAMPLE_SIZE = "n"
    RHO = "rho"


def _apply_axis(cfg: SystemConfig, axis: SweepAxis, value) -> SystemConfig:
    if axis is SweepAxis.SNR_DB:
        return cfg.replace(snr_db=float(value))
    if axis is SweepAxis.SAMPLE_SIZE:
        return cfg.replace(n_samples=int(value))
    return cfg.with_rho(float(value))


@dataclass(frozen=True)
class ExperimentPlan:
    """A sweep: one axis, its values, the detectors to run and the Monte
    Carlo budget per point (hard frame cap plus early stop once enough
    error events have been seen)."""

    cfg: SystemConfig
    axis: SweepAxis
    values: tuple
    detectors: tuple = (Detector.MANCHESTER_SA,)
    frames_per_point: int = 200_000
    target_errors: int | None = 100
    seed: int = 0

    def __post_init__(self):
        if self.frames_per_point < 1:
            raise ValueError("frames_per_point must be >= 1")
        if list(self.values) != sorted(self.values):
            raise ValueError("sweep values must be sorted")
        if self.target_errors is not None and self.target_errors < 1:
            raise ValueError("target_errors must be >= 1 when given")


@dataclass(frozen=True)
class PointRecord:
    analytical: float | None = None
    mc: float | None = None
    ci95: float | None = None
    frames: int | None = None


@dataclass(frozen=True)
class SweepPoint:
    axis_value: float
    records: dict


@dataclass(frozen=True)
class SweepResult:
    axis: SweepAxis
    points: list
    seed: int
    runtime_s: float = 0.0
    metadata: dict = field(default_factory=dict)

    def curve(self, detector: Detector, use: str = "analytical"):
        """Extract (axis values, BER values) for one detector."""
        xs, ys = [], []
        for pt in self.points:
            rec = pt.records.get(detector)
            if rec is None:
                continue
            val = rec.analytical if use == "analytical" else rec.mc
            if val is not None:
                xs.append(pt.axis_value)
                ys.append(val)
        return np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)


def _batch_rng(seed: int, point_index: int, batch_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), int(point_index), int(batch_index)])
    )


def _sa_batch_errors(cfg: SystemConfig, detector: Detector, n_frames: int, rng) -> int:
    """Simulate n_frames single-antenna frames, return bit error count."""
    n = cfg.n_samples
    bits = rng.integers(0, 2, n_frames)
    h_r = ar1_sequence_batch(cfg.rho_r, cfg.sigma_h_sq, n_frames, n, rng)
    h_b = ar1_sequence_batch(cfg.rho_b, cfg.sigma_h_sq, n_frames, n, rng)
    h_t = ar1_sequence_batch(cfg.rho_t, cfg.sigma_h_sq, n_frames, n, rng)
    x = cfg.source.sample((n_frames, n), rng)
    w = complex_normal(rng, (n_frames, n), cfg.sigma_n_sq)
    if detector.encoding is Encoding.MANCHESTER:
        on = manchester_on_mask(bits, n)
        y = compose_sa(h_r, h_b, h_t, x, w, cfg.alpha, on)
        z0 = y[:, : n // 2].mean(axis=1)
        z1 = y[:, n // 2 :].mean(axis=1)
        decisions = (np.abs(z0) ** 2 > np.abs(z1) ** 2).astype(int)
    else:
        y = compose_sa(h_r, h_b, h_t, x, w, cfg.alpha, bits[:, None].astype(float))
        z = y.mean(axis=1)
        s0, s1 = ook_variances(cfg)
        if s1 > s0:
            g = s1 / s0 - 1.0
            tau = s1 * np.log1p(g) / g
        else:
            tau = np.inf  # no backscatter energy: detector is blind
        decisions = (np.abs(z) ** 2 > tau).astype(int)
    return int(np.sum(decisions != bits))


def _ma_weights_batch(m_r: int, dphi: np.ndarray):
    """Per-frame combining weights and gains; (B,) dphi -> ((B, m_r-1), (B,))."""
    at = steering_residual(m_r, dphi)
    v = at - at.sum(axis=-1, keepdims=True) / m_r  # (I - 11^T/m) a~
    gain = np.maximum(np.real(np.einsum("...i,...i->...", np.conj(at), v)), 0.0)
    safe = np.sqrt(np.where(gain > 0, gain, 1.0))
    w = np.where(gain[..., None] > 0, v / safe[..., None], 0.0)
    return w, gain


def _ma_batch_errors(
    cfg: SystemConfig, detector: Detector, n_frames: int, rng, fixed_aoa=None
) -> int:
    """Simulate n_frames array frames through the full chain: compose the
    per-antenna signal, cancel the direct link, MMSE-combine, detect."""
    n, m = cfg.n_samples, cfg.m_r
    bits = rng.integers(0, 2, n_frames)
    if fixed_aoa is None:
        th1, th2 = cfg.aoa.sample(n_frames, rng)
    else:
        th1 = np.full(n_frames, float(fixed_aoa[0]))
        th2 = np.full(n_frames, float(fixed_aoa[1]))
    two_pi_d = 2.0 * np.pi * cfg.d_over_lambda
    phi1 = two_pi_d * np.cos(th1)
    phi2 = two_pi_d * np.cos(th2)

    h_r = ar1_sequence_batch(cfg.rho_r, cfg.sigma_h_sq, n_frames, n, rng)
    h_b = ar1_sequence_batch(cfg.rho_b, cfg.sigma_h_sq, n_frames, n, rng)
    h_t = ar1_sequence_batch(cfg.rho_t, cfg.sigma_h_sq, n_frames, n, rng)
    x = cfg.source.sample((n_frames, n), rng)
    w = complex_normal(rng, (n_frames, m, n), cfg.sigma_n_sq)

    if detector.encoding is Encoding.MANCHESTER:
        on = manchester_on_mask(bits, n)
    else:
        on = bits[:, None].astype(float)
    dl = h_r * x
    bl = cfg.alpha * on * h_b * h_t * x
    y = compose_ma(dl, bl, w, phi1, phi2, m)

    # Direct-link cancellation with per-frame phase references.
    i = np.arange(1, m)
    ph = np.exp(-1j * phi1[:, None] * i)[:, :, None]
    resid = ph * y[:, 1:, :] - y[:, 0:1, :]

    wts, gain = _ma_weights_batch(m, phi2 - phi1)
    y_eff = np.einsum("bi,bin->bn", np.conj(wts), resid)

    if detector.encoding is Encoding.MANCHESTER:
        z0 = y_eff[:, : n // 2].mean(axis=1)
        z1 = y_eff[:, n // 2 :].mean(axis=1)
        decisions = (np.abs(z0) ** 2 > np.abs(z1) ** 2).astype(int)
    else:
        z = y_eff.mean(axis=1)
        g = gain * _ma_signal_power(cfg, half_frame=False) / cfg.sigma_n_sq
        s1 = (gain * _ma_signal_power(cfg, half_frame=False) + cfg.sigma_n_sq) / n
        gs = np.where(g > 1e-12, g, 1.0)
        tau = np.where(g > 1e-12, s1 * np.log1p(g) / gs, np.inf)
        decisions = (np.abs(z) ** 2 > tau).astype(int)
    return int(np.sum(decisions != bits))


def _point_errors(cfg, detector, frames, seed, point_index, target_errors, fixed_aoa):
    """Run batches until the frame budget or error target is met; returns
    (errors, frames_run).  Deterministic for fixed arguments."""
    detector = Detector(detector)
    per_elem = _MA_BATCH_ELEMS if detector.multi_antenna else _SA_BATCH_ELEMS
    batch = max(64, min(frames, per_elem // cfg.n_samples, 16384))
    errors = 0
    done = 0
    batch_index = 0
    while done < frames:
        nb = min(batch, frames - done)
        rng = _batch_rng(seed, point_index, batch_index)
        if detector.multi_antenna:
            errors += _ma_batch_errors(cfg, detector, nb, rng, fixed_aoa)
        else:
            errors += _sa_batch_errors(cfg, detector, nb, rng)
        done += nb
        batch_index += 1
        if target_errors is not None and errors >= target_errors:
            break
    return errors, done


def run_point(
    cfg: SystemConfig,
    detector: Detector,
    frames: int,
    seed: int = 0,
    *,
    target_errors: int | None = None,
    fixed_aoa: tuple | None = None,
    point_index: int = 0,
) -> BerResult:
    """Monte Carlo BER of one detector at one operating point.

    Every frame draws an equiprobable bit, fresh fading and (for array
    detectors) fresh AoAs per cfg.aoa; fixed_aoa switches to the
    conditional mode with pinned angles.  The result carries the 95%
    confidence halfwidth 1.96 sqrt(p(1-p)/frames).
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    errors, done = _point_errors(
        cfg, detector, frames, seed, point_index, target_errors, fixed_aoa
    )
    p = errors / done
    ci = 1.96 * np.sqrt(p * (1.0 - p) / done)
    return BerResult(p, BerMethod.MONTE_CARLO, ci_halfwidth=ci)


def _sweep_point_task(args):
    (cfg, axis, value, detectors, frames, target_errors, seed, point_index, mode) = args
    point_cfg = _apply_axis(cfg, axis, value)
    records = {}
    for d_index, det in enumerate(detectors):
        analytical = mc = ci = None
        frames_run = None
        if mode in ("analytical", "both"):
            analytical = analytical_ber(point_cfg, det).value
        if mode in ("mc", "both"):
            errors, frames_run = _point_errors(
                point_cfg, det, frames, seed, point_index * 16 + d_index,
                target_errors, None,
            )
            mc = errors / frames_run
            ci = 1.96 * float(np.sqrt(mc * (1.0 - mc) / frames_run))
        records[det] = PointRecord(analytical=analytical, mc=mc, ci95=ci, frames=frames_run)
    return SweepPoint(axis_value=float(value), records=records)


def run_sweep(
    plan: ExperimentPlan, mode: str = "both", workers: int = 1, progress=None
) -> SweepResult:
    """Run every (axis value, detector) pair of the plan.

    mode selects analytical evaluation, Monte Carlo simulation or both.
    workers > 1 distributes points over processes; results are identical
    to the serial run because every batch's random stream is keyed by
    (seed, point, batch), never by scheduling order.  progress, if
    given, is called with each finished SweepPoint in axis order.
    """
    if mode not in ("analytical", "mc", "both"):
        raise ValueError("mode must be 'analytical', 'mc' or 'both'")
    t0 = time.perf_counter()
    tasks = [
        (
            plan.cfg,
            plan.axis,
            value,
            tuple(Detector(d) for d in plan.detectors),
            plan.frames_per_point,
            plan.target_errors,
            plan.seed,
            idx,
            mode,
        )
        for idx, value in enumerate(plan.values)
    ]
    points = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for point in pool.map(_sweep_point_task, tasks):
                points.append(point)
                if progress is not None:
                    progress(point)
    else:
        for task in tasks:
            point = _sweep_point_task(task)
            points.append(point)
            if progress is not None:
                progress(point)
    return SweepResult(
        axis=plan.axis,
        points=points,
        seed=plan.seed,
        runtime_s=time.perf_counter() - t0,
        metadata={"mode": mode, "frames_per_point": plan.frames_per_point},
    )


def measure_snr_gain(curve_manchester, curve_ook, target_ber: float) -> float:
    """Horizontal gap in dB between two BER-vs-SNR curves at target_ber.

    Each curve is an (snr_db, ber) pair of arrays; crossings are located
    by linear interpolation of log10(BER) against SNR.  Positive values
    mean the Manchester curve reaches the target at lower SNR.
    """
    return _crossing_snr(*curve_ook, target_ber) - _crossing_snr(
        *curve_manchester, target_ber
    )


def _crossing_snr(snr_db, ber, target: float) -> float:
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    if len(snr_db) < 2:
        raise NoCrossingError("need at least two sweep points")
    with np.errstate(divide="ignore"):
        lp = np.log10(ber)
    lt = np.log10(target)
    hits = np.where((lp[:-1] >= lt) & (lp[1:] < lt))[0]
    exact = np.where(lp == lt)[0]
    if len(exact):
        return float(snr_db[exact[0]])
    if not len(hits):
        raise NoCrossingError(
            "BER curve never crosses %g within the swept SNR range" % target
        )
    i = hits[0]
    frac = (lt - lp[i]) / (lp[i + 1] - lp[i])
    return float(snr_db[i] + frac * (snr_db[i + 1] - snr_db[i]))
