"""Command-line front end.

    backscatter-ber sweep --config FILE [--out DIR] [--seed N] [--mode M]
    backscatter-ber validate --config FILE
    backscatter-ber preset {fig2a,fig2b,fig3a,fig3b} --out DIR [...]

Configs are flat `key = value` text files with `#` comments; unknown
keys are rejected.  Sweeps emit `<scenario>_ber.csv` (schema:
axis,detector,receiver,analytical_ber,mc_ber,ci95,frames) and a matching
SVG plot rendered from the CSV.  Exit codes: 0 success, 1 config or
validation failure, 2 runtime/quadrature failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .checks import run_all_checks
from .config import (
    AoaKind,
    AoaModel,
    Detector,
    SystemConfig,
    alpha_from_attenuation_db,
)
from .errors import (
    BackscatterError,
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
)
from .montecarlo import ExperimentPlan, SweepAxis, run_sweep
from .phy import AmbientSource, SourceKind
from .plots import CSV_COLUMNS, plot_sweep_csv

_SOURCE_KINDS = {k.value: k for k in SourceKind}
_AOA_KINDS = {k.value: k for k in AoaKind}
_DETECTORS = {d.value: d for d in Detector}
_AXES = {a.value: a for a in SweepAxis}
_MODES = ("analytical", "mc", "both")


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated experiment description."""

    scenario: str
    system: SystemConfig
    sweep_axis: SweepAxis = SweepAxis.SNR_DB
    sweep_values: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    detectors: tuple = tuple(Detector)
    mode: str = "both"
    frames: int = 200_000
    target_errors: int = 100
    seed: int = 0
    out_dir: str = "."
    quad_rel_tol: float = 1e-6

    def plan(self) -> ExperimentPlan:
        return ExperimentPlan(
            cfg=self.system,
            axis=self.sweep_axis,
            values=self.sweep_values,
            detectors=self.detectors,
            frames_per_point=self.frames,
            target_errors=self.target_errors,
            seed=self.seed,
        )


_KNOWN_KEYS = {
    "scenario", "mode", "seed", "out_dir", "attenuation_db", "sigma_h_sq", "n",
    "m_r", "d_over_lambda", "rho", "rho_r", "rho_b", "rho_t", "fd_ts_r",
    "fd_ts_b", "fd_ts_t", "doppler_ratio_a", "ambient", "ambient_power",
    "aoa", "aoa_spread_deg", "snr_db", "sweep", "sweep_values", "detectors",
    "frames", "target_errors", "quad_rel_tol",
}


def _read_pairs(path):
    pairs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigParseError("%s:%d: expected 'key = value'" % (path, lineno))
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _KNOWN_KEYS:
                raise ConfigParseError("%s:%d: unknown key '%s'" % (path, lineno, key))
            if key in pairs:
                raise ConfigParseError("%s:%d: duplicate key '%s'" % (path, lineno, key))
            if not value:
                raise ConfigParseError("%s:%d: empty value for '%s'" % (path, lineno, key))
            pairs[key] = (value, lineno)
    return pairs


def _convert(pairs, path, key, conv, default):
    if key not in pairs:
        return default
    value, lineno = pairs[key]
    try:
        return conv(value)
    except (ValueError, KeyError) as exc:
        raise ConfigParseError(
            "%s:%d: bad value for '%s': %s" % (path, lineno, key, exc)
        ) from exc


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def parse_config(path) -> RunConfig:
    """Parse a key = value config file into a validated RunConfig."""
    path = str(path)
    pairs = _read_pairs(path)
    get = lambda key, conv, default: _convert(pairs, path, key, conv, default)  # noqa: E731

    scenario = get("scenario", str, Path(path).stem)
    mode = get("mode", str, "both")
    if mode not in _MODES:
        raise ConfigValidationError("mode must be one of %s" % (_MODES,))

    rho_all = get("rho", float, None)
    rhos = {}
    for link in ("r", "b", "t"):
        rho_link = get("rho_%s" % link, float, None)
        fd_ts = get("fd_ts_%s" % link, float, None)
        if rho_link is not None and fd_ts is not None:
            raise ConfigValidationError(
                "give either rho_%s or fd_ts_%s, not both" % (link, link)
            )
        if fd_ts is not None:
            from .channel import DopplerSpec, LinkKind, correlation_factor

            # The source-to-tag link sees Doppler at both moving ends.
            kind = LinkKind.DUAL_END if link == "t" else LinkKind.SINGLE_END
            spec = DopplerSpec(
                f_d=fd_ts, t_s=1.0, a=get("doppler_ratio_a", float, 1.0), link_kind=kind
            )
            rhos[link] = correlation_factor(spec)
        elif rho_link is not None:
            rhos[link] = rho_link
        else:
            rhos[link] = rho_all if rho_all is not None else 0.0

    ambient = get("ambient", lambda v: _SOURCE_KINDS[v], SourceKind.COMPLEX_GAUSSIAN)
    aoa_kind = get("aoa", lambda v: _AOA_KINDS[v], AoaKind.UNIFORM_SPREAD)
    try:
        source = AmbientSource(ambient, get("ambient_power", float, 1.0))
        aoa = AoaModel(aoa_kind, get("aoa_spread_deg", float, 10.0))
        system = SystemConfig(
            alpha=alpha_from_attenuation_db(get("attenuation_db", float, 1.1)),
            sigma_h_sq=get("sigma_h_sq", float, 1.0),
            n_samples=get("n", int, 2000),
            snr_db=get("snr_db", float, 20.0),
            m_r=get("m_r", int, 4),
            d_over_lambda=get("d_over_lambda", float, 0.5),
            rho_r=rhos["r"],
            rho_b=rhos["b"],
            rho_t=rhos["t"],
            source=source,
            aoa=aoa,
        )
    except ConfigError:
        raise
    except (ValueError, BackscatterError) as exc:
        raise ConfigValidationError(str(exc)) from exc

    axis = get("sweep", lambda v: _AXES[v], SweepAxis.SNR_DB)
    values = get("sweep_values", _float_list, RunConfig.sweep_values)
    if axis is SweepAxis.SAMPLE_SIZE:
        for v in values:
            if v != int(v) or int(v) % 2 or int(v) < 2:
                raise ConfigValidationError(
                    "sample-size sweep values must be even integers >= 2"
                )
    if axis is SweepAxis.RHO:
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ConfigValidationError("rho sweep values must lie in [0, 1]")

    detectors = get(
        "detectors",
        lambda v: tuple(_DETECTORS[d.strip()] for d in v.split(",") if d.strip()),
        tuple(Detector),
    )
    frames = get("frames", int, 200_000)
    target_errors = get("target_errors", int, 100)
    quad_rel_tol = get("quad_rel_tol", float, 1e-6)
    if frames < 1:
        raise ConfigValidationError("frames must be >= 1")
    if target_errors < 1:
        raise ConfigValidationError("target_errors must be >= 1")
    if not 0.0 < quad_rel_tol < 1.0:
        raise ConfigValidationError("quad_rel_tol must lie in (0, 1)")

    return RunConfig(
        scenario=scenario,
        system=system,
        sweep_axis=axis,
        sweep_values=tuple(sorted(values)),
        detectors=detectors,
        mode=mode,
        frames=frames,
        target_errors=target_errors,
        seed=get("seed", int, 0),
        out_dir=get("out_dir", str, "."),
        quad_rel_tol=quad_rel_tol,
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def write_sweep(run: RunConfig, out_dir=None):
    """Run the sweep and emit CSV + SVG; rows are flushed per point so a
    failure mid-run leaves a usable partial CSV."""
    out = Path(out_dir if out_dir is not None else run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / ("%s_ber.csv" % run.scenario)
    svg_path = out / ("%s_ber.svg" % run.scenario)

    rows_written = 0
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        fh.flush()

        def on_point(point):
            nonlocal rows_written
            for det in run.detectors:
                rec = point.records[det]
                encoding = "manchester" if "manchester" in det.value else "ook"
                rx = "ma" if det.multi_antenna else "sa"
                writer.writerow(
                    [
                        _fmt(point.axis_value),
                        encoding,
                        rx,
                        _fmt(rec.analytical),
                        _fmt(rec.mc),
                        _fmt(rec.ci95),
                        _fmt(rec.frames),
                    ]
                )
                rows_written += 1
            fh.flush()

        result = run_sweep(run.plan(), mode=run.mode, progress=on_point)

    plot_sweep_csv(csv_path, svg_path, title=run.scenario, axis_kind=run.sweep_axis.value)
    return result, csv_path, svg_path


def cmd_sweep(args) -> int:
    run = parse_config(args.config)
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    if args.mode is not None:
        run = replace(run, mode=args.mode)
    result, csv_path, svg_path = write_sweep(run, args.out)
    print("wrote %s and %s (%.1f s)" % (csv_path, svg_path, result.runtime_s))
    return 0


def cmd_validate(args) -> int:
    run = parse_config(args.config)
    results = run_all_checks(run.system, quad_rel_tol=run.quad_rel_tol)
    width = max(len(name) for name, _, _ in results)
    failures = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        print("%-*s  %s  %s" % (width, name, status, detail))
    print("%d/%d checks passed" % (len(results) - failures, len(results)))
    return 0 if failures == 0 else 1


# Scenario presets matching the headline experiment grids: SNR sweeps at
# N = 2000 and sample-size sweeps at SNR = 20 dB, M_r = 4, attenuation
# 1.1 dB, with uniform and narrow (10 degree) AoA spreads.
_SNR_GRID = tuple(float(v) for v in range(0, 31, 2))
_N_GRID = (100.0, 200.0, 400.0, 1000.0, 2000.0, 4000.0, 8000.0)
_MA_ONLY = (Detector.MANCHESTER_MA, Detector.OOK_MA)


def _preset_runs(name: str):
    aoa = AoaKind.UNIFORM_SPREAD if name in ("fig2a", "fig3a") else AoaKind.NARROW_SPREAD
    base = SystemConfig(aoa=AoaModel(aoa))
    runs = []
    if name in ("fig2a", "fig2b"):
        for rho, detectors in ((0.0, tuple(Detector)), (0.5, _MA_ONLY), (0.9, _MA_ONLY)):
            runs.append(
                RunConfig(
                    scenario="%s_rho%s" % (name, str(rho).replace(".", "")),
                    system=base.with_rho(rho),
                    sweep_axis=SweepAxis.SNR_DB,
                    sweep_values=_SNR_GRID,
                    detectors=detectors,
                )
            )
    else:
        for rho in (0.0, 0.9):
            runs.append(
                RunConfig(
                    scenario="%s_rho%s" % (name, str(rho).replace(".", "")),
                    system=base.with_rho(rho).replace(snr_db=20.0),
                    sweep_axis=SweepAxis.SAMPLE_SIZE,
                    sweep_values=_N_GRID,
                    detectors=_MA_ONLY,
                )
            )
    return runs


PRESETS = ("fig2a", "fig2b", "fig3a", "fig3b")


def cmd_preset(args) -> int:
    for run in _preset_runs(args.name):
        run = replace(
            run,
            mode=args.mode or run.mode,
            seed=args.seed if args.seed is not None else run.seed,
            frames=args.frames or run.frames,
        )
        result, csv_path, svg_path = write_sweep(run, args.out)
        print("wrote %s and %s (%.1f s)" % (csv_path, svg_path, result.runtime_s))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="backscatter-ber",
        description="Analytical and Monte Carlo BER engine for "
        "non-coherent ambient backscatter under time-selective fading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a configured sweep, emit CSV and SVG")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--mode", choices=_MODES, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run the self-validation checks")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate)

    p_pre = sub.add_parser("preset", help="run a bundled figure scenario")
    p_pre.add_argument("name", choices=PRESETS)
    p_pre.add_argument("--out", default=".")
    p_pre.add_argument("--seed", type=int, default=None)
    p_pre.add_argument("--mode", choices=_MODES, default=None)
    p_pre.add_argument("--frames", type=int, default=None)
    p_pre.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except BackscatterError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
