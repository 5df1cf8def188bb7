"""Command-line front end: pulse design, simulations, sweeps, optimization.

Every report path writes deterministic CSV (fixed 12-significant-digit
formatting, fixed row order, no timestamps) and a companion PNG figure.
Exit codes: 0 success, 1 numerical failure, 2 configuration failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import blockade, dynamics, plotting, pulses
from .errors import ConfigError, RydgateError
from .gate import (
    SequenceSpec,
    build_sequence,
    gate_metrics,
    optimize_gate,
    population_error,
)
from .params import (
    TWO_PI,
    PhysicalSetting,
    angular_to_ghz,
    ghz_to_angular,
    load_setting,
    load_setting_file,
    with_b0,
)

OUT_ENV_VAR = "RYDGATE_OUT"

METRIC_COLUMNS = (
    "t_g_ns", "tau_t_ns", "tau_c_ns", "pulse_kind", "lambda_GHz", "amp_scale",
    "pop_error", "bell_infidelity", "trace_distance", "phi_ent_rad",
    "amp_scale_control", "error",
)

_SEGMENT_NAMES = ("control_pi", "target_2pi", "control_mpi")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _parse_values(text: str, what: str) -> tuple[float, ...]:
    """Parse '30', '20,30,40', or 'start:stop:step' into a value tuple."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            lo, hi, step = parts
            if step <= 0.0 or hi < lo:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(lo + i * step for i in range(n))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {what} value {text!r}") from None


def _parse_ratio(text: str) -> float:
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            value = float(num) / float(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse ratio {text!r}") from None
    if not 0.0 < value < 10.0:
        raise ConfigError(f"tau_c ratio {value} out of range")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated common configuration for one CLI invocation."""

    subcommand: str
    setting: PhysicalSetting
    pulse_kinds: tuple[str, ...]
    model: str
    tau_t_values: tuple[float, ...]
    tau_c_ratio: float
    tau_c_explicit: float | None
    optimize: bool
    out_dir: str
    rtol: float
    atol: float
    workers: int
    plot: bool

    def tau_c_for(self, tau_t: float) -> float:
        if self.tau_c_explicit is not None:
            return self.tau_c_explicit
        return self.tau_c_ratio * tau_t

    def make_spec(self, tau_t: float, kind: str, lambda_target=0.0,
                  amp_scale_target=1.0, amp_scale_control=1.0) -> SequenceSpec:
        return SequenceSpec(
            tau_t=tau_t, tau_c=self.tau_c_for(tau_t), pulse_kind=kind,
            lambda_target=lambda_target, amp_scale_target=amp_scale_target,
            amp_scale_control=amp_scale_control,
        )


def _make_config(args) -> RunConfig:
    if args.setting_file:
        setting = load_setting_file(args.setting_file)
    else:
        setting = load_setting(args.setting)
    kinds = tuple(k.strip() for k in args.pulse.split(",") if k.strip())
    if not kinds:
        raise ConfigError("no pulse kind given")
    for kind in kinds:
        if kind not in pulses.PULSE_KINDS:
            raise ConfigError(
                f"unknown pulse kind {kind!r}; choose from {', '.join(pulses.PULSE_KINDS)}")
    if args.model not in ("unitary", "lindblad"):
        raise ConfigError(f"unknown model {args.model!r}")
    tau_values = _parse_values(args.tau_t, "--tau-t") if args.tau_t else ()
    if args.tau_t and not tau_values:
        raise ConfigError("--tau-t produced an empty range")
    if any(t <= 0.0 for t in tau_values):
        raise ConfigError("--tau-t values must be positive")
    rtol = float(args.tol)
    if not 0.0 < rtol < 1e-2:
        raise ConfigError("--tol must be a small positive number")
    workers = int(args.workers)
    if workers < 1:
        raise ConfigError("--workers must be >= 1")
    tau_c_explicit = None
    if args.tau_c is not None:
        try:
            tau_c_explicit = float(args.tau_c)
        except ValueError:
            raise ConfigError(f"cannot parse --tau-c value {args.tau_c!r}") from None
        if tau_c_explicit <= 0.0:
            raise ConfigError("--tau-c must be positive")
    out_dir = args.out or os.environ.get(OUT_ENV_VAR) or "."
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir!r}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir!r} is not writable")
    return RunConfig(
        subcommand=args.command,
        setting=setting,
        pulse_kinds=kinds,
        model=args.model,
        tau_t_values=tau_values,
        tau_c_ratio=_parse_ratio(args.tau_c_ratio),
        tau_c_explicit=tau_c_explicit,
        optimize=getattr(args, "optimize", False),
        out_dir=out_dir,
        rtol=rtol,
        atol=rtol * 1e-2,
        workers=workers,
        plot=not args.no_plot,
    )


def _single_tau(cfg: RunConfig, default: float | None = None) -> float:
    if not cfg.tau_t_values:
        if default is not None:
            return default
        raise ConfigError("this command needs --tau-t")
    if len(cfg.tau_t_values) != 1:
        raise ConfigError("this command needs exactly one --tau-t value")
    return cfg.tau_t_values[0]


def _setting_digest(setting: PhysicalSetting) -> str:
    return hashlib.md5(repr(setting).encode()).hexdigest()[:8]


def _cache_key(setting, tau_t, kind, tau_c) -> str:
    return (f"{setting.name}-{_setting_digest(setting)}|tau_t={tau_t:.9g}"
            f"|kind={kind}|tau_c={tau_c:.9g}")


def _load_cache(path) -> dict:
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _save_cache(path, cache: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cache, fh, indent=1, sort_keys=True)


# -- subcommand implementations ----------------------------------------------

def cmd_design(cfg: RunConfig, args) -> int:
    """Sample the three calibrated envelopes and their spectra to files."""
    tau_t = _single_tau(cfg)
    kind = cfg.pulse_kinds[0]
    spec = cfg.make_spec(tau_t, kind, lambda_target=ghz_to_angular(args.lambda_ghz))
    segments = build_sequence(spec, cfg.setting)

    wave_panels = []
    for name, seg in zip(_SEGMENT_NAMES, segments):
        pulse = seg.pulse_control or seg.pulse_target
        path = os.path.join(cfg.out_dir, f"waveform_{name}.csv")
        pulses.export_waveform(pulse, path, samples=args.samples)
        t = np.linspace(0.0, pulse.duration, args.samples)
        wave_panels.append((name, seg.t0, t, np.atleast_1d(pulses.envelope(pulse, t))))
        print(f"segment {name}: kind={pulse.kind} T={pulse.duration:.6g} ns "
              f"area={pulse.area:.6g} rad N={pulse.derivative_order} "
              f"amplitude={pulse.amplitude:.6g} rad/ns "
              f"peak={pulses.peak_amplitude(pulse):.6g} rad/ns")
        if pulse.kind == "drag":
            nulls = ", ".join(f"{angular_to_ghz(d):.6g}" for d in pulse.null_frequencies)
            coeffs = ", ".join(f"{a:.8g}" for a in pulse.drag_coeffs)
            print(f"  nulls (GHz): {nulls}; derivative coefficients: {coeffs}")

    delta_max = ghz_to_angular(args.delta_max_ghz) if args.delta_max_ghz else \
        1.3 * max(abs(cfg.setting.delta_plus), abs(cfg.setting.delta_minus),
                  abs(cfg.setting.delta_pp1_half), cfg.setting.b0)
    deltas = np.linspace(-delta_max, delta_max, args.delta_points)
    curves = []
    nulls = []
    for name, seg in zip(_SEGMENT_NAMES[:2], segments[:2]):
        pulse = seg.pulse_control or seg.pulse_target
        fn = pulses.envelope_fn(pulse)
        peak = pulses.peak_amplitude(pulse)
        values = [pulses.spectrum(fn, float(d), pulse.duration, peak=peak)
                  for d in deltas]
        path = os.path.join(cfg.out_dir, f"spectrum_{name}.csv")
        _write_csv(path, ("delta_GHz", "abs_S", "re_S", "im_S"),
                   [[d / TWO_PI, abs(s), s.real, s.imag]
                    for d, s in zip(deltas, values)])
        curves.append((name, deltas, [abs(s) for s in values]))
        nulls.extend(pulse.null_frequencies)

    if cfg.plot:
        plotting.save_waveform_figure(os.path.join(cfg.out_dir, "waveform.png"), wave_panels)
        plotting.save_spectrum_figure(os.path.join(cfg.out_dir, "spectrum.png"),
                                      curves, null_frequencies=nulls)
    return 0


def _metrics_row(cfg: RunConfig, tau_t, kind, lam, s_t, s_c, want_bell) -> dict:
    spec = cfg.make_spec(tau_t, kind, lambda_target=lam,
                         amp_scale_target=s_t, amp_scale_control=s_c)
    row = {
        "t_g_ns": spec.t_g, "tau_t_ns": tau_t, "tau_c_ns": spec.tau_c,
        "pulse_kind": kind, "lambda_GHz": angular_to_ghz(lam), "amp_scale": s_t,
        "amp_scale_control": s_c, "pop_error": None, "bell_infidelity": None,
        "trace_distance": None, "phi_ent_rad": None, "error": "",
    }
    try:
        if want_bell:
            metrics = gate_metrics(spec, cfg.setting, cfg.model,
                                   rtol=cfg.rtol, atol=cfg.atol)
            row.update(
                pop_error=metrics.population_error,
                bell_infidelity=1.0 - metrics.bell_fidelity,
                trace_distance=metrics.trace_distance,
                phi_ent_rad=metrics.entangling_phase,
            )
        else:
            row["pop_error"] = population_error(spec, cfg.setting, cfg.model,
                                                rtol=cfg.rtol, atol=cfg.atol)
    except RydgateError as exc:
        row["error"] = str(exc)
    return row


def _sweep_time_point(payload) -> dict:
    cfg, tau_t, kind, want_bell, cached = payload
    lam, s_t, s_c = 0.0, 1.0, 1.0
    if cfg.optimize:
        if cached is not None:
            lam, s_t, s_c = cached
        else:
            spec = cfg.make_spec(tau_t, kind)
            try:
                result = optimize_gate(spec, cfg.setting, rtol=cfg.rtol, atol=cfg.atol)
                lam = result.spec.lambda_target
                s_t = result.spec.amp_scale_target
                s_c = result.spec.amp_scale_control
            except RydgateError as exc:
                row = _metrics_row(cfg, tau_t, kind, 0.0, 1.0, 1.0, want_bell)
                row["error"] = f"optimization failed: {exc}"
                return row
    row = _metrics_row(cfg, tau_t, kind, lam, s_t, s_c, want_bell)
    return row


def cmd_sweep_time(cfg: RunConfig, args) -> int:
    """Metrics versus total gate time for each requested pulse kind."""
    if not cfg.tau_t_values:
        raise ConfigError("sweep-time needs a --tau-t range")
    want_bell = args.metrics == "all"
    cache_path = os.path.join(cfg.out_dir, "opt_cache.json")
    cache = _load_cache(cache_path) if cfg.optimize else {}

    points = []
    for tau_t in sorted(cfg.tau_t_values):
        for kind in cfg.pulse_kinds:
            key = _cache_key(cfg.setting, tau_t, kind, cfg.tau_c_for(tau_t))
            cached = None
            if cfg.optimize and key in cache:
                entry = cache[key]
                cached = (entry["lambda_target"], entry["amp_scale_target"],
                          entry["amp_scale_control"])
            points.append((cfg, tau_t, kind, want_bell, cached))

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_time_point, points))
    else:
        rows = [_sweep_time_point(p) for p in points]

    if cfg.optimize:
        for (_, tau_t, kind, _, _), row in zip(points, rows):
            if not row["error"]:
                key = _cache_key(cfg.setting, tau_t, kind, cfg.tau_c_for(tau_t))
                cache[key] = {
                    "lambda_target": ghz_to_angular(row["lambda_GHz"]),
                    "amp_scale_target": row["amp_scale"],
                    "amp_scale_control": row["amp_scale_control"],
                }
        _save_cache(cache_path, cache)

    out_csv = os.path.join(cfg.out_dir, "sweep_time.csv")
    _write_csv(out_csv, METRIC_COLUMNS, [[r[c] for c in METRIC_COLUMNS] for r in rows])
    if cfg.plot:
        plotting.save_sweep_time_figure(os.path.join(cfg.out_dir, "sweep_time.png"), rows)
    print(f"wrote {out_csv} ({len(rows)} rows)")
    return 0


def _sweep_blockade_point(payload) -> dict:
    cfg, b0_ghz, kind, model_obj = payload
    row = {"b0_GHz": b0_ghz, "pop_error": None, "p_leak_rel": None, "error": ""}
    try:
        row["p_leak_rel"] = blockade.leak_probability(model_obj, ghz_to_angular(b0_ghz))
        derived = with_b0(cfg.setting, b0_ghz)
        spec = cfg.make_spec(cfg.tau_t_values[0] if cfg.tau_t_values else 30.0, kind)
        row["pop_error"] = population_error(spec, derived, cfg.model,
                                            rtol=cfg.rtol, atol=cfg.atol)
    except RydgateError as exc:
        row["error"] = str(exc)
    return row


def cmd_sweep_blockade(cfg: RunConfig, args) -> int:
    """Population error versus blockade shift, with the analytic overlay."""
    b_values = _parse_values(args.b0_range, "--b0-range")
    if not b_values:
        raise ConfigError("--b0-range produced an empty grid")
    if any(b <= 0.0 for b in b_values):
        raise ConfigError("blockade shifts must be positive")
    kind = cfg.pulse_kinds[0]
    model_obj = blockade.leak_model(cfg.setting)
    points = [(cfg, b, kind, model_obj) for b in b_values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_blockade_point, points))
    else:
        rows = [_sweep_blockade_point(p) for p in points]

    header = ("b0_GHz", "pop_error", "p_leak_rel", "error")
    out_csv = os.path.join(cfg.out_dir, "sweep_blockade.csv")
    _write_csv(out_csv, header, [[r[c] for c in header] for r in rows])
    if cfg.plot:
        plotting.save_sweep_blockade_figure(
            os.path.join(cfg.out_dir, "sweep_blockade.png"), rows)
    print(f"wrote {out_csv} ({len(rows)} rows)")
    return 0


def cmd_optimal_blockade(cfg: RunConfig, args) -> int:
    """Analytic optimal blockade shift, flatness window, and scan export."""
    model_obj = blockade.leak_model(cfg.setting)
    bracket = None
    if args.bracket:
        lo_hi = _parse_values(args.bracket, "--bracket")
        if len(lo_hi) != 2:
            raise ConfigError("--bracket needs exactly lo,hi in GHz")
        bracket = (ghz_to_angular(lo_hi[0]), ghz_to_angular(lo_hi[1]))
    b_star = blockade.optimal_blockade(model_obj, bracket=bracket)
    flat_lo, flat_hi = blockade.flatness_window(model_obj, b_star, bracket=bracket)
    print(f"optimal blockade b0/2pi = {angular_to_ghz(b_star):.6g} GHz")
    print(f"relative leakage at optimum = {blockade.leak_probability(model_obj, b_star):.6g}")
    print(f"flat window (P <= 1.1 P*): [{angular_to_ghz(flat_lo):.6g}, "
          f"{angular_to_ghz(flat_hi):.6g}] GHz")

    upper = min(model_obj.delta1, model_obj.delta2)
    lo, hi = bracket if bracket else (0.02 * upper, 0.98 * upper)
    grid = np.linspace(lo, hi, 400)
    p = [blockade.leak_probability(model_obj, b) for b in grid]
    out_csv = os.path.join(cfg.out_dir, "blockade_scan.csv")
    _write_csv(out_csv, ("b0_GHz", "p_leak_rel"),
               [[angular_to_ghz(b), v] for b, v in zip(grid, p)])
    if cfg.plot:
        plotting.save_blockade_scan_figure(
            os.path.join(cfg.out_dir, "blockade_scan.png"),
            [angular_to_ghz(b) for b in grid], p, angular_to_ghz(b_star))
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    """Run one sequence and report all gate metrics (optionally a trajectory)."""
    tau_t = _single_tau(cfg)
    kind = cfg.pulse_kinds[0]
    spec = cfg.make_spec(tau_t, kind,
                         lambda_target=ghz_to_angular(args.lambda_ghz),
                         amp_scale_target=args.amp_scale_target,
                         amp_scale_control=args.amp_scale_control)
    metrics = gate_metrics(spec, cfg.setting, cfg.model, rtol=cfg.rtol, atol=cfg.atol)
    print(f"t_g = {spec.t_g:.6g} ns ({kind}, model={cfg.model})")
    print("phases (rad):", " ".join(f"{p:+.6f}" for p in metrics.phases))
    print(f"entangling phase = {metrics.entangling_phase:+.6f} rad")
    print(f"population error = {metrics.population_error:.6e}")
    print(f"Bell infidelity  = {1.0 - metrics.bell_fidelity:.6e}")
    print(f"trace distance   = {metrics.trace_distance:.6e}")

    row = {
        "t_g_ns": spec.t_g, "tau_t_ns": tau_t, "tau_c_ns": spec.tau_c,
        "pulse_kind": kind, "lambda_GHz": args.lambda_ghz,
        "amp_scale": args.amp_scale_target,
        "pop_error": metrics.population_error,
        "bell_infidelity": 1.0 - metrics.bell_fidelity,
        "trace_distance": metrics.trace_distance,
        "phi_ent_rad": metrics.entangling_phase,
        "amp_scale_control": args.amp_scale_control, "error": "",
    }
    _write_csv(os.path.join(cfg.out_dir, "metrics.csv"), METRIC_COLUMNS,
               [[row[c] for c in METRIC_COLUMNS]])

    if args.trajectory:
        from .atom import LEVELS
        from .gate import run_sequence

        initial = dynamics.basis_state(
            "q0" if args.initial[0] == "0" else "q1",
            "q0" if args.initial[1] == "0" else "q1")
        if cfg.model == "lindblad":
            initial = initial.as_density()
        final, times, samples = run_sequence(
            spec, cfg.setting, initial, model=cfg.model,
            rtol=cfg.rtol, atol=cfg.atol, sample_stride=args.stride)
        kind_tag = "density" if cfg.model == "lindblad" else "ket"
        traj_csv = os.path.join(cfg.out_dir, "trajectory.csv")
        dynamics.export_trajectory(traj_csv, times, samples, kind_tag)
        if cfg.plot:
            pc, pt = [], []
            for sample in samples:
                state = dynamics.QuantumState(np.asarray(sample), kind_tag)
                c, t = dynamics.reduced_populations(state)
                pc.append(c)
                pt.append(t)
            plotting.save_trajectory_figure(
                os.path.join(cfg.out_dir, "trajectory.png"), times, pc, pt, LEVELS)
        print(f"wrote {traj_csv}")
    return 0


def cmd_optimize(cfg: RunConfig, args) -> int:
    """Optimize (detuning, amplitude trims) on the unitary Bell infidelity."""
    tau_t = _single_tau(cfg)
    kind = cfg.pulse_kinds[0]
    spec = cfg.make_spec(tau_t, kind)
    result = optimize_gate(spec, cfg.setting, rtol=cfg.rtol, atol=cfg.atol)
    if not result.improved:
        print("optimization made no progress; keeping the input parameters")
    best = result.spec
    print(f"tau_t = {tau_t:.6g} ns, kind = {kind}")
    print(f"Lambda/2pi = {angular_to_ghz(best.lambda_target) * 1e3:.6g} MHz")
    print(f"amp_scale_target = {best.amp_scale_target:.8g}")
    print(f"amp_scale_control = {best.amp_scale_control:.8g}")
    print(f"unitary Bell infidelity = {result.infidelity:.6e}")

    _write_csv(os.path.join(cfg.out_dir, "optimize_trace.csv"),
               ("round", "parameter", "value", "infidelity"), result.trace)
    cache_path = os.path.join(cfg.out_dir, "opt_cache.json")
    cache = _load_cache(cache_path)
    cache[_cache_key(cfg.setting, tau_t, kind, cfg.tau_c_for(tau_t))] = {
        "lambda_target": best.lambda_target,
        "amp_scale_target": best.amp_scale_target,
        "amp_scale_control": best.amp_scale_control,
    }
    _save_cache(cache_path, cache)
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--setting", default="S1", help="builtin setting name (S1 or S2)")
    common.add_argument("--setting-file", default=None,
                        help="setting-override file (takes precedence over --setting)")
    common.add_argument("--pulse", default="drag",
                        help="pulse kind, or comma list for sweeps (square,gaussian,drag)")
    common.add_argument("--model", default="unitary", help="unitary or lindblad")
    common.add_argument("--tau-t", default=None,
                        help="target 2pi-pulse duration(s) in ns: '30', '20,30', or 'lo:hi:step'")
    common.add_argument("--tau-c-ratio", default="0.5",
                        help="control pulse duration as a fraction of tau_t (e.g. 0.5 or 1/3)")
    common.add_argument("--tau-c", default=None, help="explicit control duration in ns")
    common.add_argument("--out", default=None,
                        help=f"output directory (default: ${OUT_ENV_VAR} or '.')")
    common.add_argument("--tol", default=1e-10, type=float,
                        help="integrator relative tolerance (absolute = 0.01x)")
    common.add_argument("--workers", default=1, type=int,
                        help="parallel workers for sweep points (affects wall time only)")
    common.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    parser = argparse.ArgumentParser(
        prog="rydgate",
        description="Shaped-pulse design and simulation of Rydberg-blockade entangling gates.",
        epilog=f"The {OUT_ENV_VAR} environment variable sets the default output directory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", parents=[common],
                       help="sample waveforms and spectra of one pulse sequence")
    p.add_argument("--samples", type=int, default=1001, help="waveform samples per segment")
    p.add_argument("--delta-points", type=int, default=501, help="spectrum grid points")
    p.add_argument("--delta-max-ghz", type=float, default=None,
                   help="spectrum grid half-width in GHz")
    p.add_argument("--lambda-ghz", type=float, default=0.0,
                   help="target-pulse detuning in GHz")
    p.set_defaults(handler=cmd_design)

    p = sub.add_parser("simulate", parents=[common],
                       help="run one sequence and print/export its metrics")
    p.add_argument("--lambda-ghz", type=float, default=0.0)
    p.add_argument("--amp-scale-target", type=float, default=1.0)
    p.add_argument("--amp-scale-control", type=float, default=1.0)
    p.add_argument("--trajectory", action="store_true",
                   help="also export level populations over time")
    p.add_argument("--initial", default="11", choices=("00", "01", "10", "11"),
                   help="computational input for the trajectory")
    p.add_argument("--stride", type=float, default=0.25, help="trajectory sample stride (ns)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sweep-time", parents=[common],
                       help="metrics versus gate time for each pulse kind")
    p.add_argument("--optimize", action="store_true",
                   help="optimize (detuning, trims) per point, with caching")
    p.add_argument("--metrics", default="all", choices=("all", "pop"),
                   help="compute everything or population error only")
    p.set_defaults(handler=cmd_sweep_time)

    p = sub.add_parser("sweep-blockade", parents=[common],
                       help="population error versus blockade shift (fixed tau_t)")
    p.add_argument("--b0-range", default="0.3:1.55:0.05",
                   help="blockade grid in GHz as lo:hi:step")
    p.set_defaults(handler=cmd_sweep_blockade)

    p = sub.add_parser("optimal-blockade", parents=[common],
                       help="analytic optimal blockade shift and scan export")
    p.add_argument("--bracket", default=None, help="search bracket lo,hi in GHz")
    p.set_defaults(handler=cmd_optimal_blockade)

    p = sub.add_parser("optimize", parents=[common],
                       help="optimize detuning and amplitude trims at one tau_t")
    p.set_defaults(handler=cmd_optimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _make_config(args)
        return args.handler(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RydgateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
