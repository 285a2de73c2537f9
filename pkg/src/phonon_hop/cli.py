"""Command-line entry point: derive, simulate, fit, sweep, verify.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 fit
non-convergence. All output is deterministic for a fixed configuration
and seed; the ``PHONON_HOP_THREADS`` environment variable caps the sweep
worker pool without changing the output.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .constants import TWO_PI
from .fileio import (
    TraceFormatError,
    json_text,
    read_trace_csv,
    records_csv_text,
    trace_csv_text,
    write_text,
)
from .kerr_model import coherence_metrics, kerr_chi, thermal_distribution, hopping_signal
from .signal_analysis import TimeSeries, fit_damped_sine, metrics_from_fit
from .trap_physics import (
    DistanceConvention,
    TrapConfig,
    axial_freq_to_distance,
    doppler_temperature,
    mean_stretch_occupation,
    mode_spectrum,
    modified_lamb_dicke,
    rms_velocity,
)
from .verification import run_all_checks

DERIVE_COLUMNS = (
    "omega_y_hz", "omega_z_hz",
    "d0_exact_m", "d0_length_scale_m", "d0_james_m",
    "f_com_z_hz", "f_stretch_hz", "f_com_y_hz", "f_rock_hz",
    "kappa_hz", "chi_hz", "mean_n",
    "doppler_limit_k", "axial_temperature_k", "eta_sqrt_n",
)

SWEEP_COLUMNS = (
    "omega_y_hz", "omega_z_hz", "d0_exact_m", "d0_length_scale_m",
    "kappa_hz", "chi_hz", "mean_n",
    "decay_time_model_s", "n_osc_model", "decay_time_fit_s", "n_osc_fit",
)


def _config_dict(run: RunConfig) -> dict:
    payload = asdict(run)
    payload["distance_convention"] = run.distance_convention.value
    payload["sweep_omega_y_hz"] = list(run.sweep_omega_y_hz)
    payload["sweep_omega_z_hz"] = list(run.sweep_omega_z_hz)
    return payload


def _model_parameters(trap: TrapConfig, tail_tol: float):
    """(spectrum, chi, mean_n, distribution) for one trap setting."""
    spectrum = mode_spectrum(trap)
    chi = kerr_chi(spectrum, trap.omega_z, trap.mass).chi
    mean_n = mean_stretch_occupation(
        rms_velocity(trap.axial_temperature, trap.mass),
        spectrum.omega_stretch,
        trap.mass,
    )
    return spectrum, chi, mean_n, thermal_distribution(mean_n, tail_tol)


def _trap_for_point(run: RunConfig, fy: float, fz: float) -> TrapConfig:
    return TrapConfig(
        mass=run.trap_config().mass,
        omega_y=TWO_PI * fy,
        omega_z=TWO_PI * fz,
        axial_temperature=run.axial_temperature_k,
    )


def _derive_record(run: RunConfig, fy: float, fz: float) -> dict:
    trap = _trap_for_point(run, fy, fz)
    spectrum, chi, mean_n, _ = _model_parameters(trap, run.tail_tol)
    wavenumber = TWO_PI / (run.lamb_dicke_wavelength_nm * 1e-9)
    axial_mean_n = mean_stretch_occupation(
        rms_velocity(trap.axial_temperature, trap.mass), trap.omega_z, trap.mass
    )
    return {
        "omega_y_hz": fy,
        "omega_z_hz": fz,
        "d0_exact_m": axial_freq_to_distance(trap.omega_z, trap.mass, DistanceConvention.EXACT),
        "d0_length_scale_m": axial_freq_to_distance(
            trap.omega_z, trap.mass, DistanceConvention.LENGTH_SCALE
        ),
        "d0_james_m": axial_freq_to_distance(trap.omega_z, trap.mass, DistanceConvention.JAMES_FIT),
        "f_com_z_hz": spectrum.omega_com_z / TWO_PI,
        "f_stretch_hz": spectrum.omega_stretch / TWO_PI,
        "f_com_y_hz": spectrum.omega_com_y / TWO_PI,
        "f_rock_hz": spectrum.omega_rock / TWO_PI,
        "kappa_hz": spectrum.kappa / TWO_PI,
        "chi_hz": chi / TWO_PI,
        "mean_n": mean_n,
        "doppler_limit_k": doppler_temperature(TWO_PI * 20.4e6),
        "axial_temperature_k": trap.axial_temperature,
        "eta_sqrt_n": modified_lamb_dicke(
            wavenumber, run.lamb_dicke_cosine, trap.omega_z, trap.mass, axial_mean_n
        ),
    }


def _fit_window(decay_time: float, hopping_hz: float,
                t_max_override: float, points_override: int) -> tuple[float, int]:
    if t_max_override > 0:
        t_max = t_max_override
    elif math.isfinite(decay_time):
        t_max = 2.0 * decay_time
    else:
        t_max = 50.0 / hopping_hz
    if points_override > 0:
        points = points_override
    else:
        points = int(min(max(math.ceil(12.0 * t_max * hopping_hz), 512), 30_000))
    return t_max, points


def _sweep_record(run: RunConfig, fy: float, fz: float,
                  t_max_override: float, points_override: int) -> dict:
    trap = _trap_for_point(run, fy, fz)
    spectrum, chi, mean_n, dist = _model_parameters(trap, run.tail_tol)
    metrics = coherence_metrics(spectrum.kappa, chi, mean_n)
    record = {
        "omega_y_hz": fy,
        "omega_z_hz": fz,
        "d0_exact_m": axial_freq_to_distance(trap.omega_z, trap.mass, DistanceConvention.EXACT),
        "d0_length_scale_m": axial_freq_to_distance(
            trap.omega_z, trap.mass, DistanceConvention.LENGTH_SCALE
        ),
        "kappa_hz": spectrum.kappa / TWO_PI,
        "chi_hz": chi / TWO_PI,
        "mean_n": mean_n,
        "decay_time_model_s": metrics.decay_time,
        "n_osc_model": metrics.num_oscillations,
        "decay_time_fit_s": math.nan,
        "n_osc_fit": math.nan,
    }
    if run.sweep_with_fit:
        hopping_hz = metrics.hopping_frequency / TWO_PI
        t_max, points = _fit_window(
            metrics.decay_time, hopping_hz, t_max_override, points_override
        )
        times = np.linspace(0.0, t_max, points)
        trace = hopping_signal(spectrum.kappa, chi, dist, times)
        fit = fit_damped_sine(
            TimeSeries(times=trace.times, values=trace.values),
            max_iter=run.fit_max_iter,
            tol=run.fit_tol,
        )
        if fit.converged:
            fit_metrics = metrics_from_fit(fit)
            record["decay_time_fit_s"] = fit_metrics.decay_time
            record["n_osc_fit"] = fit_metrics.num_oscillations
    return record


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get("PHONON_HOP_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PHONON_HOP_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigError(f"PHONON_HOP_THREADS must be >= 1, got {cap}")
    return max(1, min(cap, n_tasks))


def _emit(text: str, out_path: str) -> None:
    if out_path == "-":
        sys.stdout.write(text)
    else:
        write_text(out_path, text)


def _resolve_out(args: argparse.Namespace, run: RunConfig | None) -> str:
    if args.out is not None:
        return args.out
    if run is not None:
        return run.output_path
    return "-"


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    run = load_config(args.config)
    if getattr(args, "dump_config", None):
        write_text(args.dump_config, run.to_text())
    return run


def cmd_derive(args: argparse.Namespace) -> int:
    run = _load_run_config(args)
    pairs = list(zip(run.sweep_omega_y_hz, run.sweep_omega_z_hz))
    records = [_derive_record(run, fy, fz) for fy, fz in pairs]
    if run.output_format == "json":
        text = json_text({"config": _config_dict(run), "records": records})
    else:
        text = records_csv_text(
            DERIVE_COLUMNS, [[r[c] for c in DERIVE_COLUMNS] for r in records]
        )
    _emit(text, _resolve_out(args, run))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    run = _load_run_config(args)
    if not args.t_max > 0:
        raise ConfigError(f"--t-max must be positive, got {args.t_max}")
    if args.points < 2:
        raise ConfigError(f"--points must be >= 2, got {args.points}")
    trap = run.trap_config()
    spectrum, chi, mean_n, dist = _model_parameters(trap, run.tail_tol)
    if args.chi_zero:
        chi = 0.0
    times = np.linspace(0.0, args.t_max, args.points)
    trace = hopping_signal(spectrum.kappa, chi, dist, times)
    values = trace.values
    seed = args.seed if args.seed is not None else run.seed
    if run.shots > 0:
        rng = np.random.default_rng(seed)
        values = rng.binomial(run.shots, values) / run.shots
    elif run.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, run.noise_sigma, size=values.size)
    if run.output_format == "json":
        text = json_text({
            "config": _config_dict(run),
            "trace": {"time_s": times, "p_excited": values},
        })
    else:
        text = trace_csv_text(times, values)
    _emit(text, _resolve_out(args, run))
    return 0


def _fit_report(run: RunConfig | None, input_path: str, data) -> tuple[dict, bool]:
    max_iter = run.fit_max_iter if run is not None else 200
    tol = run.fit_tol if run is not None else 1e-10
    fit = fit_damped_sine(data, max_iter=max_iter, tol=tol)
    report = {
        "config": {
            "input": input_path,
            "max_iter": max_iter,
            "tol": tol,
            "weighted": data.sigma is not None,
        },
        "fit": {
            "a": fit.a, "b": fit.b, "c": fit.c, "d": fit.d, "f": fit.f,
            "covariance": [float(v) for v in fit.covariance.ravel()],
            "residual_rms": fit.residual_rms,
            "iterations": fit.iterations,
            "degenerate": fit.degenerate,
        },
        "metrics": None,
        "converged": fit.converged,
    }
    if fit.converged:
        metrics = metrics_from_fit(fit)
        report["metrics"] = {
            "decay_time_s": metrics.decay_time,
            "decay_time_err_s": metrics.decay_time_err,
            "hopping_frequency_hz": metrics.hopping_frequency_hz,
            "hopping_frequency_err_hz": metrics.hopping_frequency_hz_err,
            "num_oscillations": metrics.num_oscillations,
            "num_oscillations_err": metrics.num_oscillations_err,
        }
    return report, fit.converged


def cmd_fit(args: argparse.Namespace) -> int:
    run = load_config(args.config) if args.config else None
    data = read_trace_csv(args.input)
    report, converged = _fit_report(run, args.input, data)
    _emit(json_text(report), _resolve_out(args, run))
    return 0 if converged else 3


def _sort_records(records: list[dict]) -> list[dict]:
    wy = {r["omega_y_hz"] for r in records}
    wz = {r["omega_z_hz"] for r in records}
    if len(wy) <= 1 and len(wz) > 1:
        # distance sweep: ascending d0, i.e. descending omega_z
        return sorted(records, key=lambda r: -r["omega_z_hz"])
    if len(wz) <= 1 and len(wy) > 1:
        return sorted(records, key=lambda r: r["omega_y_hz"])
    return sorted(records, key=lambda r: (r["omega_y_hz"], r["omega_z_hz"]))


def _strictly(values: list[float], direction: int) -> bool:
    return all(direction * (b - a) > 0 for a, b in zip(values, values[1:]))


def _trend_report(records: list[dict]) -> dict[str, bool]:
    wy = {r["omega_y_hz"] for r in records}
    wz = {r["omega_z_hz"] for r in records}
    trends: dict[str, bool] = {}
    if len(records) >= 2 and len(wy) <= 1 and len(wz) > 1:
        decay = [r["decay_time_model_s"] for r in records]
        n_osc = [r["n_osc_model"] for r in records]
        trends["decay_time_model increasing with d0"] = _strictly(decay, +1)
        trends["n_osc_model decreasing with d0"] = _strictly(n_osc, -1)
    if len(records) >= 2 and len(wz) <= 1 and len(wy) > 1:
        decay = [r["decay_time_model_s"] for r in records]
        n_osc = [r["n_osc_model"] for r in records]
        trends["decay_time_model increasing with omega_y"] = _strictly(decay, +1)
        trends["n_osc_model increasing with omega_y"] = _strictly(n_osc, +1)
    return trends


def cmd_sweep(args: argparse.Namespace) -> int:
    run = _load_run_config(args)
    pairs = list(zip(run.sweep_omega_y_hz, run.sweep_omega_z_hz))
    t_max_override = args.t_max if args.t_max is not None else run.sweep_t_max_s
    points_override = args.points if args.points is not None else run.sweep_points

    def evaluate(pair: tuple[float, float]) -> dict:
        return _sweep_record(run, pair[0], pair[1], t_max_override, points_override)

    workers = _worker_count(len(pairs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(evaluate, pairs))
    else:
        records = [evaluate(pair) for pair in pairs]
    records = _sort_records(records)
    trends = _trend_report(records)
    if run.output_format == "json":
        text = json_text({"config": _config_dict(run), "records": records, "trends": trends})
    else:
        footer = [f"trend {name}: {str(ok).lower()}" for name, ok in trends.items()]
        text = records_csv_text(
            SWEEP_COLUMNS, [[r[c] for c in SWEEP_COLUMNS] for r in records], footer
        )
    _emit(text, _resolve_out(args, run))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_all_checks()
    lines = [result.line() for result in results]
    passed = all(result.passed for result in results)
    lines.append(f"{'OK' if passed else 'FAILED'}: {sum(r.passed for r in results)}"
                 f"/{len(results)} checks passed")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out is not None and args.out != "-":
        write_text(args.out, text)
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonon-hop",
        description="Two-ion radial phonon hopping: derived quantities, "
                    "decoherence simulation, damped-sine fitting and sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, config_required: bool) -> None:
        p.add_argument("--config", required=config_required, help="configuration file")
        p.add_argument("--out", default=None, help="output path ('-' for stdout)")

    p_derive = sub.add_parser("derive", help="export all trap-derived quantities")
    add_common(p_derive, True)
    p_derive.add_argument("--dump-config", default=None, help="write the effective config here")
    p_derive.set_defaults(func=cmd_derive)

    p_sim = sub.add_parser("simulate", help="generate a hopping trace")
    add_common(p_sim, True)
    p_sim.add_argument("--dump-config", default=None, help="write the effective config here")
    p_sim.add_argument("--seed", type=int, default=None, help="override the synth seed")
    p_sim.add_argument("--t-max", type=float, default=5e-3, help="trace duration in s")
    p_sim.add_argument("--points", type=int, default=2000, help="number of grid points")
    p_sim.add_argument("--chi-zero", action="store_true",
                       help="disable the Kerr coupling (pure sin^2 hopping)")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a damped sinusoid to a trace CSV")
    add_common(p_fit, False)
    p_fit.add_argument("--input", required=True, help="trace CSV (time_s,p_excited[,sigma])")
    p_fit.set_defaults(func=cmd_fit)

    p_sweep = sub.add_parser("sweep", help="evaluate coherence metrics over trap settings")
    add_common(p_sweep, True)
    p_sweep.add_argument("--dump-config", default=None, help="write the effective config here")
    p_sweep.add_argument("--t-max", type=float, default=None,
                         help="fit-pipeline trace duration override in s")
    p_sweep.add_argument("--points", type=int, default=None,
                         help="fit-pipeline grid size override")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the oracle cross-checks")
    p_verify.add_argument("--out", default=None, help="also write the report here")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
