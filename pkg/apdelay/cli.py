# apdelay/cli.py
from __future__ import annotations

import sys
import time
from typing import Any, Callable, Dict, List, Optional

import click
import numpy as np

from . import config as CFG
from . import metrics as METRICS
from .apfun import SampledSignal, beurling_estimate, bohr_coefficient_numeric, qp_order
from .chroots import Region, find_roots, rootset_csv, scan_axis
from .codec import emit, frequency_from_coords, parse_problem, poly_to_dict, read_signal_csv, write_csv
from .config import AnalysisOptions
from .errors import (
    EXIT_CHECK_FAILED,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    ApdelayError,
    IoError,
    ParseError,
    Resonance,
    ValidationError,
    exit_code_for,
)
from .massera import (
    ForcedProblem,
    check_conditions,
    decompose_solution,
    harmonic_solve,
    nonexistence_certificate,
    verify_spectral_inclusion,
)
from .simulate import History, compare, integrate, trajectory_csv


def _log(msg: str) -> None:
    if CFG.verbose():
        print(f"[cli] {msg}", file=sys.stderr, flush=True)


class RunResult:
    """Structured report, exit code and an optional CSV table."""

    def __init__(self, report: Dict[str, Any], exit_code: int, table: Optional[List[List[Any]]] = None) -> None:
        self.report = report
        self.exit_code = int(exit_code)
        self.table = table

    def __iter__(self):
        yield self.report
        yield self.exit_code


def _freq_dict(fr) -> Dict[str, Any]:
    return {"coords": fr.to_strings(), "value": fr.value}


def _default_region(p: ForcedProblem, opts: AnalysisOptions) -> Region:
    if opts.region is not None:
        if len(opts.region) != 4:
            raise ValidationError("region needs [re_min, re_max, im_min, im_max]", field="options.region")
        return Region(*opts.region)
    reach = 0.9 * p.sys.delta
    return Region(-reach, reach, -opts.xi_max, opts.xi_max)


def _cmd_roots(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    roots = find_roots(p.sys, _default_region(p, opts))
    return RunResult({"ok": True, "roots": roots.to_dict()}, EXIT_OK, rootset_csv(roots))


def _cmd_sigma_i(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    scan = scan_axis(p.sys, opts.xi_max, opts.axis_tol)
    table: List[List[Any]] = [["xi"]] + [[x] for x in scan.points]
    report = {
        "ok": True,
        "window": [-scan.window, scan.window],
        "axis_tol": scan.axis_tol,
        "sigma_i": list(scan.points),
        "warnings": scan.warnings,
    }
    return RunResult(report, EXIT_OK, table)


def _cmd_check(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    report = check_conditions(p, opts.xi_max, opts.axis_tol)
    return RunResult({"ok": report.ok, "conditions": report.to_dict()}, EXIT_OK if report.ok else EXIT_CHECK_FAILED)


def _solution_report(bundle) -> Dict[str, Any]:
    return {
        "u": poly_to_dict(bundle.u),
        "classical_residual": bundle.classical_residual,
        "mild_residual": bundle.mild_residual,
        "spectral_check": bundle.spectral_check,
        "conditioning": [
            dict(_freq_dict(fr), condition=cond)
            for fr, cond in sorted(bundle.per_frequency_conditioning.items(), key=lambda kv: kv[0].sort_key())
        ],
        "qp_order": qp_order(bundle.u),
    }


def _cmd_solve(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    bundle = harmonic_solve(p, opts.grid)
    report = {"ok": True, "solution": _solution_report(bundle)}
    if all(abs(fr.value) <= opts.xi_max for fr in bundle.u.frequencies):
        report["inclusion"] = verify_spectral_inclusion(bundle.u, p, opts.xi_max, opts.axis_tol).to_dict()
    return RunResult(report, EXIT_OK)


def _cmd_decompose(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    bundle = harmonic_solve(p, opts.grid)
    lambda1 = [frequency_from_coords(p.basis, c, f"options.lambda1[{i}]") for i, c in enumerate(opts.lambda1)]
    u1, u2 = decompose_solution(bundle.u, lambda1)
    report = {
        "ok": True,
        "lambda1": [_freq_dict(fr) for fr in lambda1],
        "u1": poly_to_dict(u1),
        "u2": poly_to_dict(u2),
    }
    return RunResult(report, EXIT_OK)


def _cmd_certify(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    if opts.k is None and opts.tau is None:
        raise ValidationError("certify needs --k or --tau", field="options")
    certificates = []
    if opts.k is not None:
        certificates.append(nonexistence_certificate(p, k=opts.k))
    if opts.tau is not None:
        certificates.append(nonexistence_certificate(p, tau=opts.tau))
    issued = any(c.issued for c in certificates)
    report = {"ok": issued, "certificates": [c.to_dict() for c in certificates]}
    return RunResult(report, EXIT_OK if issued else EXIT_CHECK_FAILED)


def _cmd_simulate(p: ForcedProblem, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    bundle = harmonic_solve(p, opts.grid)
    history = History.for_system(p.sys, bundle.u)
    traj = integrate(p.sys, p.f, history, opts.T, opts.dt)
    report = {
        "ok": True,
        "T": opts.T,
        "dt": opts.dt,
        "steps": len(traj) - 1,
        "deviation": compare(traj, bundle.u),
    }
    return RunResult(report, EXIT_OK, trajectory_csv(traj))


def _grid(extra: Dict[str, Any]) -> np.ndarray:
    lo = float(extra.get("grid_min", 0.0))
    hi = float(extra.get("grid_max", 5.0))
    step = float(extra.get("grid_step", 0.05))
    if not (step > 0) or hi < lo:
        raise ValidationError("grid needs grid_step > 0 and grid_max >= grid_min")
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def _cmd_spectrum(g: SampledSignal, opts: AnalysisOptions, extra: Dict[str, Any]) -> RunResult:
    est = beurling_estimate(g, _grid(extra), float(extra.get("eps", 0.1)), float(extra.get("threshold", 1e-3)))
    report: Dict[str, Any] = {"ok": True, "spectrum": est.to_dict()}
    half = min(-float(g.t[0]), float(g.t[-1]))
    if half > 0:
        report["coefficients"] = [
            {
                "xi": xi,
                "re": [float(v) for v in np.real(c)],
                "im": [float(v) for v in np.imag(c)],
            }
            for xi, c in ((xi, bohr_coefficient_numeric(g, xi, half)) for xi in est.frequencies)
        ]
        report["T"] = half
    table: List[List[Any]] = [["xi", "amplitude"]] + [[x, a] for x, a in zip(est.frequencies, est.amplitudes)]
    return RunResult(report, EXIT_OK, table)


COMMANDS: Dict[str, Callable[..., RunResult]] = {
    "roots": _cmd_roots,
    "sigma-i": _cmd_sigma_i,
    "check": _cmd_check,
    "solve": _cmd_solve,
    "decompose": _cmd_decompose,
    "certify": _cmd_certify,
    "simulate": _cmd_simulate,
    "spectrum": _cmd_spectrum,
}


def error_report(exc: BaseException) -> Dict[str, Any]:
    out: Dict[str, Any] = {"ok": False, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, Resonance):
        out["frequency"] = exc.frequency
        out["condition"] = exc.condition
    if isinstance(exc, ParseError):
        out["line"] = exc.line
        out["column"] = exc.column
        out["field"] = exc.field
    return out


def run(command: str, problem: Any, options: Optional[AnalysisOptions] = None, **extra: Any) -> RunResult:
    """
    Dispatch one command. Never raises for errors of the toolkit: they become
    a report with `ok: false` and the matching exit code.
    """
    handler = COMMANDS.get(command)
    if handler is None:
        return RunResult({"ok": False, "error": "UsageError", "message": f"unknown command {command!r}"}, EXIT_USAGE)
    opts = options or AnalysisOptions()
    try:
        result = handler(problem, opts, extra)
    except ApdelayError as exc:
        _log(f"{command}: {type(exc).__name__}: {exc}")
        result = RunResult(error_report(exc), exit_code_for(exc))
    except np.linalg.LinAlgError as exc:
        result = RunResult({"ok": False, "error": "LinAlgError", "message": str(exc)}, EXIT_NUMERICAL)
    result.report = dict(result.report, schema_version=CFG.SCHEMA_VERSION, command=command)
    return result


def export(result: RunResult, path: str, fmt: str = "json") -> None:
    """Write the report (json) or the command's table (csv) to path."""
    if fmt not in ("json", "csv"):
        raise ValidationError(f"unknown format {fmt!r}", field="format")
    if fmt == "csv":
        payload = write_csv(result.table if result.table is not None else [])
    else:
        payload = emit(result.report)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def _emit_result(result: RunResult, out: Optional[str], fmt: str) -> RunResult:
    if out:
        try:
            export(result, out, fmt)
        except ApdelayError as exc:
            _log(f"export failed: {exc}")
            report = dict(error_report(exc), schema_version=CFG.SCHEMA_VERSION, command=result.report.get("command"))
            result = RunResult(report, exit_code_for(exc))
    click.echo(emit(result.report), nl=False)
    return result


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from None


def _finish(ctx: click.Context, command: str, code: int, started: float) -> None:
    METRICS.observe_command(command, code, time.monotonic() - started)
    path = (ctx.obj or {}).get("metrics_out")
    if path:
        METRICS.write_metrics(path)
    _log(f"{command} finished with exit code {code}")
    ctx.exit(code)


def _run_problem_command(ctx: click.Context, command: str, problem_file: str, overrides: Dict[str, Any], out, fmt) -> None:
    started = time.monotonic()
    _log(f"{command} {problem_file}")
    try:
        problem, file_opts = parse_problem(_read_text(problem_file))
        opts = file_opts.merged(overrides)
    except ApdelayError as exc:
        result = RunResult(dict(error_report(exc), schema_version=CFG.SCHEMA_VERSION, command=command), exit_code_for(exc))
    else:
        result = run(command, problem, opts)
    result = _emit_result(result, out, fmt)
    _finish(ctx, command, result.exit_code, started)


def _common(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)(fn)
    fn = click.option("--out", "out", type=click.Path(dir_okay=False), default=None, help="Artifact path.")(fn)
    fn = click.option("--dt", "dt", type=float, default=None)(fn)
    fn = click.option("--T", "T", type=float, default=None)(fn)
    fn = click.option("--axis-tol", "axis_tol", type=float, default=None)(fn)
    fn = click.option("--xi-max", "xi_max", type=float, default=None)(fn)
    fn = click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))(fn)
    return fn


def _coords(raw: Optional[str]) -> Optional[List[str]]:
    if raw is None:
        return None
    return [part.strip() for part in raw.split(",")]


@click.group()
@click.option("--verbose", is_flag=True, help="Log progress to stderr.")
@click.option("--metrics-out", type=click.Path(dir_okay=False), default=None, help="Write Prometheus metrics here.")
@click.pass_context
def main(ctx: click.Context, verbose: bool, metrics_out: Optional[str]) -> None:
    """Almost periodic solutions of linear delay equations."""
    CFG.set_verbose(verbose)
    ctx.ensure_object(dict)
    ctx.obj["metrics_out"] = metrics_out


def _overrides(xi_max, axis_tol, T, dt, **more) -> Dict[str, Any]:
    out = {"xi_max": xi_max, "axis_tol": axis_tol, "T": T, "dt": dt}
    out.update(more)
    return out


@main.command("roots")
@click.option("--region", nargs=4, type=float, default=None, help="re_min re_max im_min im_max")
@_common
@click.pass_context
def roots_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt, region):
    """Characteristic roots in a rectangle."""
    extra = {"region": list(region) if region else None}
    _run_problem_command(ctx, "roots", problem_file, _overrides(xi_max, axis_tol, T, dt, **extra), out, fmt)


@main.command("sigma-i")
@_common
@click.pass_context
def sigma_i_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt):
    """Imaginary-axis characteristic points within the window."""
    _run_problem_command(ctx, "sigma-i", problem_file, _overrides(xi_max, axis_tol, T, dt), out, fmt)


@main.command("check")
@_common
@click.pass_context
def check_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt):
    """Hypothesis report and direct solvability."""
    _run_problem_command(ctx, "check", problem_file, _overrides(xi_max, axis_tol, T, dt), out, fmt)


@main.command("solve")
@_common
@click.pass_context
def solve_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt):
    """Harmonic-balance solution with residuals."""
    _run_problem_command(ctx, "solve", problem_file, _overrides(xi_max, axis_tol, T, dt), out, fmt)


@main.command("decompose")
@click.option("--lambda1", "lambda1", multiple=True, help="Frequency coordinates, comma separated. Repeatable.")
@_common
@click.pass_context
def decompose_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt, lambda1):
    """Split the solution by a frequency set."""
    extra = {"lambda1": [_coords(x) for x in lambda1] or None}
    _run_problem_command(ctx, "decompose", problem_file, _overrides(xi_max, axis_tol, T, dt, **extra), out, fmt)


@main.command("certify")
@click.option("--k", "k", type=int, default=None)
@click.option("--tau", "tau", default=None, help="Period coordinates, comma separated.")
@_common
@click.pass_context
def certify_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt, k, tau):
    """Non-existence certificate for quasi-periodic or periodic solutions."""
    extra = {"k": k, "tau": _coords(tau)}
    _run_problem_command(ctx, "certify", problem_file, _overrides(xi_max, axis_tol, T, dt, **extra), out, fmt)


@main.command("simulate")
@_common
@click.pass_context
def simulate_cmd(ctx, problem_file, xi_max, axis_tol, T, dt, out, fmt):
    """Integrate from the constructed solution's history and compare."""
    _run_problem_command(ctx, "simulate", problem_file, _overrides(xi_max, axis_tol, T, dt), out, fmt)


@main.command("spectrum")
@click.argument("signal_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid-min", type=float, default=0.0, show_default=True)
@click.option("--grid-max", type=float, default=5.0, show_default=True)
@click.option("--grid-step", type=float, default=0.05, show_default=True)
@click.option("--eps", type=float, default=0.1, show_default=True)
@click.option("--threshold", type=float, default=1e-3, show_default=True)
@click.option("--out", "out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.pass_context
def spectrum_cmd(ctx, signal_file, grid_min, grid_max, grid_step, eps, threshold, out, fmt):
    """Beurling spectrum estimate of a sampled signal (CSV: t, re_1, im_1, ...)."""
    started = time.monotonic()
    try:
        signal = read_signal_csv(_read_text(signal_file))
    except ApdelayError as exc:
        result = RunResult(
            dict(error_report(exc), schema_version=CFG.SCHEMA_VERSION, command="spectrum"), exit_code_for(exc)
        )
    else:
        result = run(
            "spectrum",
            signal,
            AnalysisOptions(),
            grid_min=grid_min,
            grid_max=grid_max,
            grid_step=grid_step,
            eps=eps,
            threshold=threshold,
        )
    result = _emit_result(result, out, fmt)
    _finish(ctx, "spectrum", result.exit_code, started)
