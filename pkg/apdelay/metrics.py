# apdelay/metrics.py
from __future__ import annotations

from prometheus_client import REGISTRY, Counter, Histogram, generate_latest, write_to_textfile

COMMANDS = ("roots", "sigma-i", "check", "solve", "decompose", "certify", "simulate", "spectrum")
SOLVE_OUTCOMES = ("ok", "resonance")


def _command_label(command: str) -> str:
    name = (command or "").strip().lower()
    return name if name in COMMANDS else "unknown"


apdelay_commands_total = Counter(
    "apdelay_commands_total",
    "CLI commands run, by command and exit code.",
    ("command", "exit_code"),
)

apdelay_command_duration_seconds = Histogram(
    "apdelay_command_duration_seconds",
    "Wall time per CLI command in seconds.",
    ("command",),
)

apdelay_contour_evaluations_total = Counter(
    "apdelay_contour_evaluations_total",
    "Characteristic log-derivative evaluations spent on contour integrals.",
)

apdelay_root_search_retries_total = Counter(
    "apdelay_root_search_retries_total",
    "Region jitters and re-chosen splits after a boundary root.",
)

apdelay_roots_found_total = Counter(
    "apdelay_roots_found_total",
    "Characteristic roots returned by find_roots (counted with multiplicity).",
)

apdelay_harmonic_solves_total = Counter(
    "apdelay_harmonic_solves_total",
    "Harmonic-balance solves by outcome.",
    ("outcome",),
)

apdelay_riesz_nodes = Histogram(
    "apdelay_riesz_nodes",
    "Quadrature nodes used by accepted Riesz projections.",
    buckets=(256, 512, 1024, 2048, 4096, 8192),
)

apdelay_integration_steps_total = Counter(
    "apdelay_integration_steps_total",
    "RK4 steps taken by the method-of-steps integrator.",
)

def observe_command(command: str, exit_code: int, duration_seconds: float) -> None:
    cmd = _command_label(command)
    apdelay_commands_total.labels(command=cmd, exit_code=str(int(exit_code))).inc()
    apdelay_command_duration_seconds.labels(command=cmd).observe(max(0.0, float(duration_seconds)))


def inc_contour_evaluations(count: int) -> None:
    apdelay_contour_evaluations_total.inc(max(0, int(count)))


def inc_root_search_retry() -> None:
    apdelay_root_search_retries_total.inc()


def inc_roots_found(count: int) -> None:
    apdelay_roots_found_total.inc(max(0, int(count)))


def inc_harmonic_solve(outcome: str) -> None:
    out = outcome if outcome in SOLVE_OUTCOMES else "ok"
    apdelay_harmonic_solves_total.labels(outcome=out).inc()


def observe_riesz_nodes(nodes: int) -> None:
    apdelay_riesz_nodes.observe(max(0, int(nodes)))


def inc_integration_steps(count: int) -> None:
    apdelay_integration_steps_total.inc(max(0, int(count)))


def render_metrics() -> bytes:
    return generate_latest()


def write_metrics(path: str) -> None:
    write_to_textfile(path, REGISTRY)


for _cmd in COMMANDS:
    apdelay_command_duration_seconds.labels(command=_cmd)
for _outcome in SOLVE_OUTCOMES:
    apdelay_harmonic_solves_total.labels(outcome=_outcome)
