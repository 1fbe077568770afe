# apdelay/config.py
from __future__ import annotations

import math
from typing import Any, Dict, List, Optional

from .errors import ValidationError

SCHEMA_VERSION = 1

PRUNE_RELATIVE = 1e-14
SINGULAR_CONDITION = 1e12

GL_NODES_START = 32
GL_NODES_MAX = 512
GL_PANEL_TOL = 1e-4
GL_MAX_DEPTH = 60
INTEGRALITY_TOL = 0.1

JITTER_FRACTION = 1e-4
JITTER_ATTEMPTS = 3
NEWTON_MAX_ITER = 100
RESIDUAL_SCALE = 1e-8

AXIS_TOL = 1e-6
MATCH_TOL = 1e-6
NEAR_MISS_FACTOR = 10.0
SEPARATION_TOL = 1e-9
PANEL_HEIGHT = 2.0

RIESZ_NODES = 256
RIESZ_MAX_NODES = 8192
RIESZ_IDEMPOTENCE_TOL = 1e-10
RIESZ_CONTOUR_GAP = 1e-8

AT_POLE_TOL = 1e-12
ARC_TOL = 1e-9
PI_MULTIPLE_DENOMINATOR = 64

DEFAULT_XI_MAX = 10.0
DEFAULT_GRID_POINTS = 201
DEFAULT_T = 20.0
DEFAULT_DT = 1e-3

_VERBOSE = False


def set_verbose(enabled: bool) -> None:
    global _VERBOSE
    _VERBOSE = bool(enabled)


def verbose() -> bool:
    return _VERBOSE


def _positive(raw: Any, default: float, name: str) -> float:
    if raw is None:
        return default
    try:
        val = float(raw) if not isinstance(raw, bool) else math.nan
    except (TypeError, ValueError):
        val = math.nan
    if not math.isfinite(val) or val <= 0:
        raise ValidationError(f"must be a positive number, got {raw!r}", field=f"options.{name}")
    return val


def _floats(raw: Any, name: str) -> Optional[List[float]]:
    if not raw:
        return None
    try:
        vals = [float(x) for x in raw]
    except (TypeError, ValueError):
        raise ValidationError(f"must be a list of numbers, got {raw!r}", field=f"options.{name}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError("entries must be finite", field=f"options.{name}")
    return vals


def _count(raw: Any) -> Optional[int]:
    if raw is None:
        return None
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 0:
        raise ValidationError(f"must be a non-negative integer, got {raw!r}", field="options.k")
    return raw


class AnalysisOptions:
    """
    Per-run knobs. Values come from the problem file's `options` block and are
    overridden by command-line flags. Absent values take the module defaults
    above; present but invalid ones raise ValidationError.
    """

    def __init__(
        self,
        xi_max: float = DEFAULT_XI_MAX,
        axis_tol: float = AXIS_TOL,
        grid: Optional[List[float]] = None,
        T: float = DEFAULT_T,
        dt: float = DEFAULT_DT,
        k: Optional[int] = None,
        tau: Optional[List[str]] = None,
        lambda1: Optional[List[List[str]]] = None,
        region: Optional[List[float]] = None,
    ) -> None:
        self.xi_max = _positive(xi_max, DEFAULT_XI_MAX, "xi_max")
        self.axis_tol = _positive(axis_tol, AXIS_TOL, "axis_tol")
        self.grid = _floats(grid, "grid")
        self.T = _positive(T, DEFAULT_T, "T")
        self.dt = _positive(dt, DEFAULT_DT, "dt")
        self.k = _count(k)
        self.tau = [str(x) for x in tau] if tau else None
        self.lambda1 = [[str(x) for x in coords] for coords in (lambda1 or [])]
        self.region = _floats(region, "region")

    @classmethod
    def from_dict(cls, raw: Optional[Dict[str, Any]]) -> "AnalysisOptions":
        raw = dict(raw or {})
        return cls(
            xi_max=raw.get("xi_max", DEFAULT_XI_MAX),
            axis_tol=raw.get("axis_tol", AXIS_TOL),
            grid=raw.get("grid"),
            T=raw.get("T", DEFAULT_T),
            dt=raw.get("dt", DEFAULT_DT),
            k=raw.get("k"),
            tau=raw.get("tau"),
            lambda1=raw.get("lambda1"),
            region=raw.get("region"),
        )

    def merged(self, overrides: Dict[str, Any]) -> "AnalysisOptions":
        base = self.to_dict()
        for key, val in (overrides or {}).items():
            if val is not None:
                base[key] = val
        return AnalysisOptions.from_dict(base)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "xi_max": self.xi_max,
            "axis_tol": self.axis_tol,
            "T": self.T,
            "dt": self.dt,
        }
        if self.grid is not None:
            out["grid"] = list(self.grid)
        if self.k is not None:
            out["k"] = self.k
        if self.tau is not None:
            out["tau"] = list(self.tau)
        if self.lambda1:
            out["lambda1"] = [list(c) for c in self.lambda1]
        if self.region is not None:
            out["region"] = list(self.region)
        return out
