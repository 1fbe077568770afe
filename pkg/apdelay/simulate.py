# apdelay/simulate.py
"""
Method-of-steps RK4 for retarded systems, used to cross-check constructed
solutions. Delayed values inside the computed range come from cubic Hermite
interpolation of the stored states and their right-hand sides; values on
[−r, 0] come from the history exactly. Breaking points at multiples of the
delays are not meshed, so order drops locally when the history is not itself
a solution.
"""
from __future__ import annotations

import math
import sys
from typing import Any, List

import numpy as np

from . import config as CFG
from . import metrics as METRICS
from .apfun import TrigPolynomial, evaluate_many
from .chroots import DelaySystem
from .errors import AdvanceTermPresent, DimMismatch, StepTooLarge, ValidationError


def _log(msg: str) -> None:
    if CFG.verbose():
        print(f"[simulate] {msg}", file=sys.stderr, flush=True)


class History:
    """Initial data on [−r, 0], given by a trigonometric polynomial."""

    def __init__(self, source: TrigPolynomial, r: float = 0.0) -> None:
        rr = float(r)
        if not math.isfinite(rr) or rr < 0:
            raise ValidationError("history length r must be non-negative")
        self.source = source
        self.r = rr

    @classmethod
    def for_system(cls, sys_: DelaySystem, source: TrigPolynomial) -> "History":
        if source.dim != sys_.dim:
            raise DimMismatch(f"dim mismatch: history dim {source.dim} != system dim {sys_.dim}")
        return cls(source, max((abs(e) for e in sys_.etas if e < 0), default=0.0))

    @property
    def dim(self) -> int:
        return self.source.dim

    def values(self, ts: Any) -> np.ndarray:
        times = np.asarray(ts, dtype=float).reshape(-1)
        if np.any(times > 0) or np.any(times < -self.r - 1e-12):
            raise ValidationError(f"history is defined on [-{self.r}, 0] only")
        return evaluate_many(self.source, times)


class Trajectory:
    def __init__(self, t0: float, dt: float, values: Any) -> None:
        step = float(dt)
        vals = np.asarray(values, dtype=complex)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if not (step > 0):
            raise ValidationError("dt must be positive")
        if vals.shape[0] == 0:
            raise ValidationError("trajectory needs at least one value")
        self.t0 = float(t0)
        self.dt = step
        self.values = vals

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.shape[0])

    def __len__(self) -> int:
        return int(self.values.shape[0])


def _hermite(x0: np.ndarray, d0: np.ndarray, x1: np.ndarray, d1: np.ndarray, theta: float, dt: float) -> np.ndarray:
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2.0 * t3 - 3.0 * t2 + 1.0) * x0
        + (t3 - 2.0 * t2 + theta) * dt * d0
        + (-2.0 * t3 + 3.0 * t2) * x1
        + (t3 - t2) * dt * d1
    )


def integrate(sys_: DelaySystem, f: TrigPolynomial, h: History, T: float, dt: float) -> Trajectory:
    """
    Classical RK4 on [0, T] with step dt. Requires η_k ≤ 0 for every term and
    dt ≤ min|η_k|/4 over the nonzero delays.
    """
    if sys_.has_advance():
        raise AdvanceTermPresent("advance term (eta > 0): the initial value problem is not well-posed")
    if f.dim != sys_.dim or h.dim != sys_.dim:
        raise DimMismatch(f"dim mismatch: system {sys_.dim}, forcing {f.dim}, history {h.dim}")
    horizon = float(T)
    step = float(dt)
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValidationError("T must be positive")
    if not (math.isfinite(step) and step > 0):
        raise ValidationError("dt must be positive")
    lags = [abs(e) for e in sys_.etas if e < 0]
    if lags and step > min(lags) / 4.0:
        raise StepTooLarge(f"dt={step} exceeds min delay / 4 = {min(lags) / 4.0}")
    if h.r < max(lags, default=0.0) - 1e-12:
        raise ValidationError(f"history covers [-{h.r}, 0] but the longest delay is {max(lags)}")

    n_steps = int(math.ceil(horizon / step - 1e-9))
    times = step * np.arange(n_steps + 1)
    A = sys_.A
    delayed = [(eta, B) for eta, B in sys_.terms if eta < 0]
    instant = sum((B for eta, B in sys_.terms if eta == 0), np.zeros_like(A))
    M = A + instant

    force_full = evaluate_many(f, times)
    force_half = evaluate_many(f, times + 0.5 * step)
    hist_full = {eta: h.values(np.minimum(times + eta, 0.0)) for eta, _ in delayed}
    hist_half = {eta: h.values(np.minimum(times + 0.5 * step + eta, 0.0)) for eta, _ in delayed}

    X = np.zeros((n_steps + 1, sys_.dim), dtype=complex)
    D = np.zeros_like(X)
    X[0] = h.values([0.0])[0]

    def lagged(k: int, half: bool, eta: float) -> np.ndarray:
        s = times[k] + (0.5 * step if half else 0.0) + eta
        if s <= 0.0:
            return (hist_half if half else hist_full)[eta][k]
        i = min(int(s // step), k - 1)
        theta = (s - times[i]) / step
        return _hermite(X[i], D[i], X[i + 1], D[i + 1], theta, step)

    def rhs(x: np.ndarray, force: np.ndarray, k: int, stage: str) -> np.ndarray:
        out = M @ x + force
        for eta, B in delayed:
            if stage == "full":
                val = lagged(k, False, eta)
            elif stage == "half":
                val = lagged(k, True, eta)
            else:
                val = lagged(k + 1, False, eta)
            out = out + B @ val
        return out

    for k in range(n_steps):
        x = X[k]
        k1 = rhs(x, force_full[k], k, "full")
        D[k] = k1
        k2 = rhs(x + 0.5 * step * k1, force_half[k], k, "half")
        k3 = rhs(x + 0.5 * step * k2, force_half[k], k, "half")
        k4 = rhs(x + step * k3, force_full[k + 1], k, "next")
        X[k + 1] = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    D[n_steps] = rhs(X[n_steps], force_full[n_steps], n_steps, "full") if n_steps else D[0]

    METRICS.inc_integration_steps(n_steps)
    _log(f"integrated {n_steps} steps of dt={step} up to t={times[-1]}")
    return Trajectory(0.0, step, X)


def compare(traj: Trajectory, u: TrigPolynomial) -> float:
    """max over the trajectory grid of ‖traj(t) − u(t)‖."""
    if traj.dim != u.dim:
        raise DimMismatch(f"dim mismatch: trajectory {traj.dim} != polynomial {u.dim}")
    diff = traj.values - evaluate_many(u, traj.times)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def trajectory_csv(traj: Trajectory) -> List[List[Any]]:
    header: List[Any] = ["t"]
    for j in range(1, traj.dim + 1):
        header += [f"re_{j}", f"im_{j}"]
    rows: List[List[Any]] = [header]
    for t, vec in zip(traj.times, traj.values):
        row: List[Any] = [float(t)]
        for c in vec:
            row += [float(c.real), float(c.imag)]
        rows.append(row)
    return rows
