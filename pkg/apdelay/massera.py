# apdelay/massera.py
"""
Almost periodic solutions of ẋ = A x + Σ_k B_k x(·+η_k) + f for trigonometric
forcing: harmonic-balance construction, hypothesis reports, spectral
decomposition and inclusion checks, non-existence certificates and residuals.
"""
from __future__ import annotations

import math
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config as CFG
from . import metrics as METRICS
from .apfun import (
    Frequency,
    TrigPolynomial,
    bohr_spectrum,
    chordal_distance,
    derivative,
    evaluate_many,
    integer_basis,
    integral_from_zero,
    is_periodic,
    sorted_spectrum,
)
from .chroots import DelaySystem, apply_delay_operator, char_matrix, condition_number, scan_axis
from .errors import BasisMismatch, DimMismatch, IncommensurableTau, Resonance, ValidationError, WindowTooSmall

AUTO_C0_NOTE = "c0_free: automatic, a finite-dimensional space contains no copy of c0"
AUTO_COUNTABLE_NOTE = "spf_countable: automatic, a trigonometric polynomial has finitely many frequencies"
WINDOW_NOTE = "sigma_i is searched only within [-{xi:g}, {xi:g}]; nothing is claimed outside the window"


def _log(msg: str) -> None:
    if CFG.verbose():
        print(f"[massera] {msg}", file=sys.stderr, flush=True)


class ForcedProblem:
    def __init__(self, sys_: DelaySystem, f: TrigPolynomial) -> None:
        if f.dim != sys_.dim:
            raise DimMismatch(f"dim mismatch: forcing dim {f.dim} != system dim {sys_.dim}")
        self.sys = sys_
        self.f = f

    @property
    def basis(self):
        return self.f.basis

    def __repr__(self) -> str:
        return f"ForcedProblem({self.sys!r}, {self.f!r})"


class SolutionBundle:
    def __init__(
        self,
        u: TrigPolynomial,
        classical_residual: float,
        mild_residual: float,
        spectral_check: bool,
        per_frequency_conditioning: Dict[Frequency, float],
    ) -> None:
        self.u = u
        self.classical_residual = float(classical_residual)
        self.mild_residual = float(mild_residual)
        self.spectral_check = bool(spectral_check)
        self.per_frequency_conditioning = dict(per_frequency_conditioning)

    @property
    def max_conditioning(self) -> float:
        return max(self.per_frequency_conditioning.values(), default=1.0)


def default_grid(f: TrigPolynomial) -> np.ndarray:
    """201 points on [0, 4π/λ_min], λ_min the smallest nonzero |frequency|; [0, 10] without one."""
    nonzero = [abs(fr.value) for fr in f.frequencies if fr.value != 0.0]
    end = 4.0 * math.pi / min(nonzero) if nonzero else 10.0
    return np.linspace(0.0, end, CFG.DEFAULT_GRID_POINTS)


def _grid(grid: Optional[Sequence[float]], f: TrigPolynomial) -> np.ndarray:
    if grid is None:
        return default_grid(f)
    ts = np.asarray(list(grid), dtype=float).reshape(-1)
    if ts.shape[0] == 0:
        raise ValidationError("residual grid must be non-empty")
    if not np.all(np.isfinite(ts)):
        raise ValidationError("residual grid must be finite")
    return ts


def residuals(u: TrigPolynomial, p: ForcedProblem, grid: Optional[Sequence[float]] = None) -> Tuple[float, float]:
    """
    Classical: max ‖u̇ − Au − Σ B_k u(·+η_k) − f‖ with the exact derivative.
    Mild: max ‖u(t) − u(0) − A∫₀ᵗu − ∫₀ᵗ(ℬu + f)‖ with exact antiderivatives.
    """
    if u.dim != p.sys.dim:
        raise DimMismatch(f"dim mismatch: solution dim {u.dim} != system dim {p.sys.dim}")
    ts = _grid(grid, p.f)
    A = p.sys.A

    du = evaluate_many(derivative(u), ts)
    rhs = evaluate_many(u, ts) @ A.T + evaluate_many(p.f, ts)
    for eta, B in p.sys.terms:
        rhs = rhs + evaluate_many(u, ts + eta) @ B.T
    classical = float(np.max(np.linalg.norm(du - rhs, axis=1)))

    u_t = evaluate_many(u, ts)
    u_0 = evaluate_many(u, [0.0])[0]
    integrated = (
        integral_from_zero(u, ts) @ A.T
        + integral_from_zero(apply_delay_operator(p.sys, u), ts)
        + integral_from_zero(p.f, ts)
    )
    mild = float(np.max(np.linalg.norm(u_t - u_0[None, :] - integrated, axis=1)))
    return classical, mild


def harmonic_solve(p: ForcedProblem, grid: Optional[Sequence[float]] = None) -> SolutionBundle:
    """u = Σ_j Δ(iλ_j)⁻¹ c_j e^{iλ_j t}, one independent solve per forcing frequency."""
    terms: List[Tuple[Frequency, np.ndarray]] = []
    conditioning: Dict[Frequency, float] = {}
    for fr, c in p.f.terms:
        z = 1j * fr.value
        cond = condition_number(p.sys, z)
        if not math.isfinite(cond) or cond > CFG.SINGULAR_CONDITION:
            METRICS.inc_harmonic_solve("resonance")
            _log(f"resonance at frequency {fr.value!r} (cond={cond:.3e})")
            raise Resonance(fr.value, cond)
        conditioning[fr] = cond
        terms.append((fr, np.linalg.solve(char_matrix(p.sys, z), c)))
    u = TrigPolynomial(p.f.basis, p.f.dim, terms)
    classical, mild = residuals(u, p, grid)
    METRICS.inc_harmonic_solve("ok")
    return SolutionBundle(
        u,
        classical,
        mild,
        spectral_check=bohr_spectrum(u) <= bohr_spectrum(p.f),
        per_frequency_conditioning=conditioning,
    )


def _nearest(value: float, points: Sequence[float]) -> float:
    return min((abs(value - x) for x in points), default=math.inf)


class ConditionReport:
    def __init__(
        self,
        window: Tuple[float, float],
        sigma_i_window: List[float],
        resonances: List[Frequency],
        thm12: Dict[str, Any],
        thm20: Dict[str, Any],
        thm21: Dict[str, Any],
        solvable_directly: bool,
        notes: List[str],
    ) -> None:
        self.window = (float(window[0]), float(window[1]))
        self.sigma_i_window = list(sigma_i_window)
        self.resonances = list(resonances)
        self.thm12 = dict(thm12)
        self.thm20 = dict(thm20)
        self.thm21 = dict(thm21)
        self.solvable_directly = bool(solvable_directly)
        self.notes = list(notes)

    @property
    def hypotheses_hold(self) -> bool:
        return all(block.get("verdict") == "holds" for block in (self.thm12, self.thm20, self.thm21))

    @property
    def ok(self) -> bool:
        return self.hypotheses_hold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "window": list(self.window),
            "sigma_i_window": list(self.sigma_i_window),
            "resonances": [
                {"coords": fr.to_strings(), "value": fr.value} for fr in self.resonances
            ],
            "thm12": dict(self.thm12),
            "thm20": dict(self.thm20),
            "thm21": dict(self.thm21),
            "hypotheses_hold": self.hypotheses_hold,
            "solvable_directly": self.solvable_directly,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], basis=None) -> "ConditionReport":
        """Rebuild from to_dict output. Resonances need the basis to come back as Frequencies."""
        thm20 = dict(raw.get("thm20") or {})
        if "circle_distance" in thm20:
            thm20["circle_distance"] = float(thm20["circle_distance"])
        resonances: List[Frequency] = []
        for item in raw.get("resonances") or []:
            if basis is None:
                raise ValidationError("a generator basis is needed to read resonances", field="resonances")
            resonances.append(Frequency(basis, item["coords"]))
        window = raw.get("window") or [0.0, 0.0]
        return cls(
            window=(float(window[0]), float(window[1])),
            sigma_i_window=[float(x) for x in raw.get("sigma_i_window") or []],
            resonances=resonances,
            thm12=raw.get("thm12") or {},
            thm20=thm20,
            thm21=raw.get("thm21") or {},
            solvable_directly=bool(raw.get("solvable_directly")),
            notes=[str(n) for n in raw.get("notes") or []],
        )


def check_conditions(p: ForcedProblem, xi_max: float, axis_tol: float = CFG.AXIS_TOL) -> ConditionReport:
    """
    Report on the Massera-type hypotheses within the window [−Ξ, Ξ] next to
    direct solvability of the harmonic balance. The two can disagree: the
    circle condition compares e^{iξ} with e^{iλ}, while solvability only
    needs Δ(iλ_j) invertible.
    """
    xi = float(xi_max)
    if not (xi > 0):
        raise ValidationError("xi_max must be positive")
    scan = scan_axis(p.sys, xi, axis_tol)
    sig = list(scan.points)
    freqs = sorted_spectrum(p.f)
    notes = [WINDOW_NOTE.format(xi=xi), AUTO_C0_NOTE, AUTO_COUNTABLE_NOTE]
    notes.extend(scan.warnings)

    resonances: List[Frequency] = []
    for fr in freqs:
        gap = _nearest(fr.value, sig)
        cond = condition_number(p.sys, 1j * fr.value)
        if gap <= CFG.MATCH_TOL or not math.isfinite(cond) or cond > CFG.SINGULAR_CONDITION:
            resonances.append(fr)
            _log(f"forcing frequency {fr.value!r} is resonant (gap={gap:.3e}, cond={cond:.3e})")
            continue
        if gap <= CFG.NEAR_MISS_FACTOR * CFG.MATCH_TOL:
            notes.append(
                f"near-miss: forcing frequency {fr.value!r} is {gap:.3e} from sigma_i; solution coefficients may be large"
            )
        if abs(fr.value) > xi:
            notes.append(f"forcing frequency {fr.value!r} lies outside the window; resonance decided by conditioning only")

    values = [fr.value for fr in freqs]
    off_forcing = [x for x in sig if _nearest(x, values) > CFG.MATCH_TOL]
    distance = min(
        (chordal_distance(x, lam) for x in off_forcing for lam in values),
        default=math.inf,
    )
    separated = distance > CFG.SEPARATION_TOL

    thm12 = {
        "sigma_i_minus_spf_finite_in_window": True,
        "spf_countable": True,
        "c0_free": True,
        "verdict": "holds",
    }
    thm20 = {
        "circle_distance": distance,
        "separated": separated,
        "verdict": "holds" if separated else "fails",
    }
    thm21 = {
        "circle_spf_countable": True,
        "c0_free": True,
        "verdict": "holds" if separated else "fails",
    }
    if not separated:
        notes.append("e^{i sigma_i} minus e^{i sp(f)} touches e^{i sp(f)} on the unit circle")
    solvable = not resonances
    if separated and not solvable:
        notes.append("hypotheses hold but the harmonic balance is resonant; no direct construction")
    if solvable and not separated:
        notes.append("hypotheses fail but every forcing frequency is non-resonant; the direct construction applies")
    return ConditionReport((-xi, xi), sig, resonances, thm12, thm20, thm21, solvable, notes)


def decompose_solution(u: TrigPolynomial, lambda1: Iterable[Frequency]) -> Tuple[TrigPolynomial, TrigPolynomial]:
    chosen = set(lambda1)
    for fr in chosen:
        if fr.basis != u.basis:
            raise BasisMismatch("lambda1 frequency over a different generator basis")
    u1 = TrigPolynomial(u.basis, u.dim, [(fr, c) for fr, c in u.terms if fr in chosen])
    u2 = TrigPolynomial(u.basis, u.dim, [(fr, c) for fr, c in u.terms if fr not in chosen])
    return u1, u2


class InclusionResult:
    def __init__(
        self,
        ok: bool,
        witness: Optional[Frequency],
        violated: str,
        sigma_i_window: List[float],
        notes: List[str],
    ) -> None:
        self.ok = bool(ok)
        self.witness = witness
        self.violated = violated
        self.sigma_i_window = sigma_i_window
        self.notes = notes

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "violated": self.violated,
            "witness": None
            if self.witness is None
            else {"coords": self.witness.to_strings(), "value": self.witness.value},
            "sigma_i_window": list(self.sigma_i_window),
            "notes": list(self.notes),
        }


def verify_spectral_inclusion(
    u: TrigPolynomial,
    p: ForcedProblem,
    xi_max: float,
    axis_tol: float = CFG.AXIS_TOL,
) -> InclusionResult:
    """σ_b(f) ⊂ σ_b(u) ⊂ Σ_i ∪ σ_b(f), with Σ_i taken inside the window."""
    if u.basis != p.f.basis:
        raise BasisMismatch("solution and forcing over different generator bases")
    xi = float(xi_max)
    for fr in u.frequencies:
        if abs(fr.value) > xi:
            raise WindowTooSmall(f"solution frequency {fr.value!r} outside [-{xi:g}, {xi:g}]")
    sig = scan_axis(p.sys, xi, axis_tol).points
    spec_u = bohr_spectrum(u)
    spec_f = bohr_spectrum(p.f)
    notes = [WINDOW_NOTE.format(xi=xi)]
    for fr in sorted_spectrum(p.f):
        if fr not in spec_u:
            return InclusionResult(False, fr, "sp(f) in sp(u)", sig, notes)
    for fr in sorted_spectrum(u):
        if fr in spec_f:
            continue
        if _nearest(fr.value, sig) > CFG.MATCH_TOL:
            return InclusionResult(False, fr, "sp(u) in sigma_i + sp(f)", sig, notes)
    return InclusionResult(True, None, "", sig, notes)


class Certificate:
    def __init__(
        self,
        issued: bool,
        kind: str,
        l: int,
        module_basis: Sequence[Frequency],
        reason: str,
        k: Optional[int] = None,
        tau: Optional[List[str]] = None,
    ) -> None:
        self.issued = bool(issued)
        self.kind = kind
        self.l = int(l)
        self.module_basis = list(module_basis)
        self.reason = reason
        self.k = k
        self.tau = tau

    def __bool__(self) -> bool:
        return self.issued

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "issued": self.issued,
            "kind": self.kind,
            "l": self.l,
            "integer_basis": [
                {"coords": fr.to_strings(), "value": fr.value} for fr in self.module_basis
            ],
            "reason": self.reason,
        }
        if self.k is not None:
            out["k"] = self.k
        if self.tau is not None:
            out["tau"] = list(self.tau)
        return out


def nonexistence_certificate(p: ForcedProblem, k: Optional[int] = None, tau: Any = None) -> Certificate:
    """
    Any strong mild solution u has σ_b(f) ⊂ σ_b(u), so its module has rank at
    least l = qp_order(f). For k < l no k-quasi-periodic strong mild solution
    exists. With tau given the question is periodicity instead: σ_b(f) must sit
    in (2π/τ)ℤ, decided exactly.
    """
    module = integer_basis(bohr_spectrum(p.f), basis=p.f.basis)
    l = module.rank
    if tau is not None:
        tau_strs = [str(x) for x in tau] if not isinstance(tau, Frequency) else tau.to_strings()
        try:
            periodic = is_periodic(p.f, tau)
        except IncommensurableTau as exc:
            return Certificate(False, "periodic", l, module.integer_basis, f"refused: {exc}", tau=tau_strs)
        if periodic:
            return Certificate(
                False,
                "periodic",
                l,
                module.integer_basis,
                "refused: every forcing frequency is a multiple of 2*pi/tau, no obstruction",
                tau=tau_strs,
            )
        return Certificate(
            True,
            "periodic",
            l,
            module.integer_basis,
            "some forcing frequency is not a multiple of 2*pi/tau; sp(f) is inside sp(u) for any strong mild solution u",
            tau=tau_strs,
        )
    if k is None:
        raise ValidationError("certificate needs k or tau")
    kk = int(k)
    if kk < 0:
        raise ValidationError("k must be non-negative")
    if kk < l:
        return Certificate(
            True,
            "quasi-periodic",
            l,
            module.integer_basis,
            f"sp(f) is inside sp(u) for any strong mild solution u, so its module has rank >= {l} > {kk}",
            k=kk,
        )
    return Certificate(
        False,
        "quasi-periodic",
        l,
        module.integer_basis,
        f"refused: k = {kk} >= qp_order(f) = {l}, no conclusion",
        k=kk,
    )


class ReducedSolution:
    def __init__(
        self,
        homogeneous: TrigPolynomial,
        reduced: TrigPolynomial,
        classical_residual: float,
        mild_residual: float,
        inclusion: bool,
        notes: List[str],
    ) -> None:
        self.homogeneous = homogeneous
        self.reduced = reduced
        self.classical_residual = classical_residual
        self.mild_residual = mild_residual
        self.inclusion = inclusion
        self.notes = notes


def reduce_solution(
    u: TrigPolynomial,
    p: ForcedProblem,
    lambda1: Iterable[Frequency],
    xi_max: float,
    axis_tol: float = CFG.AXIS_TOL,
    grid: Optional[Sequence[float]] = None,
) -> ReducedSolution:
    """
    Strip the harmonics at lambda1 ⊂ Σ_i \\ σ_b(f) from a solution u. The
    removed part solves the homogeneous equation, so what remains is again a
    solution, now with spectrum in (Σ_i \\ lambda1) ∪ σ_b(f).
    """
    chosen = set(lambda1)
    xi = float(xi_max)
    sig = scan_axis(p.sys, xi, axis_tol).points
    spec_f = bohr_spectrum(p.f)
    for fr in chosen:
        if fr.basis != u.basis:
            raise BasisMismatch("lambda1 frequency over a different generator basis")
        if abs(fr.value) > xi:
            raise WindowTooSmall(f"lambda1 frequency {fr.value!r} outside [-{xi:g}, {xi:g}]")
        if fr in spec_f or _nearest(fr.value, sig) > CFG.MATCH_TOL:
            raise ValidationError(f"lambda1 frequency {fr.value!r} is not in sigma_i minus sp(f)")
    u1, u2 = decompose_solution(u, chosen)
    classical, mild = residuals(u2, p, grid)
    allowed = [x for x in sig if _nearest(x, [fr.value for fr in chosen]) > CFG.MATCH_TOL]
    inclusion = all(fr in spec_f or _nearest(fr.value, allowed) <= CFG.MATCH_TOL for fr in u2.frequencies)
    return ReducedSolution(u1, u2, classical, mild, inclusion, [WINDOW_NOTE.format(xi=xi)])
