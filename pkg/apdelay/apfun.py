# apdelay/apfun.py
"""
Exact calculus of trigonometric polynomials with frequencies given as rational
vectors over user-declared generators.

Everything that decides membership, modules or periodicity works on the
rational coordinates; only evaluation and the sampled-signal estimators touch
floating point.
"""
from __future__ import annotations

import math
import re
import sys
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import fftconvolve

from . import config as CFG
from .errors import (
    AmbiguousBoundary,
    AtPole,
    BasisMismatch,
    DimMismatch,
    IncommensurableTau,
    InsufficientCoverage,
    OnAxis,
    SpanTooShort,
    ValidationError,
)

RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")
TWO_PI = 2.0 * math.pi

Rational = Union[Fraction, int, str]


def _log(msg: str) -> None:
    if CFG.verbose():
        print(f"[apfun] {msg}", file=sys.stderr, flush=True)


def parse_rational(raw: Any) -> Fraction:
    if isinstance(raw, bool):
        raise ValidationError(f"not a rational: {raw!r}")
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        m = RATIONAL_RE.match(raw)
        if not m:
            raise ValidationError(f"not a rational string 'p/q': {raw!r}")
        den = int(m.group(2)) if m.group(2) is not None else 1
        if den == 0:
            raise ValidationError(f"zero denominator: {raw!r}")
        return Fraction(int(m.group(1)), den)
    # Coordinates stay exact, so floats are refused.
    raise ValidationError(f"frequency coordinates must be rational strings, got {type(raw).__name__}")


def rational_str(q: Fraction) -> str:
    return str(q)


class GeneratorBasis:
    """
    Ordered named generators ω_1..ω_k. Rational independence of the values is
    not checkable in floating point; it is carried as the `independent` flag
    and every downstream module/periodicity claim is conditional on it.
    """

    def __init__(self, generators: Sequence[Tuple[str, float]], independent: bool = True) -> None:
        names: List[str] = []
        values: List[float] = []
        for name, value in generators:
            nm = str(name or "").strip()
            if not nm.isidentifier():
                raise ValidationError(f"generator name must be an identifier: {name!r}")
            if nm in names:
                raise ValidationError(f"duplicate generator name: {nm}")
            val = float(value)
            if not math.isfinite(val) or val == 0.0:
                raise ValidationError(f"generator {nm} must be finite and nonzero")
            if val in values:
                raise ValidationError(f"duplicate generator value: {val!r}")
            names.append(nm)
            values.append(val)
        self.names: Tuple[str, ...] = tuple(names)
        self.values: Tuple[float, ...] = tuple(values)
        self.independent = bool(independent)

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"undeclared generator: {name}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneratorBasis):
            return NotImplemented
        return self.names == other.names and self.values == other.values

    def __hash__(self) -> int:
        return hash((self.names, self.values))

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={v!r}" for n, v in zip(self.names, self.values))
        return f"GeneratorBasis({inner})"


class Frequency:
    __slots__ = ("basis", "coords", "value")

    def __init__(self, basis: GeneratorBasis, coords: Sequence[Rational]) -> None:
        if len(coords) != basis.size:
            raise ValidationError(f"frequency needs {basis.size} coordinates, got {len(coords)}")
        self.basis = basis
        self.coords: Tuple[Fraction, ...] = tuple(parse_rational(c) for c in coords)
        self.value = math.fsum(float(q) * w for q, w in zip(self.coords, basis.values))

    @classmethod
    def zero(cls, basis: GeneratorBasis) -> "Frequency":
        return cls(basis, [0] * basis.size)

    @classmethod
    def of(cls, basis: GeneratorBasis, **named: Rational) -> "Frequency":
        coords: List[Rational] = [0] * basis.size
        for name, q in named.items():
            coords[basis.index(name)] = q
        return cls(basis, coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def _check(self, other: "Frequency") -> None:
        if self.basis != other.basis:
            raise BasisMismatch("frequencies over different generator bases")

    def __add__(self, other: "Frequency") -> "Frequency":
        self._check(other)
        return Frequency(self.basis, [a + b for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other: "Frequency") -> "Frequency":
        self._check(other)
        return Frequency(self.basis, [a - b for a, b in zip(self.coords, other.coords)])

    def __neg__(self) -> "Frequency":
        return Frequency(self.basis, [-a for a in self.coords])

    def scaled(self, q: Rational) -> "Frequency":
        r = parse_rational(q)
        return Frequency(self.basis, [r * a for a in self.coords])

    def sort_key(self) -> Tuple[float, Tuple[Fraction, ...]]:
        return (self.value, self.coords)

    def to_strings(self) -> List[str]:
        return [rational_str(q) for q in self.coords]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frequency):
            return NotImplemented
        return self.basis == other.basis and self.coords == other.coords

    def __hash__(self) -> int:
        return hash((self.basis, self.coords))

    def __repr__(self) -> str:
        parts = [f"{q}*{n}" for q, n in zip(self.coords, self.basis.names) if q]
        return f"Frequency({' + '.join(parts) or '0'})"


class TrigPolynomial:
    """
    Σ_j c_j e^{iλ_j t} with vector coefficients c_j ∈ ℂⁿ. Instances are
    canonical: frequencies are distinct, sorted by value, and coefficients
    with norm ≤ 1e-14 × (largest coefficient norm) are dropped.
    """

    def __init__(
        self,
        basis: GeneratorBasis,
        dim: int,
        terms: Iterable[Tuple[Frequency, Any]] = (),
    ) -> None:
        if int(dim) != dim or int(dim) <= 0:
            raise ValidationError(f"dim must be a positive integer, got {dim!r}")
        self.basis = basis
        self.dim = int(dim)
        merged: Dict[Frequency, np.ndarray] = {}
        for freq, coeff in terms:
            if freq.basis != basis:
                raise BasisMismatch("term frequency over a different generator basis")
            vec = np.asarray(coeff, dtype=complex).reshape(-1)
            if vec.shape != (self.dim,):
                raise DimMismatch(f"coefficient length {vec.shape[0]} != dim {self.dim}")
            if freq in merged:
                merged[freq] = merged[freq] + vec
            else:
                merged[freq] = vec.copy()

        norms = {fr: float(np.linalg.norm(c)) for fr, c in merged.items()}
        largest = max(norms.values()) if norms else 1.0
        cutoff = CFG.PRUNE_RELATIVE * largest
        kept: List[Tuple[Frequency, np.ndarray]] = []
        for fr in sorted(merged, key=Frequency.sort_key):
            if norms[fr] <= cutoff:
                continue
            vec = merged[fr]
            vec.setflags(write=False)
            kept.append((fr, vec))
        self._terms: Tuple[Tuple[Frequency, np.ndarray], ...] = tuple(kept)
        self._index: Dict[Frequency, np.ndarray] = dict(kept)

    @classmethod
    def zero(cls, basis: GeneratorBasis, dim: int) -> "TrigPolynomial":
        return cls(basis, dim, ())

    @classmethod
    def monomial(cls, freq: Frequency, coeff: Any) -> "TrigPolynomial":
        vec = np.atleast_1d(np.asarray(coeff, dtype=complex))
        return cls(freq.basis, vec.shape[0], [(freq, vec)])

    @property
    def terms(self) -> Tuple[Tuple[Frequency, np.ndarray], ...]:
        return self._terms

    @property
    def frequencies(self) -> List[Frequency]:
        return [fr for fr, _ in self._terms]

    def coefficient(self, freq: Frequency) -> Optional[np.ndarray]:
        return self._index.get(freq)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __call__(self, t: float) -> np.ndarray:
        return evaluate(self, t)

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return combine(self, other, 1.0, 1.0)

    def __sub__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return combine(self, other, 1.0, -1.0)

    def __neg__(self) -> "TrigPolynomial":
        return scale(self, -1.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        if self.basis != other.basis or self.dim != other.dim or len(self) != len(other):
            return False
        for (fa, ca), (fb, cb) in zip(self._terms, other._terms):
            if fa != fb or not np.array_equal(ca, cb):
                return False
        return True

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"TrigPolynomial(dim={self.dim}, frequencies={self.frequencies})"


def _same_space(f: TrigPolynomial, g: TrigPolynomial) -> None:
    if f.basis != g.basis:
        raise BasisMismatch("trigonometric polynomials over different generator bases")
    if f.dim != g.dim:
        raise DimMismatch(f"dimension mismatch: {f.dim} != {g.dim}")


def _arrays(f: TrigPolynomial) -> Tuple[np.ndarray, np.ndarray]:
    lam = np.array([fr.value for fr, _ in f.terms], dtype=float)
    coeffs = np.array([c for _, c in f.terms], dtype=complex).reshape(len(f.terms), f.dim)
    return lam, coeffs


def evaluate(f: TrigPolynomial, t: float) -> np.ndarray:
    return evaluate_many(f, np.array([float(t)]))[0]


def evaluate_many(f: TrigPolynomial, ts: Any) -> np.ndarray:
    times = np.asarray(ts, dtype=float).reshape(-1)
    if f.is_zero():
        return np.zeros((times.shape[0], f.dim), dtype=complex)
    lam, coeffs = _arrays(f)
    return np.exp(1j * np.outer(times, lam)) @ coeffs


def integral_from_zero(f: TrigPolynomial, ts: Any) -> np.ndarray:
    """∫₀ᵗ f for each t; zero-frequency terms contribute c·t."""
    times = np.asarray(ts, dtype=float).reshape(-1)
    out = np.zeros((times.shape[0], f.dim), dtype=complex)
    for fr, c in f.terms:
        if fr.is_zero():
            out += np.outer(times, c)
        else:
            lam = fr.value
            out += np.outer((np.exp(1j * lam * times) - 1.0) / (1j * lam), c)
    return out


def combine(f: TrigPolynomial, g: TrigPolynomial, alpha: complex, beta: complex) -> TrigPolynomial:
    _same_space(f, g)
    a = complex(alpha)
    b = complex(beta)
    terms = [(fr, a * c) for fr, c in f.terms] + [(fr, b * c) for fr, c in g.terms]
    return TrigPolynomial(f.basis, f.dim, terms)


def scale(f: TrigPolynomial, alpha: complex) -> TrigPolynomial:
    a = complex(alpha)
    return TrigPolynomial(f.basis, f.dim, [(fr, a * c) for fr, c in f.terms])


def translate(f: TrigPolynomial, h: float) -> TrigPolynomial:
    shift = float(h)
    return TrigPolynomial(f.basis, f.dim, [(fr, np.exp(1j * fr.value * shift) * c) for fr, c in f.terms])


def derivative(f: TrigPolynomial) -> TrigPolynomial:
    return TrigPolynomial(
        f.basis,
        f.dim,
        [(fr, 1j * fr.value * c) for fr, c in f.terms if not fr.is_zero()],
    )


def bohr_coefficient(f: TrigPolynomial, lam: Frequency) -> np.ndarray:
    if lam.basis != f.basis:
        raise BasisMismatch("frequency over a different generator basis")
    c = f.coefficient(lam)
    if c is None:
        return np.zeros(f.dim, dtype=complex)
    return np.array(c, dtype=complex)


def bohr_spectrum(f: TrigPolynomial) -> FrozenSet[Frequency]:
    return frozenset(f.frequencies)


def sorted_spectrum(f: TrigPolynomial) -> List[Frequency]:
    return list(f.frequencies)


class SampledSignal:
    """Uniformly sampled vector signal: times t_0..t_{N-1} and an N×n sample array."""

    def __init__(self, t: Any, values: Any) -> None:
        times = np.asarray(t, dtype=float).reshape(-1)
        vals = np.asarray(values, dtype=complex)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if times.shape[0] < 2:
            raise ValidationError("signal needs at least two samples")
        if vals.shape[0] != times.shape[0]:
            raise DimMismatch(f"{vals.shape[0]} sample rows for {times.shape[0]} times")
        steps = np.diff(times)
        dt = float((times[-1] - times[0]) / (times.shape[0] - 1))
        if dt <= 0 or float(np.max(np.abs(steps - dt))) > 1e-6 * dt:
            raise ValidationError("signal time grid must be uniform and increasing")
        self.t = times
        self.values = vals
        self.dt = dt

    @classmethod
    def from_polynomial(cls, f: TrigPolynomial, t0: float, t1: float, dt: float) -> "SampledSignal":
        count = int(round((float(t1) - float(t0)) / float(dt))) + 1
        times = float(t0) + float(dt) * np.arange(count)
        return cls(times, evaluate_many(f, times))

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def span(self) -> float:
        return float(self.t[-1] - self.t[0])

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))


def bohr_coefficient_numeric(g: SampledSignal, lam: float, T: float) -> np.ndarray:
    """
    Trapezoid estimate of the mean (1/2T)∫_{-T}^{T} e^{-iλt} g(t) dt.
    For a trigonometric g the error is at most
    (1/T)·Σ_{μ≠λ} 2‖c_μ‖/|μ−λ| + O(dt²); see numeric_coefficient_bound.
    """
    half = float(T)
    if not math.isfinite(half) or half <= 0:
        raise ValidationError("T must be positive")
    slack = 1e-9 * max(1.0, half) + 1e-6 * g.dt
    if g.t[0] > -half + slack or g.t[-1] < half - slack:
        raise InsufficientCoverage(f"samples span [{g.t[0]}, {g.t[-1]}], need [{-half}, {half}]")
    mask = (g.t >= -half - slack) & (g.t <= half + slack)
    ts = g.t[mask]
    integrand = np.exp(-1j * float(lam) * ts)[:, None] * g.values[mask]
    return trapezoid(integrand, ts, axis=0) / float(ts[-1] - ts[0])


def numeric_coefficient_bound(f: TrigPolynomial, lam: float, T: float) -> float:
    total = 0.0
    for fr, c in f.terms:
        gap = abs(fr.value - float(lam))
        if gap == 0.0:
            continue
        total += 2.0 * float(np.linalg.norm(c)) / gap
    return total / float(T)


def _hermite_rows(matrix: Sequence[Sequence[int]]) -> List[List[int]]:
    """Row Hermite normal form over ℤ; returns the nonzero rows only."""
    rows = [list(map(int, r)) for r in matrix if any(r)]
    if not rows:
        return []
    ncols = len(rows[0])
    pivot = 0
    for col in range(ncols):
        if pivot >= len(rows):
            break
        while True:
            live = [i for i in range(pivot, len(rows)) if rows[i][col] != 0]
            if not live:
                break
            best = min(live, key=lambda i: abs(rows[i][col]))
            rows[pivot], rows[best] = rows[best], rows[pivot]
            clean = True
            for i in range(pivot + 1, len(rows)):
                if rows[i][col]:
                    q = rows[i][col] // rows[pivot][col]
                    rows[i] = [a - q * b for a, b in zip(rows[i], rows[pivot])]
                    if rows[i][col]:
                        clean = False
            if clean:
                break
        if rows[pivot][col] == 0:
            continue
        if rows[pivot][col] < 0:
            rows[pivot] = [-a for a in rows[pivot]]
        for i in range(pivot):
            q = rows[i][col] // rows[pivot][col]
            if q:
                rows[i] = [a - q * b for a, b in zip(rows[i], rows[pivot])]
        pivot += 1
    return [r for r in rows[:pivot] if any(r)]


def _solve_rational(rows: Sequence[Sequence[Fraction]], target: Sequence[Fraction]) -> Optional[List[Fraction]]:
    """Solve c·rows = target exactly; None when target is outside the row span."""
    k = len(rows)
    if k == 0:
        return [] if not any(target) else None
    ncols = len(target)
    # Columns of the augmented system: unknowns c_0..c_{k-1}, one equation per coordinate.
    eqs = [[Fraction(rows[j][i]) for j in range(k)] + [Fraction(target[i])] for i in range(ncols)]
    piv_cols: List[int] = []
    r = 0
    for c in range(k):
        sel = next((i for i in range(r, ncols) if eqs[i][c] != 0), None)
        if sel is None:
            continue
        eqs[r], eqs[sel] = eqs[sel], eqs[r]
        inv = 1 / eqs[r][c]
        eqs[r] = [v * inv for v in eqs[r]]
        for i in range(ncols):
            if i != r and eqs[i][c] != 0:
                fac = eqs[i][c]
                eqs[i] = [a - fac * b for a, b in zip(eqs[i], eqs[r])]
        piv_cols.append(c)
        r += 1
    for i in range(r, ncols):
        if eqs[i][k] != 0:
            return None
    sol = [Fraction(0)] * k
    for row_i, c in enumerate(piv_cols):
        sol[c] = eqs[row_i][k]
    return sol


class FrequencyModule:
    """The ℤ-module 𝔐 generated by a frequency set, held through an integer basis."""

    def __init__(self, basis: Optional[GeneratorBasis], integer_basis: Sequence[Frequency]) -> None:
        self.basis = basis
        self.integer_basis: Tuple[Frequency, ...] = tuple(integer_basis)

    @property
    def rank(self) -> int:
        return len(self.integer_basis)

    def coefficients(self, freq: Frequency) -> List[int]:
        if self.basis is not None and freq.basis != self.basis:
            raise BasisMismatch("frequency over a different generator basis")
        sol = _solve_rational([b.coords for b in self.integer_basis], freq.coords)
        if sol is None or any(q.denominator != 1 for q in sol):
            raise ValueError(f"{freq!r} is not in the module")
        return [int(q) for q in sol]

    def contains(self, freq: Frequency) -> bool:
        try:
            self.coefficients(freq)
        except ValueError:
            return False
        return True

    def __repr__(self) -> str:
        return f"FrequencyModule(rank={self.rank}, basis={list(self.integer_basis)})"


def integer_basis(freqs: Iterable[Frequency], basis: Optional[GeneratorBasis] = None) -> FrequencyModule:
    items = sorted(set(freqs), key=Frequency.sort_key)
    if basis is None and items:
        basis = items[0].basis
    for fr in items:
        if fr.basis != basis:
            raise BasisMismatch("frequencies over different generator bases")
    if not items or basis is None:
        return FrequencyModule(basis, ())
    lcms = [1] * basis.size
    for fr in items:
        for i, q in enumerate(fr.coords):
            lcms[i] = lcms[i] * q.denominator // math.gcd(lcms[i], q.denominator)
    rows = [[int(q * lcms[i]) for i, q in enumerate(fr.coords)] for fr in items]
    hnf = _hermite_rows(rows)
    generators = [Frequency(basis, [Fraction(v, lcms[i]) for i, v in enumerate(row)]) for row in hnf]
    return FrequencyModule(basis, generators)


def qp_order(f: TrigPolynomial) -> int:
    return integer_basis(bohr_spectrum(f), basis=f.basis).rank


def _as_frequency(basis: GeneratorBasis, value: Any) -> Frequency:
    if isinstance(value, Frequency):
        if value.basis != basis:
            raise BasisMismatch("tau over a different generator basis")
        return value
    if isinstance(value, (float, complex)):
        raise IncommensurableTau("tau must be given exactly over the generator basis, not as a float")
    try:
        return Frequency(basis, list(value))
    except (TypeError, ValidationError) as exc:
        raise IncommensurableTau(f"tau not expressible over the basis: {exc}") from None


def period_frequency(basis: GeneratorBasis, tau: Any) -> Frequency:
    """
    The exact frequency 2π/τ. τ must be a rational multiple r·g_j of a single
    generator, and the basis must declare a generator h with h·g_j = q·π for a
    small rational q, so that 2π/τ = (2/(r·q))·h.
    """
    tau_fr = _as_frequency(basis, tau)
    support = [i for i, q in enumerate(tau_fr.coords) if q != 0]
    if len(support) != 1 or tau_fr.value <= 0:
        raise IncommensurableTau("tau must be a positive rational multiple of one generator")
    j = support[0]
    r = tau_fr.coords[j]
    for h, w in enumerate(basis.values):
        q = _pi_multiple(w * basis.values[j])
        if q is not None:
            coords = [Fraction(0)] * basis.size
            coords[h] = Fraction(2) / (r * q)
            return Frequency(basis, coords)
    raise IncommensurableTau(f"2*pi/tau not expressible: no generator h with h*{basis.names[j]} a rational multiple of pi")


def _pi_multiple(x: float) -> Optional[Fraction]:
    q = Fraction(x / math.pi).limit_denominator(CFG.PI_MULTIPLE_DENOMINATOR)
    if q == 0 or not math.isclose(float(q) * math.pi, x, rel_tol=1e-12, abs_tol=0.0):
        return None
    return q


def is_periodic(f: TrigPolynomial, tau: Any) -> bool:
    step = period_frequency(f.basis, tau)
    h = next(i for i, q in enumerate(step.coords) if q != 0)
    for fr in f.frequencies:
        if any(q != 0 for i, q in enumerate(fr.coords) if i != h):
            return False
        ratio = fr.coords[h] / step.coords[h]
        if ratio.denominator != 1:
            return False
    return True


def carleman_transform(f: TrigPolynomial, lam: complex) -> np.ndarray:
    """
    f̂(λ) = Σ_j c_j/(λ − iλ_j). The same closed form serves both half-planes,
    so the only singularities on the axis are the poles iσ_b(f).
    """
    z = complex(lam)
    if z.real == 0.0:
        raise OnAxis(f"Carleman transform undefined on the imaginary axis (lambda={z})")
    out = np.zeros(f.dim, dtype=complex)
    for fr, c in f.terms:
        gap = z - 1j * fr.value
        if abs(gap) < CFG.AT_POLE_TOL:
            raise AtPole(f"lambda={z} is at the pole i*{fr.value}")
        out += c / gap
    return out


class SpectrumEstimate:
    def __init__(
        self,
        frequencies: List[float],
        amplitudes: List[float],
        detections: List[float],
        tail_bound: float,
        eps: float,
        threshold: float,
    ) -> None:
        self.frequencies = frequencies
        self.amplitudes = amplitudes
        self.detections = detections
        self.tail_bound = tail_bound
        self.eps = eps
        self.threshold = threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frequencies": list(self.frequencies),
            "amplitudes": list(self.amplitudes),
            "detections": list(self.detections),
            "tail_bound": self.tail_bound,
            "eps": self.eps,
            "threshold": self.threshold,
        }


def beurling_estimate(g: SampledSignal, grid: Sequence[float], eps: float, threshold: float) -> SpectrumEstimate:
    """
    Band-limited filter scan. Each grid point ξ uses the modulated Fejér
    kernel e^{iξs}·(ε/2π)·sinc²(εs/2), whose transform is the triangle
    max(0, 1 − |ω − ξ|/ε) supported on (ξ − ε, ξ + ε). Contiguous runs of grid
    points above threshold·‖g‖∞ are reported by their peak.
    """
    width = float(eps)
    if not math.isfinite(width) or width <= 0:
        raise ValidationError("eps must be positive")
    if g.span < 10.0 / width:
        raise SpanTooShort(f"signal span {g.span} < 10/eps = {10.0 / width}")
    points = sorted(float(x) for x in grid)
    sup = g.sup_norm()
    half = 0.4 * g.span
    tail = 4.0 / (math.pi * width * half)
    if sup == 0.0 or not points:
        return SpectrumEstimate([], [], [], tail, width, float(threshold))

    m = int(half / g.dt)
    s = g.dt * np.arange(-m, m + 1)
    kernel = (width / TWO_PI) * np.sinc(width * s / TWO_PI) ** 2 * g.dt
    level = float(threshold) * sup

    amps: List[float] = []
    for xi in points:
        demod = g.values * np.exp(-1j * xi * g.t)[:, None]
        filtered = np.stack(
            [fftconvolve(demod[:, j], kernel, mode="valid") for j in range(g.dim)],
            axis=1,
        )
        amps.append(float(np.max(np.linalg.norm(filtered, axis=1))))

    detections = [xi for xi, a in zip(points, amps) if a > level]
    peaks: List[float] = []
    peak_amps: List[float] = []
    run: List[int] = []
    for idx in range(len(points) + 1):
        hit = idx < len(points) and amps[idx] > level
        if hit:
            run.append(idx)
            continue
        if run:
            best = max(run, key=lambda i: amps[i])
            peaks.append(points[best])
            peak_amps.append(amps[best])
            run = []
    _log(f"beurling scan: {len(points)} grid points, {len(detections)} above level, {len(peaks)} peaks")
    return SpectrumEstimate(peaks, peak_amps, detections, tail, width, float(threshold))


def chordal_distance(a: float, b: float) -> float:
    return abs(2.0 * math.sin((float(a) - float(b)) / 2.0))


class Arc:
    """Closed counter-clockwise arc from angle `start` of angular `length`; length ≥ 2π is the whole circle."""

    def __init__(self, start: float, length: float) -> None:
        ln = float(length)
        if not math.isfinite(ln) or ln < 0:
            raise ValidationError("arc length must be a non-negative finite number")
        self.start = float(start) % TWO_PI
        self.length = min(ln, TWO_PI)

    @classmethod
    def around(cls, angle: float, half_width: float) -> "Arc":
        return cls(float(angle) - float(half_width), 2.0 * float(half_width))

    @property
    def full(self) -> bool:
        return self.length >= TWO_PI

    @property
    def end(self) -> float:
        return (self.start + self.length) % TWO_PI

    def contains(self, angle: float) -> bool:
        if self.full:
            return True
        return (float(angle) - self.start) % TWO_PI <= self.length

    def near_endpoint(self, angle: float, tol: float = CFG.ARC_TOL) -> bool:
        if self.full:
            return False
        return min(chordal_distance(angle, self.start), chordal_distance(angle, self.end)) <= tol

    def __repr__(self) -> str:
        return f"Arc(start={self.start!r}, length={self.length!r})"


def _arcs_overlap(a: Arc, b: Arc) -> bool:
    if a.full or b.full:
        return True
    return a.contains(b.start) or b.contains(a.start)


def circle_split(f: TrigPolynomial, arcs: Sequence[Arc]) -> Tuple[TrigPolynomial, TrigPolynomial]:
    """Split f by where e^{iλ} falls on the unit circle: inside the arcs or not."""
    arc_list = list(arcs)
    for i in range(len(arc_list)):
        for j in range(i + 1, len(arc_list)):
            if _arcs_overlap(arc_list[i], arc_list[j]):
                raise ValidationError(f"arcs {i} and {j} overlap")
    inside: List[Tuple[Frequency, np.ndarray]] = []
    outside: List[Tuple[Frequency, np.ndarray]] = []
    for fr, c in f.terms:
        angle = fr.value % TWO_PI
        for arc in arc_list:
            if arc.near_endpoint(angle):
                raise AmbiguousBoundary(f"e^(i*{fr.value}) lies on an endpoint of {arc!r}")
        if any(arc.contains(angle) for arc in arc_list):
            inside.append((fr, c))
        else:
            outside.append((fr, c))
    return TrigPolynomial(f.basis, f.dim, inside), TrigPolynomial(f.basis, f.dim, outside)
