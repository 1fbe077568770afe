# apdelay/chroots.py
"""
Characteristic roots of ẋ(t) = A x(t) + Σ_k B_k x(t+η_k).

Sign convention: Δ(z) = zI − A − Σ_k B_k e^{zη_k}. Substituting u = e^{iλt}c
into Σ_k B_k u(t+η_k) gives the multiplier Σ_k B_k e^{iλη_k}, so
Δ(iλ)a(λ,u) = a(λ,f) holds with this sign; a delay η = −1 yields the familiar
retarded term e^{−z}.
"""
from __future__ import annotations

import math
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config as CFG
from . import metrics as METRICS
from .apfun import TrigPolynomial
from .errors import BoundaryRoot, DimMismatch, EigenvalueOnContour, NoConvergence, SingularAtPoint, ValidationError

SPLIT_RATIOS = (0.5 + 0.0127, 0.5 - 0.0311, 0.5 + 0.0583, 0.5 - 0.0911)


def _log(msg: str) -> None:
    if CFG.verbose():
        print(f"[chroots] {msg}", file=sys.stderr, flush=True)


def _square(raw: Any, dim: int, what: str) -> np.ndarray:
    mat = np.asarray(raw, dtype=complex)
    if mat.ndim == 0 and dim == 1:
        mat = mat.reshape(1, 1)
    if mat.shape != (dim, dim):
        raise ValidationError(f"dim mismatch: {what} has shape {mat.shape}, expected ({dim}, {dim})")
    if not np.all(np.isfinite(mat)):
        raise ValidationError(f"{what} has non-finite entries")
    return mat


class DelaySystem:
    """A, point-mass terms (η_k, B_k) and the strip half-width δ."""

    def __init__(self, A: Any, terms: Sequence[Tuple[float, Any]] = (), delta: float = 1.0) -> None:
        a = np.asarray(A, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValidationError(f"A must be a non-empty square matrix, got shape {a.shape}")
        self.dim = int(a.shape[0])
        self.A = _square(a, self.dim, "A")
        d = float(delta)
        if not math.isfinite(d) or d <= 0:
            raise ValidationError("delta must be positive")
        self.delta = d
        seen: List[float] = []
        kept: List[Tuple[float, np.ndarray]] = []
        for idx, (eta, B) in enumerate(terms):
            e = float(eta)
            if not math.isfinite(e):
                raise ValidationError(f"terms[{idx}]: eta must be finite")
            if e in seen:
                raise ValidationError(f"duplicate eta {e!r}")
            mat = _square(B, self.dim, f"terms[{idx}].B")
            if not np.any(mat):
                raise ValidationError(f"terms[{idx}]: B must be nonzero")
            mat.setflags(write=False)
            seen.append(e)
            kept.append((e, mat))
        self.A.setflags(write=False)
        self.terms: Tuple[Tuple[float, np.ndarray], ...] = tuple(kept)

    @property
    def etas(self) -> List[float]:
        return [e for e, _ in self.terms]

    def is_real(self) -> bool:
        return bool(np.all(self.A.imag == 0) and all(np.all(B.imag == 0) for _, B in self.terms))

    def has_advance(self) -> bool:
        return any(e > 0 for e, _ in self.terms)

    def __repr__(self) -> str:
        return f"DelaySystem(dim={self.dim}, etas={self.etas}, delta={self.delta})"


class Region:
    def __init__(self, re_min: float, re_max: float, im_min: float, im_max: float) -> None:
        vals = [float(re_min), float(re_max), float(im_min), float(im_max)]
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("region bounds must be finite")
        if not (vals[0] < vals[1] and vals[2] < vals[3]):
            raise ValidationError("region needs re_min < re_max and im_min < im_max")
        self.re_min, self.re_max, self.im_min, self.im_max = vals

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def size(self) -> float:
        return max(self.width, self.height)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def corners(self) -> List[complex]:
        return [
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        ]

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (
            self.re_min - slack <= z.real <= self.re_max + slack
            and self.im_min - slack <= z.imag <= self.im_max + slack
        )

    def in_strip(self, delta: float) -> bool:
        return -delta < self.re_min and self.re_max < delta

    def grown(self, amount: float) -> "Region":
        return Region(self.re_min - amount, self.re_max + amount, self.im_min - amount, self.im_max + amount)

    def split(self, ratio: float = 0.5) -> Tuple["Region", "Region"]:
        if self.width >= self.height:
            cut = self.re_min + ratio * self.width
            return (
                Region(self.re_min, cut, self.im_min, self.im_max),
                Region(cut, self.re_max, self.im_min, self.im_max),
            )
        cut = self.im_min + ratio * self.height
        return (
            Region(self.re_min, self.re_max, self.im_min, cut),
            Region(self.re_min, self.re_max, cut, self.im_max),
        )

    def to_list(self) -> List[float]:
        return [self.re_min, self.re_max, self.im_min, self.im_max]

    def __repr__(self) -> str:
        return f"Region([{self.re_min}, {self.re_max}] x [{self.im_min}, {self.im_max}])"


class Root:
    __slots__ = ("z", "multiplicity", "det_residual")

    def __init__(self, z: complex, multiplicity: int, det_residual: float) -> None:
        self.z = complex(z)
        self.multiplicity = int(multiplicity)
        self.det_residual = float(det_residual)

    def __repr__(self) -> str:
        return f"Root({self.z!r}, m={self.multiplicity}, res={self.det_residual:.2e})"


class RootSet:
    def __init__(self, roots: Sequence[Root], region: Region, total_count: int, boundary_scale: float) -> None:
        self.roots: Tuple[Root, ...] = tuple(sorted(roots, key=lambda r: (r.z.real, r.z.imag)))
        self.region = region
        self.total_count = int(total_count)
        self.boundary_scale = float(boundary_scale)

    def __len__(self) -> int:
        return len(self.roots)

    def points(self) -> List[complex]:
        return [r.z for r in self.roots]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "region": self.region.to_list(),
            "total_count": self.total_count,
            "boundary_scale": self.boundary_scale,
            "roots": [
                {"re": r.z.real, "im": r.z.imag, "multiplicity": r.multiplicity, "residual": r.det_residual}
                for r in self.roots
            ],
        }


def char_matrix(sys_: DelaySystem, z: complex) -> np.ndarray:
    return _char_matrices(sys_, np.array([complex(z)]))[0]


def _char_matrices(sys_: DelaySystem, zs: np.ndarray) -> np.ndarray:
    eye = np.eye(sys_.dim, dtype=complex)
    out = zs[:, None, None] * eye[None, :, :] - sys_.A[None, :, :]
    for eta, B in sys_.terms:
        out = out - np.exp(zs * eta)[:, None, None] * B[None, :, :]
    return out


def _char_derivatives(sys_: DelaySystem, zs: np.ndarray) -> np.ndarray:
    eye = np.eye(sys_.dim, dtype=complex)
    out = np.broadcast_to(eye, (zs.shape[0], sys_.dim, sys_.dim)).copy()
    for eta, B in sys_.terms:
        out = out - (eta * np.exp(zs * eta))[:, None, None] * B[None, :, :]
    return out


def _conditions(sys_: DelaySystem, zs: np.ndarray, mats: np.ndarray) -> np.ndarray:
    # Scaled by the size of the terms making up Δ(z), so a 1x1 Δ near zero still reads as singular.
    sv = np.linalg.svd(mats, compute_uv=False)
    scale = np.abs(zs) + float(np.linalg.norm(sys_.A, 2))
    for eta, B in sys_.terms:
        scale = scale + float(np.linalg.norm(B, 2)) * np.exp(zs.real * eta)
    scale = np.maximum(scale, sv[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(sv[:, -1] > 0, scale / sv[:, -1], np.inf)


def condition_number(sys_: DelaySystem, z: complex) -> float:
    zs = np.array([complex(z)])
    return float(_conditions(sys_, zs, _char_matrices(sys_, zs))[0])


def _logderivs(sys_: DelaySystem, zs: np.ndarray) -> np.ndarray:
    mats = _char_matrices(sys_, zs)
    conds = _conditions(sys_, zs, mats)
    bad = ~np.isfinite(conds) | (conds > CFG.SINGULAR_CONDITION)
    if np.any(bad):
        z_bad = complex(zs[int(np.argmax(bad))])
        raise SingularAtPoint(f"characteristic matrix numerically singular at z={z_bad}", z=z_bad)
    derivs = _char_derivatives(sys_, zs)
    sol = np.linalg.solve(mats, derivs)
    METRICS.inc_contour_evaluations(zs.shape[0])
    return np.trace(sol, axis1=1, axis2=2)


def char_det(sys_: DelaySystem, z: complex) -> Tuple[complex, complex]:
    """det Δ(z) and Jacobi's log-derivative tr(Δ(z)⁻¹Δ′(z))."""
    zs = np.array([complex(z)])
    det = complex(np.linalg.det(_char_matrices(sys_, zs)[0]))
    return det, complex(_logderivs(sys_, zs)[0])


def growth_norm(sys_: DelaySystem, delta: float) -> float:
    d = float(delta)
    if not math.isfinite(d) or d <= 0:
        raise ValidationError("delta must be positive")
    return math.fsum(float(np.linalg.norm(B, 2)) * math.exp(d * abs(eta)) for eta, B in sys_.terms)


def apply_delay_operator(sys_: DelaySystem, u: TrigPolynomial) -> TrigPolynomial:
    """ℬu = Σ_k B_k u(·+η_k) as a trigonometric polynomial."""
    if u.dim != sys_.dim:
        raise DimMismatch(f"polynomial dim {u.dim} != system dim {sys_.dim}")
    terms = []
    for fr, c in u.terms:
        mult = np.zeros((sys_.dim, sys_.dim), dtype=complex)
        for eta, B in sys_.terms:
            mult = mult + np.exp(1j * fr.value * eta) * B
        terms.append((fr, mult @ c))
    return TrigPolynomial(u.basis, u.dim, terms)


def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _segment_rule(sys_: DelaySystem, a: complex, b: complex, nodes: int) -> complex:
    x, w = _gauss_legendre(nodes)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    zs = mid + half * x
    return complex(np.sum(w * _logderivs(sys_, zs)) * half)


def _segment_integral(sys_: DelaySystem, a: complex, b: complex, nodes: int, whole: Optional[complex] = None, depth: int = 0) -> complex:
    if whole is None:
        whole = _segment_rule(sys_, a, b, nodes)
    m = 0.5 * (a + b)
    left = _segment_rule(sys_, a, m, nodes)
    right = _segment_rule(sys_, m, b, nodes)
    if abs(left + right - whole) <= CFG.GL_PANEL_TOL:
        return left + right
    if depth >= CFG.GL_MAX_DEPTH:
        raise BoundaryRoot(f"contour quadrature did not settle near segment [{a}, {b}]")
    return _segment_integral(sys_, a, m, nodes, left, depth + 1) + _segment_integral(sys_, m, b, nodes, right, depth + 1)


def _winding(sys_: DelaySystem, region: Region, nodes: int) -> complex:
    c = region.corners()
    total = 0j
    for a, b in zip(c, c[1:] + c[:1]):
        total += _segment_integral(sys_, a, b, nodes)
    return total / (2j * math.pi)


def count_roots(sys_: DelaySystem, region: Region) -> int:
    """
    Argument-principle count (1/2πi)∮ tr(Δ⁻¹Δ′) dz with adaptive composite
    Gauss–Legendre. Accepted once two consecutive node counts give values
    within 0.1 of the same integer.
    """
    nodes = CFG.GL_NODES_START
    previous: Optional[int] = None
    last = 0j
    try:
        while nodes <= CFG.GL_NODES_MAX:
            last = _winding(sys_, region, nodes)
            nearest = int(round(last.real))
            if abs(last - nearest) < CFG.INTEGRALITY_TOL:
                if previous == nearest:
                    return nearest
                previous = nearest
            else:
                previous = None
            nodes *= 2
    except SingularAtPoint as exc:
        raise BoundaryRoot(f"root on or near the boundary of {region!r} ({exc})") from None
    raise BoundaryRoot(f"count over {region!r} not integral (last value {last})")


def _boundary_scale(sys_: DelaySystem, region: Region, per_edge: int = 64) -> float:
    c = region.corners()
    pts = []
    for a, b in zip(c, c[1:] + c[:1]):
        pts.append(a + (b - a) * np.linspace(0.0, 1.0, per_edge, endpoint=False))
    zs = np.concatenate(pts)
    dets = np.abs(np.linalg.det(_char_matrices(sys_, zs)))
    return float(np.max(dets))


def _det_abs(sys_: DelaySystem, z: complex) -> float:
    return float(abs(np.linalg.det(char_matrix(sys_, z))))


def _newton(sys_: DelaySystem, z0: complex, multiplicity: int, tol: float, threshold: float) -> Optional[complex]:
    z = complex(z0)
    for _ in range(CFG.NEWTON_MAX_ITER):
        try:
            ld = complex(_logderivs(sys_, np.array([z]))[0])
        except SingularAtPoint:
            return z if _det_abs(sys_, z) <= threshold else None
        if ld == 0:
            return None
        step = multiplicity / ld
        z = z - step
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return None
        if abs(step) <= tol * max(1.0, abs(z)) and _det_abs(sys_, z) <= threshold:
            return z
    return None


class _Search:
    def __init__(self, sys_: DelaySystem, tol: float, threshold: float, min_size: float) -> None:
        self.sys = sys_
        self.tol = tol
        self.threshold = threshold
        self.min_size = min_size
        self.found: List[Root] = []

    def split_counts(self, region: Region, expected: int) -> List[Tuple[Region, int]]:
        for ratio in SPLIT_RATIOS:
            halves = region.split(ratio)
            try:
                counts = [count_roots(self.sys, h) for h in halves]
            except BoundaryRoot:
                METRICS.inc_root_search_retry()
                _log(f"split of {region!r} at ratio {ratio} hit a root, retrying")
                continue
            if sum(counts) != expected:
                METRICS.inc_root_search_retry()
                _log(f"split of {region!r} gave {counts}, expected total {expected}, retrying")
                continue
            return list(zip(halves, counts))
        raise BoundaryRoot(f"could not split {region!r} consistently")

    def settle(self, region: Region, count: int) -> bool:
        z = _newton(self.sys, region.center, count, self.tol, self.threshold)
        slack = self.tol * max(1.0, abs(region.center)) + 1e-12
        if z is not None and region.contains(z, slack):
            self.found.append(Root(z, count, _det_abs(self.sys, z)))
            return True
        return False

    def isolate(self, region: Region, count: int) -> None:
        if count <= 0:
            return
        small = region.size <= self.min_size
        if count == 1 or small:
            if self.settle(region, count):
                return
            if small:
                raise NoConvergence(f"Newton failed for {count} root(s) in {region!r}")
        try:
            parts = self.split_counts(region, count)
        except BoundaryRoot:
            # A non-semisimple multiple root makes Δ singular within about
            # sqrt(1/SINGULAR_CONDITION) of itself, so no cut separates it.
            if count > 1 and self.settle(region, count):
                _log(f"kept {count} roots in {region!r} as one cluster")
                return
            raise
        for child, child_count in parts:
            self.isolate(child, child_count)


def find_roots(sys_: DelaySystem, region: Region, tol: float = 1e-10) -> RootSet:
    """
    Subdivide until each rectangle holds at most one root (or is tiny), then
    Newton with z ← z − m/logderiv. A boundary root on the requested region
    triggers up to three outward jitters of 1e-4 × region size.
    """
    if not (tol > 0):
        raise ValidationError("tol must be positive")
    last_exc: Optional[BaseException] = None
    for attempt in range(CFG.JITTER_ATTEMPTS + 1):
        target = region if attempt == 0 else region.grown(attempt * CFG.JITTER_FRACTION * region.size)
        try:
            total = count_roots(sys_, target)
            scale = _boundary_scale(sys_, target)
            threshold = CFG.RESIDUAL_SCALE * max(scale, 1e-300)
            search = _Search(sys_, float(tol), threshold, min_size=max(1e-9, 1e-7 * target.size))
            search.isolate(target, total)
        except BoundaryRoot as exc:
            last_exc = exc
            METRICS.inc_root_search_retry()
            _log(f"boundary root on attempt {attempt} for {target!r}: {exc}")
            continue
        found = sum(r.multiplicity for r in search.found)
        if found != total:
            raise NoConvergence(f"isolated {found} roots but counted {total} in {target!r}")
        METRICS.inc_roots_found(total)
        return RootSet(search.found, target, total, scale)
    raise BoundaryRoot(f"root search failed after {CFG.JITTER_ATTEMPTS} jitters: {last_exc}")


class AxisScan:
    def __init__(
        self,
        window: float,
        axis_tol: float,
        points: List[float],
        near_axis: List[complex],
        roots: List[Root],
    ) -> None:
        self.window = window
        self.axis_tol = axis_tol
        self.points = points
        self.near_axis = near_axis
        self.roots = roots

    @property
    def warnings(self) -> List[str]:
        return [
            f"NearAxisAmbiguity: root {z.real:.3e}{z.imag:+.17g}i has |Re z| in (axis_tol/2, axis_tol]"
            for z in self.near_axis
        ]


def _panel_edges(xi_max: float) -> List[float]:
    count = max(1, int(math.ceil(2.0 * xi_max / CFG.PANEL_HEIGHT)))
    if count % 2 == 0:
        count += 1
    return list(np.linspace(-xi_max, xi_max, count + 1))


def scan_axis(sys_: DelaySystem, xi_max: float, axis_tol: float = CFG.AXIS_TOL, tol: float = 1e-12) -> AxisScan:
    """
    Roots in the strip [−axis_tol, axis_tol] × [−Ξ, Ξ], scanned panel by panel.
    Results are window-limited: nothing is claimed outside [−Ξ, Ξ].
    """
    xi = float(xi_max)
    atol = float(axis_tol)
    if not (xi > 0):
        raise ValidationError("xi_max must be positive")
    if not (0 < atol < sys_.delta):
        raise ValidationError("axis_tol must satisfy 0 < axis_tol < delta")
    edges = _panel_edges(xi)
    roots: List[Root] = []
    for lo, hi in zip(edges, edges[1:]):
        panel = Region(-atol, atol, float(lo), float(hi))
        found = find_roots(sys_, panel, tol)
        for r in found.roots:
            # Jittered panels overlap slightly; keep each root once.
            if any(abs(r.z - q.z) <= 1e3 * tol * max(1.0, abs(r.z)) for q in roots):
                continue
            roots.append(r)
    roots.sort(key=lambda r: (r.z.imag, r.z.real))
    points = [r.z.imag for r in roots if abs(r.z.real) <= 0.5 * atol and -xi <= r.z.imag <= xi]
    near = [r.z for r in roots if 0.5 * atol < abs(r.z.real) <= atol]
    for z in near:
        _log(f"near-axis root {z} (axis_tol={atol})")
    return AxisScan(xi, atol, sorted(points), near, roots)


def sigma_i(sys_: DelaySystem, xi_max: float, axis_tol: float = CFG.AXIS_TOL) -> List[float]:
    """Σ_i ∩ [−Ξ, Ξ]: imaginary parts of characteristic roots on the axis."""
    return scan_axis(sys_, xi_max, axis_tol).points


def axis_modes(sys_: DelaySystem, xi_max: float, axis_tol: float = CFG.AXIS_TOL) -> List[Tuple[float, np.ndarray]]:
    """For each ξ ∈ Σ_i, an orthonormal basis (columns) of ker Δ(iξ)."""
    modes: List[Tuple[float, np.ndarray]] = []
    for xi in sigma_i(sys_, xi_max, axis_tol):
        _, s, vh = np.linalg.svd(char_matrix(sys_, 1j * xi))
        cutoff = 1e-8 * max(1.0, float(s[0]))
        null = vh[s <= cutoff].conj().T
        if null.shape[1] == 0:
            null = vh[-1:].conj().T
        modes.append((xi, null))
    return modes


def riesz_projection(M: Any, center: complex, radius: float) -> np.ndarray:
    """
    P = (1/2πi)∮ (λI − M)⁻¹ dλ over |λ − center| = radius by the trapezoid
    rule, doubling the node count until ‖P² − P‖ < 1e-10.
    """
    mat = np.asarray(M, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError("M must be square")
    r = float(radius)
    if not (r > 0):
        raise ValidationError("radius must be positive")
    n = mat.shape[0]
    eye = np.eye(n, dtype=complex)
    c = complex(center)
    nodes = CFG.RIESZ_NODES
    while nodes <= CFG.RIESZ_MAX_NODES:
        theta = 2.0 * math.pi * np.arange(nodes) / nodes
        lam = c + r * np.exp(1j * theta)
        shifted = lam[:, None, None] * eye[None, :, :] - mat[None, :, :]
        smallest = np.linalg.svd(shifted, compute_uv=False)[:, -1]
        if float(np.min(smallest)) < CFG.RIESZ_CONTOUR_GAP:
            raise EigenvalueOnContour(f"eigenvalue within {CFG.RIESZ_CONTOUR_GAP} of the circle |z-{c}|={r}")
        resolvents = np.linalg.inv(shifted)
        weights = (r * np.exp(1j * theta)) / nodes
        P = np.tensordot(weights, resolvents, axes=(0, 0))
        if float(np.linalg.norm(P @ P - P, 2)) < CFG.RIESZ_IDEMPOTENCE_TOL:
            METRICS.observe_riesz_nodes(nodes)
            return P
        _log(f"riesz projection not idempotent with {nodes} nodes, doubling")
        nodes *= 2
    raise EigenvalueOnContour(f"projection not idempotent after {CFG.RIESZ_MAX_NODES} nodes")


def rootset_csv(roots: RootSet) -> List[List[Any]]:
    rows: List[List[Any]] = [["re", "im", "multiplicity", "residual"]]
    for r in roots.roots:
        rows.append([r.z.real, r.z.imag, r.multiplicity, r.det_residual])
    return rows
