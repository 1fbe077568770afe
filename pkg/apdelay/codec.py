# apdelay/codec.py
"""
Problem files, reports and CSV artifacts.

Problems and reports share one JSON-compatible schema (`schema_version: 1`).
Output is byte-deterministic: keys sorted, floats written with 17 significant
digits in lowercase e-notation, non-finite floats as the strings
"inf"/"-inf"/"nan".
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config as CFG
from .apfun import Frequency, GeneratorBasis, SampledSignal, TrigPolynomial, parse_rational
from .chroots import DelaySystem
from .config import AnalysisOptions
from .errors import DimMismatch, ParseError, ValidationError
from .massera import ForcedProblem


def format_float(x: float) -> str:
    v = float(x)
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v, ".16e")


def _emit(obj: Any, indent: int, out: List[str]) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj, key=str)
        for i, key in enumerate(keys):
            out.append(f"{pad}  {json.dumps(str(key), ensure_ascii=False)}: ")
            _emit(obj[key], indent + 1, out)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(f"{pad}}}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            parts: List[str] = []
            for v in obj:
                piece: List[str] = []
                _emit(v, 0, piece)
                parts.append("".join(piece))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(f"{pad}  ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(f"{pad}]")
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")


def emit(obj: Any) -> str:
    out: List[str] = []
    _emit(obj, 0, out)
    return "".join(out) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None


def _require(raw: Dict[str, Any], key: str, kind: Any, field: str) -> Any:
    if key not in raw:
        raise ParseError("missing field", field=f"{field}.{key}" if field else key)
    val = raw[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ParseError("expected a number", field=f"{field}.{key}" if field else key)
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ParseError("expected an integer", field=f"{field}.{key}" if field else key)
        return val
    if not isinstance(val, kind):
        raise ParseError(f"expected {kind.__name__}", field=f"{field}.{key}" if field else key)
    return val


def _real_array(raw: Any, field: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected numbers", field=field) from None
    return arr


def matrix_to_dict(M: np.ndarray) -> Dict[str, Any]:
    mat = np.asarray(M, dtype=complex)
    return {
        "re": [[float(v) for v in row] for row in mat.real],
        "im": [[float(v) for v in row] for row in mat.imag],
    }


def matrix_from_dict(raw: Any, dim: int, field: str) -> np.ndarray:
    if not isinstance(raw, dict):
        raise ParseError("expected {re, im}", field=field)
    re_part = _real_array(_require(raw, "re", list, field), f"{field}.re")
    im_part = _real_array(raw.get("im", np.zeros_like(re_part).tolist()), f"{field}.im")
    if re_part.shape != (dim, dim) or im_part.shape != (dim, dim):
        raise ValidationError(
            f"dim mismatch: matrix shape re{re_part.shape} im{im_part.shape}, expected ({dim}, {dim})",
            field=field,
        )
    return re_part + 1j * im_part


def basis_to_list(basis: GeneratorBasis) -> List[Dict[str, Any]]:
    return [{"name": n, "value": v} for n, v in zip(basis.names, basis.values)]


def basis_from_list(raw: Any) -> GeneratorBasis:
    if not isinstance(raw, list):
        raise ParseError("expected a list", field="generators")
    pairs: List[Tuple[str, float]] = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ParseError("expected {name, value}", field=f"generators[{i}]")
        name = _require(item, "name", str, f"generators[{i}]")
        value = _require(item, "value", float, f"generators[{i}]")
        pairs.append((name, value))
    try:
        return GeneratorBasis(pairs)
    except ValidationError as exc:
        raise ValidationError(str(exc), field="generators") from None


def poly_to_dict(f: TrigPolynomial) -> Dict[str, Any]:
    return {
        "dim": f.dim,
        "terms": [
            {
                "coords": fr.to_strings(),
                "re": [float(v) for v in np.real(c)],
                "im": [float(v) for v in np.imag(c)],
            }
            for fr, c in f.terms
        ],
    }


def frequency_from_coords(basis: GeneratorBasis, raw: Any, field: str) -> Frequency:
    if not isinstance(raw, list):
        raise ParseError("expected a list of rational strings", field=field)
    if len(raw) != basis.size:
        raise ValidationError(f"{len(raw)} coordinates for {basis.size} generators", field=field)
    for i, q in enumerate(raw):
        if not isinstance(q, str):
            raise ValidationError("frequency coordinates must be rational strings 'p/q'", field=f"{field}[{i}]")
        parse_rational(q)
    return Frequency(basis, raw)


def poly_from_dict(basis: GeneratorBasis, raw: Any, field: str, dim: Optional[int] = None) -> TrigPolynomial:
    if not isinstance(raw, dict):
        raise ParseError("expected an object", field=field)
    n = _require(raw, "dim", int, field)
    if n <= 0:
        raise ValidationError("dim must be positive", field=f"{field}.dim")
    if dim is not None and n != dim:
        raise ValidationError(f"dim mismatch: {field} dim {n} != system dim {dim}", field=field)
    terms_raw = _require(raw, "terms", list, field)
    seen = set()
    terms = []
    for i, item in enumerate(terms_raw):
        where = f"{field}.terms[{i}]"
        if not isinstance(item, dict):
            raise ParseError("expected {coords, re, im}", field=where)
        fr = frequency_from_coords(basis, _require(item, "coords", list, where), f"{where}.coords")
        if fr in seen:
            raise ValidationError("duplicate frequency", field=where)
        seen.add(fr)
        re_part = _real_array(_require(item, "re", list, where), f"{where}.re")
        im_part = _real_array(item.get("im", [0.0] * n), f"{where}.im")
        if re_part.shape != (n,) or im_part.shape != (n,):
            raise ValidationError(f"dim mismatch: coefficient length differs from dim {n}", field=where)
        terms.append((fr, re_part + 1j * im_part))
    return TrigPolynomial(basis, n, terms)


def system_to_dict(sys_: DelaySystem) -> Dict[str, Any]:
    return {
        "dim": sys_.dim,
        "A": matrix_to_dict(sys_.A),
        "terms": [{"eta": eta, "B": matrix_to_dict(B)} for eta, B in sys_.terms],
        "delta": sys_.delta,
    }


def system_from_dict(raw: Any) -> DelaySystem:
    if not isinstance(raw, dict):
        raise ParseError("expected an object", field="system")
    dim = _require(raw, "dim", int, "system")
    if dim <= 0:
        raise ValidationError("dim must be positive", field="system.dim")
    A = matrix_from_dict(_require(raw, "A", dict, "system"), dim, "system.A")
    terms = []
    for i, item in enumerate(raw.get("terms", [])):
        where = f"system.terms[{i}]"
        if not isinstance(item, dict):
            raise ParseError("expected {eta, B}", field=where)
        eta = _require(item, "eta", float, where)
        B = matrix_from_dict(_require(item, "B", dict, where), dim, f"{where}.B")
        terms.append((eta, B))
    delta = _require(raw, "delta", float, "system")
    try:
        return DelaySystem(A, terms, delta)
    except ValidationError as exc:
        raise ValidationError(str(exc), field="system") from None


def parse_problem(text: str) -> Tuple[ForcedProblem, AnalysisOptions]:
    raw = loads(text)
    if not isinstance(raw, dict):
        raise ParseError("problem must be an object")
    version = _require(raw, "schema_version", int, "")
    if version != CFG.SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version}", field="schema_version")
    basis = basis_from_list(_require(raw, "generators", list, ""))
    sys_ = system_from_dict(_require(raw, "system", dict, ""))
    f = poly_from_dict(basis, _require(raw, "forcing", dict, ""), "forcing", dim=sys_.dim)
    options_raw = raw.get("options") or {}
    if not isinstance(options_raw, dict):
        raise ParseError("expected an object", field="options")
    options = AnalysisOptions.from_dict(options_raw)
    for i, coords in enumerate(options.lambda1):
        frequency_from_coords(basis, coords, f"options.lambda1[{i}]")
    if options.tau is not None:
        frequency_from_coords(basis, options.tau, "options.tau")
    try:
        return ForcedProblem(sys_, f), options
    except DimMismatch as exc:
        raise ValidationError(str(exc), field="forcing") from None


def problem_to_dict(p: ForcedProblem, options: Optional[AnalysisOptions] = None) -> Dict[str, Any]:
    return {
        "schema_version": CFG.SCHEMA_VERSION,
        "generators": basis_to_list(p.basis),
        "system": system_to_dict(p.sys),
        "forcing": poly_to_dict(p.f),
        "options": (options or AnalysisOptions()).to_dict(),
    }


def serialize_problem(p: ForcedProblem, options: Optional[AnalysisOptions] = None) -> str:
    return emit(problem_to_dict(p, options))


def _csv_cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v)).strip('"')
    return str(v)


def write_csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def read_signal_csv(text: str) -> SampledSignal:
    """Columns t, re_1, im_1, …, re_n, im_n; the time column must be uniform."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError("empty signal file", line=1)
    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[0] != "t" or len(header) % 2 != 1:
        raise ParseError("header must be t, re_1, im_1, ..., re_n, im_n", line=1)
    n = (len(header) - 1) // 2
    expected = ["t"] + [x for j in range(1, n + 1) for x in (f"re_{j}", f"im_{j}")]
    if header != expected:
        raise ParseError(f"header must be {','.join(expected)}", line=1)
    data = np.zeros((len(rows) - 1, len(header)), dtype=float)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", line=i + 2)
        try:
            data[i] = [float(cell) for cell in row]
        except ValueError:
            raise ParseError("non-numeric cell", line=i + 2) from None
    values = data[:, 1::2] + 1j * data[:, 2::2]
    return SampledSignal(data[:, 0], values)


def signal_csv(g: SampledSignal) -> List[List[Any]]:
    header: List[Any] = ["t"]
    for j in range(1, g.dim + 1):
        header += [f"re_{j}", f"im_{j}"]
    rows: List[List[Any]] = [header]
    for t, vec in zip(g.t, g.values):
        row: List[Any] = [float(t)]
        for c in vec:
            row += [float(c.real), float(c.imag)]
        rows.append(row)
    return rows
