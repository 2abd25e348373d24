"""Text and JSON formats for matrices, settings, and solve results."""
from __future__ import annotations

import hashlib
import json
import math
import re
from decimal import ROUND_DOWN, Decimal
from importlib import resources

import numpy as np

from .lp import CAPPED, DEGENERATE, OPTIMAL, BellWitness, LhvModel, SolveResult
from .predictions import EXPERIMENTAL_RANGE_TOL, PredictionMatrix
from .strategies import StrategyPair, format_signs, parse_signs

FORMAT_VERSION = 1
FIXTURES = ("weinfurter-michler", "long-distance")
REPRESENTATIONS = ("angles-rad", "angles-deg", "vectors")

_TOKEN = re.compile(r"[^\s,]+")


class ParseError(ValueError):
    """Malformed input; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


def _number(token: str) -> float:
    return float(token.replace("−", "-"))


def _fields(raw: str, lineno: int):
    """(column, token) pairs of one data line; comma or whitespace separated."""
    line = raw.split("#", 1)[0]
    if "," not in line:
        return [(m.start() + 1, m.group()) for m in _TOKEN.finditer(line)]
    out, pos = [], 0
    for part in line.split(","):
        stripped = part.strip()
        col = pos + (len(part) - len(part.lstrip())) + 1
        if not stripped:
            raise ParseError("empty field", lineno, col)
        if _TOKEN.fullmatch(stripped) is None:
            raise ParseError(f"malformed field {stripped!r}", lineno, col)
        out.append((col, stripped))
        pos += len(part) + 1
    return out


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        if raw.split("#", 1)[0].strip():
            yield lineno, raw


def parse_matrix(text: str) -> PredictionMatrix:
    """Parse a rectangular table of correlation values (experimental origin)."""
    rows, width = [], None
    for lineno, raw in _data_lines(text):
        row = []
        for col, tok in _fields(raw, lineno):
            try:
                x = _number(tok)
            except ValueError:
                raise ParseError(f"not a number: {tok!r}", lineno, col) from None
            if not math.isfinite(x):
                raise ParseError(f"non-finite value {tok!r}", lineno, col)
            if abs(x) > 1 + EXPERIMENTAL_RANGE_TOL:
                raise ParseError(f"value {tok} outside [-1, 1]", lineno, col)
            row.append(x)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"row has {len(row)} entries, expected {width}", lineno, 1)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows")
    return PredictionMatrix(np.array(rows), "experimental")


def parse_settings(text: str) -> tuple[str, np.ndarray]:
    """Parse a settings file; returns ``(side, values)``.

    The first data line is a header ``<angles-rad|angles-deg|vectors> <A|B>``.
    Angles are returned in radians, vectors as an ``(N, 3)`` array.
    """
    lines = _data_lines(text)
    try:
        lineno, raw = next(lines)
    except StopIteration:
        raise ParseError("empty settings file") from None
    header = _fields(raw, lineno)
    if len(header) != 2 or header[0][1] not in REPRESENTATIONS or header[1][1].upper() not in ("A", "B"):
        raise ParseError(f"expected header '<{'|'.join(REPRESENTATIONS)}> <A|B>', got {raw.strip()!r}",
                         lineno, 1)
    rep, side = header[0][1], header[1][1].upper()
    width = 3 if rep == "vectors" else 1
    values = []
    for lineno, raw in lines:
        fields = _fields(raw, lineno)
        if len(fields) != width:
            raise ParseError(f"{rep} lines need {width} value(s), got {len(fields)}", lineno, 1)
        row = []
        for col, tok in fields:
            try:
                x = _number(tok)
            except ValueError:
                raise ParseError(f"not a number: {tok!r}", lineno, col) from None
            if not math.isfinite(x):
                raise ParseError(f"non-finite value {tok!r}", lineno, col)
            row.append(x)
        values.append(row)
    if not values:
        raise ParseError("settings file lists no settings")
    arr = np.array(values)
    if rep == "vectors":
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1) > 1e-6):
            raise ParseError(f"vector {int(np.argmax(np.abs(norms - 1))) + 1} is not a unit vector")
        return side, arr / norms[:, None]
    arr = arr[:, 0]
    return side, np.radians(arr) if rep == "angles-deg" else arr


def load_fixture(name: str) -> PredictionMatrix:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files("bellvis").joinpath("data", f"{name}.txt").read_text()
    return parse_matrix(text)


def bundled_fixtures() -> dict[str, PredictionMatrix]:
    return {name: load_fixture(name) for name in FIXTURES}


def matrix_digest(q: np.ndarray) -> str:
    q = np.ascontiguousarray(q, dtype="<f8")
    return hashlib.sha256(f"{q.shape[0]}x{q.shape[1]}:".encode() + q.tobytes()).hexdigest()


def truncate(x: float, places: int = 6) -> str:
    return str(Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_DOWN))


def to_document(result: SolveResult) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "critical_v": None if math.isinf(result.critical_v) else result.critical_v,
        "status": result.status,
        "v_cap": result.v_cap,
        "input": {
            "rows": result.q.shape[0],
            "cols": result.q.shape[1],
            "sha256": matrix_digest(result.q),
            "matrix": result.q.tolist(),
        },
        "model": None,
        "witness": None,
        "diagnostics": result.diagnostics,
    }
    if result.model is not None:
        doc["model"] = {
            "achieved_v": result.model.achieved_v,
            "support": [{"a": format_signs(p.a), "b": format_signs(p.b), "p": prob}
                        for p, prob in result.model.support],
        }
    if result.witness is not None:
        w = result.witness
        doc["witness"] = {"coefficients": w.coefficients.tolist(),
                          "lhv_bound": w.lhv_bound, "quantum_value": w.quantum_value}
    return doc


def _need(doc: dict, key: str, where: str = "document"):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"{where} is missing field {key!r}")
    return doc[key]


def from_document(doc: dict) -> SolveResult:
    version = _need(doc, "format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}")
    status = _need(doc, "status")
    if status not in (OPTIMAL, CAPPED, DEGENERATE):
        raise ParseError(f"unknown status {status!r}")
    inp = _need(doc, "input")
    q = np.array(_need(inp, "matrix", "input"), dtype=float)
    if q.ndim != 2 or q.shape != (_need(inp, "rows", "input"), _need(inp, "cols", "input")):
        raise ParseError("input matrix does not match declared dimensions")
    v = _need(doc, "critical_v")
    model = witness = None
    m = _need(doc, "model")
    if m is not None:
        support = [(StrategyPair(parse_signs(_need(e, "a", "support entry")),
                                 parse_signs(_need(e, "b", "support entry"))),
                     float(_need(e, "p", "support entry")))
                   for e in _need(m, "support", "model")]
        model = LhvModel(support, float(_need(m, "achieved_v", "model")))
    w = _need(doc, "witness")
    if w is not None:
        witness = BellWitness(np.array(_need(w, "coefficients", "witness"), dtype=float),
                              float(_need(w, "lhv_bound", "witness")),
                              float(_need(w, "quantum_value", "witness")))
    return SolveResult(
        critical_v=float("inf") if v is None else float(v),
        status=status,
        q=q,
        model=model,
        witness=witness,
        diagnostics=dict(doc.get("diagnostics") or {}),
        v_cap=float(doc.get("v_cap", 4.0)),
    )


def verdict(result: SolveResult) -> str:
    if result.status == DEGENERATE:
        return "zero correlation matrix: every visibility is LHV-describable"
    if result.status == CAPPED:
        return f"LHV-describable as given (V* reaches the cap {result.v_cap:g})"
    if result.critical_v >= 1:
        return "LHV-describable as given"
    return (f"the data cannot be reproduced by any LHV model; "
            f"reducible by factor {result.critical_v:.3f} to admit one")


def render_text(result: SolveResult) -> str:
    n, m = result.q.shape
    v = "unbounded" if math.isinf(result.critical_v) else truncate(result.critical_v)
    lines = [
        f"critical visibility: {v}",
        f"status: {result.status}",
        f"matrix: {n} x {m}",
        f"verdict: {verdict(result)}",
    ]
    if result.model is not None:
        lines.append(f"model support: {len(result.model.support)} strategy pairs")
    if result.witness is not None:
        lines.append(f"bell witness: lhv bound {result.witness.lhv_bound:.9f}, "
                     f"quantum value {result.witness.quantum_value:.9f}")
    d = result.diagnostics
    if d:
        lines.append("diagnostics: " + ", ".join(
            f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items()))
    return "\n".join(lines) + "\n"


def write_result(result: SolveResult, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(to_document(result), indent=2) + "\n").encode()
    if fmt == "text":
        return render_text(result).encode()
    raise ValueError(f"unknown format {fmt!r}")


def read_result(data) -> SolveResult:
    if isinstance(data, bytes):
        data = data.decode()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return from_document(doc)
