"""JSON flow documents: parsing, validation and canonical serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from .algflow import FinDimFlow, ModuleFlow
from .gfp import MatrixGF, PrimeField
from .polymat import ModulePresentation, Poly, PolyMatrix
from .topflow import InvariantViolation, ProfiniteFlow, bernoulli, findim, periodic

KINDS = ("findim", "module", "profinite")
BUILTINS = ("bernoulli",)


class DocumentError(ValueError):
    """The input is not a well-formed flow document."""


@dataclass
class FlowDocument:
    field: int
    kind: str
    payload: dict[str, Any]
    label: str | None = None

    @property
    def prime_field(self) -> PrimeField:
        return PrimeField(self.field)


def _int_matrix(x, what: str, rows: int | None = None, cols: int | None = None) -> list[list[int]]:
    if not isinstance(x, list) or any(not isinstance(r, list) for r in x):
        raise DocumentError(f"{what} must be a list of rows")
    for r in x:
        if any(isinstance(v, bool) or not isinstance(v, int) for v in r):
            raise DocumentError(f"{what} entries must be integers")
    if rows is not None and len(x) != rows:
        raise DocumentError(f"{what} must have {rows} rows")
    widths = {len(r) for r in x}
    if len(widths) > 1:
        raise DocumentError(f"{what} rows have different lengths")
    if cols is not None and x and widths != {cols}:
        raise DocumentError(f"{what} must have {cols} columns")
    return [list(r) for r in x]


def _poly(x, what: str) -> list[int]:
    if not isinstance(x, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in x):
        raise DocumentError(f"{what} must be a list of integer coefficients")
    return list(x)


def parse(doc: Any) -> FlowDocument:
    """Validate a decoded JSON object and normalize residues and trailing zeros."""
    if not isinstance(doc, dict):
        raise DocumentError("a flow document is a JSON object")
    p = doc.get("field")
    if isinstance(p, bool) or not isinstance(p, int):
        raise DocumentError("'field' must be an integer prime")
    try:
        K = PrimeField(p)
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc
    kind = doc.get("kind")
    if kind not in KINDS:
        raise DocumentError(f"'kind' must be one of {KINDS}")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise DocumentError("'label' must be a string")
    if kind == "findim":
        a = _int_matrix(doc.get("action"), "action")
        if a and len(a) != len(a[0]):
            raise DocumentError("action matrix must be square")
        payload = {"action": [[v % p for v in r] for r in a]}
    elif kind == "module":
        g = doc.get("generators")
        if isinstance(g, bool) or not isinstance(g, int) or g < 0:
            raise DocumentError("'generators' must be a non-negative integer")
        rel = doc.get("relations", [[] for _ in range(g)])
        if not isinstance(rel, list) or len(rel) != g:
            raise DocumentError(f"'relations' must have {g} rows")
        widths = {len(r) if isinstance(r, list) else -1 for r in rel}
        if -1 in widths or len(widths) > 1:
            raise DocumentError("'relations' rows must be lists of equal length")
        rows = [[Poly(K, _poly(c, "polynomial")).coeffs for c in r] for r in rel]
        payload = {"generators": g, "relations": [[list(c) for c in r] for r in rows]}
    else:
        if "builtin" in doc:
            b = doc["builtin"]
            if not isinstance(b, dict) or b.get("name") not in BUILTINS:
                raise DocumentError(f"'builtin.name' must be one of {BUILTINS}")
            copies = b.get("copies", 1)
            if isinstance(copies, bool) or not isinstance(copies, int) or copies < 0:
                raise DocumentError("'builtin.copies' must be a non-negative integer")
            payload = {"builtin": {"name": b["name"], "copies": copies}}
        else:
            s = doc.get("window")
            if isinstance(s, bool) or not isinstance(s, int) or s < 0:
                raise DocumentError("'window' must be a non-negative integer")
            pre = [_level(x, p, "preperiod") for x in _list(doc.get("preperiod", []), "preperiod")]
            per = [_level(x, p, "period") for x in _list(doc.get("period"), "period")]
            if not per:
                raise DocumentError("'period' must be non-empty")
            payload = {"window": s, "preperiod": pre, "period": per}
    return FlowDocument(p, kind, payload, label)


def _list(x, what: str) -> list:
    if not isinstance(x, list):
        raise DocumentError(f"'{what}' must be a list")
    return x


def _level(x, p: int, what: str) -> dict[str, Any]:
    if not isinstance(x, dict):
        raise DocumentError(f"{what} entries are objects with dim, projection, action")
    d = x.get("dim")
    if isinstance(d, bool) or not isinstance(d, int) or d < 0:
        raise DocumentError(f"{what}: 'dim' must be a non-negative integer")
    proj = _int_matrix(x.get("projection"), f"{what} projection", rows=d)
    act = _int_matrix(x.get("action"), f"{what} action", rows=d)
    return {"dim": d, "projection": [[v % p for v in r] for r in proj], "action": [[v % p for v in r] for r in act]}


def serialize(doc: FlowDocument) -> dict[str, Any]:
    out: dict[str, Any] = {"field": doc.field, "kind": doc.kind, **doc.payload}
    if doc.label is not None:
        out["label"] = doc.label
    return out


def dumps(doc: FlowDocument) -> str:
    return json.dumps(serialize(doc), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> FlowDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    return parse(raw)


def _matrix(K: PrimeField, rows: list[list[int]], nrows: int) -> MatrixGF:
    arr = np.asarray(rows, dtype=np.int64)
    if arr.size == 0:
        arr = np.zeros((nrows, 0), dtype=np.int64)
    return MatrixGF(K, arr.reshape(nrows, -1) if nrows else np.zeros((0, 0), dtype=np.int64))


def algebraic_flow(doc: FlowDocument):
    """The discrete flow described by a findim or module document."""
    K = doc.prime_field
    if doc.kind == "findim":
        a = doc.payload["action"]
        return FinDimFlow(K, _matrix(K, a, len(a)))
    if doc.kind == "module":
        return ModuleFlow(module_presentation(doc))
    raise DocumentError("profinite documents do not describe a discrete flow")


def module_presentation(doc: FlowDocument) -> ModulePresentation:
    K = doc.prime_field
    if doc.kind != "module":
        raise DocumentError("expected a module document")
    g = doc.payload["generators"]
    rel = doc.payload["relations"]
    m = len(rel[0]) if rel else 0
    return ModulePresentation(K, g, PolyMatrix(K, g, m, [[Poly(K, c) for c in r] for r in rel]))


def profinite_flow(doc: FlowDocument) -> ProfiniteFlow:
    """A topological flow: the flow itself for profinite documents, the dual otherwise."""
    from .duality import dual_of_module

    K = doc.prime_field
    if doc.kind == "findim":
        # the dual of (K^d, A) is (K^d, A^T)
        a = algebraic_flow(doc).action
        return findim(K, a.T)
    if doc.kind == "module":
        return dual_of_module(module_presentation(doc)).flow
    pl = doc.payload
    if "builtin" in pl:
        return bernoulli(K, pl["builtin"]["copies"])

    def level(x):
        d = x["dim"]
        return d, _matrix(K, x["projection"], d), _matrix(K, x["action"], d)

    try:
        return periodic(K, pl["window"], [level(x) for x in pl["preperiod"]], [level(x) for x in pl["period"]])
    except (ValueError, InvariantViolation) as exc:
        raise DocumentError(f"inconsistent level data: {exc}") from exc
