"""Polynomials over GF(p), matrices over GF(p)[t] and finitely presented modules.

A module ``W = K[t]^g / R`` is given by a g x m relation matrix whose columns span
``R``; ``t`` acts as the flow endomorphism.  Hermite and Smith normal forms are
computed by Euclidean column/row pivoting with all transforms accumulated.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Sequence

from .gfp import DimensionError, PrimeField


class Poly:
    """Polynomial with ascending coefficients; the zero polynomial has no coefficients."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: PrimeField, coeffs: Sequence[int] = ()):
        p = field.p
        cs = [int(c) % p for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.field = field
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, field: PrimeField, c: int) -> "Poly":
        return cls(field, (c,))

    @classmethod
    def zero(cls, field: PrimeField) -> "Poly":
        return cls(field)

    @classmethod
    def one(cls, field: PrimeField) -> "Poly":
        return cls(field, (1,))

    @classmethod
    def monomial(cls, field: PrimeField, k: int, c: int = 1) -> "Poly":
        return cls(field, (0,) * k + (c,))

    @property
    def degree(self) -> int | float:
        return len(self.coeffs) - 1 if self.coeffs else float("-inf")

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_unit(self) -> bool:
        return len(self.coeffs) == 1

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.coeffs == Poly(self.field, (other,)).coeffs
        return isinstance(other, Poly) and self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.field.p, self.coeffs))

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.field != self.field:
                raise DimensionError("polynomials over different fields")
            return other
        return Poly(self.field, (other,))

    def __add__(self, other):
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return Poly(self.field, [x + y for x, y in zip(a, b)] + list(a[len(b):]))

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.field, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly(self.field)
        p = self.field.p
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return Poly(self.field, [c % p for c in out])

    __rmul__ = __mul__

    def shift(self, k: int) -> "Poly":
        """Multiply by t^k."""
        if not self.coeffs:
            return self
        return Poly(self.field, (0,) * k + self.coeffs)

    def __divmod__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        p = self.field.p
        rem = list(self.coeffs)
        db = len(other.coeffs) - 1
        inv = pow(other.lead, -1, p)
        if len(rem) - 1 < db:
            return Poly(self.field), self
        quot = [0] * (len(rem) - db)
        for k in range(len(rem) - 1, db - 1, -1):
            c = rem[k] % p
            if c:
                q = (c * inv) % p
                quot[k - db] = q
                for j, y in enumerate(other.coeffs):
                    rem[k - db + j] = (rem[k - db + j] - q * y) % p
        return Poly(self.field, quot), Poly(self.field, rem[:db])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        inv = pow(self.lead, -1, self.field.p)
        return Poly(self.field, [c * inv for c in self.coeffs])

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.field.p
        return acc

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(terms)


def poly_xgcd(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """Return (g, s, u) with s*a + u*b = g and g monic."""
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd(0, 0) is undefined")
    K = a.field
    r0, r1 = a, b
    s0, s1 = Poly.one(K), Poly.zero(K)
    u0, u1 = Poly.zero(K), Poly.one(K)
    while not r1.is_zero():
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        u0, u1 = u1, u0 - q * u1
    inv = pow(r0.lead, -1, K.p)
    return r0 * inv, s0 * inv, u0 * inv


def poly_gcd(a: Poly, b: Poly) -> Poly:
    return poly_xgcd(a, b)[0]


class PolyMatrix:
    """Immutable matrix of polynomials (row-major)."""

    __slots__ = ("field", "rows", "cols", "entries")

    def __init__(self, field: PrimeField, rows: int, cols: int, entries: Sequence[Sequence[Poly]]):
        self.field = field
        self.rows = rows
        self.cols = cols
        ent = tuple(tuple(row) for row in entries)
        if len(ent) != rows or any(len(r) != cols for r in ent):
            raise DimensionError(f"entries do not form a {rows}x{cols} matrix")
        for r in ent:
            for e in r:
                if e.field != field:
                    raise DimensionError("entry over a different field")
        self.entries = ent

    @classmethod
    def from_coeffs(cls, field: PrimeField, rows: Sequence[Sequence[Sequence[int]]], nrows: int | None = None) -> "PolyMatrix":
        """Build from nested lists of ascending coefficient lists."""
        ent = [[Poly(field, c) for c in row] for row in rows]
        n = len(ent) if nrows is None else nrows
        m = len(ent[0]) if ent else 0
        if not ent:
            ent = [[] for _ in range(n)]
        return cls(field, n, m, ent)

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "PolyMatrix":
        z = Poly.zero(field)
        return cls(field, rows, cols, [[z] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "PolyMatrix":
        z, o = Poly.zero(field), Poly.one(field)
        return cls(field, n, n, [[o if i == j else z for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def column(self, j: int) -> tuple[Poly, ...]:
        return tuple(self.entries[i][j] for i in range(self.rows))

    def columns(self) -> list[tuple[Poly, ...]]:
        return [self.column(j) for j in range(self.cols)]

    @classmethod
    def from_columns(cls, field: PrimeField, nrows: int, columns: Sequence[Sequence[Poly]]) -> "PolyMatrix":
        cols = [tuple(c) for c in columns]
        return cls(field, nrows, len(cols), [[c[i] for c in cols] for i in range(nrows)])

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        z = Poly.zero(self.field)
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = z
                for k in range(self.cols):
                    a = self.entries[i][k]
                    if a:
                        b = other.entries[k][j]
                        if b:
                            acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(self.field, self.rows, other.cols, out)

    def apply(self, v: Sequence[Poly]) -> tuple[Poly, ...]:
        if len(v) != self.cols:
            raise DimensionError("vector length mismatch")
        z = Poly.zero(self.field)
        out = []
        for i in range(self.rows):
            acc = z
            for k in range(self.cols):
                if self.entries[i][k] and v[k]:
                    acc = acc + self.entries[i][k] * v[k]
            out.append(acc)
        return tuple(out)

    def hstack(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.rows != other.rows:
            raise DimensionError("row count mismatch")
        return PolyMatrix(self.field, self.rows, self.cols + other.cols,
                          [a + b for a, b in zip(self.entries, other.entries)])

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.field, self.cols, self.rows,
                          [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)])

    @property
    def max_degree(self) -> int:
        d = -1
        for row in self.entries:
            for e in row:
                if e.coeffs:
                    d = max(d, len(e.coeffs) - 1)
        return d

    def __eq__(self, other):
        return (isinstance(other, PolyMatrix) and self.field == other.field
                and self.rows == other.rows and self.cols == other.cols and self.entries == other.entries)

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def tolists(self) -> list[list[list[int]]]:
        return [[list(e.coeffs) for e in row] for row in self.entries]

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, {[[repr(e) for e in r] for r in self.entries]})"


def poly_det(m: PolyMatrix) -> Poly:
    """Determinant by fraction-free elimination over the Euclidean domain."""
    if m.rows != m.cols:
        raise DimensionError("determinant of a non-square matrix")
    n = m.rows
    a = [list(r) for r in m.entries]
    K = m.field
    sign = 1
    scale = Poly.one(K)
    for c in range(n):
        # Euclid on column c below the diagonal until a single nonzero remains
        while True:
            nz = [r for r in range(c, n) if a[r][c]]
            if not nz:
                return Poly.zero(K)
            piv = min(nz, key=lambda r: a[r][c].degree)
            if piv != c:
                a[c], a[piv] = a[piv], a[c]
                sign = -sign
            done = True
            for r in range(c + 1, n):
                if a[r][c]:
                    q = a[r][c] // a[c][c]
                    a[r] = [x - q * y for x, y in zip(a[r], a[c])]
                    if a[r][c]:
                        done = False
            if done:
                break
        scale = scale * a[c][c]
    return scale * sign


@dataclass(frozen=True)
class HermiteForm:
    """``relations @ transform == [h | 0]``; pivot j sits in row ``pivot_rows[j]`` of column j."""

    h: PolyMatrix
    transform: PolyMatrix
    pivot_rows: tuple[int, ...]


def _col_op(cols, tcols, dst, src, q):
    """cols[dst] -= q * cols[src] (and likewise on the transform)."""
    cols[dst] = [x - q * y for x, y in zip(cols[dst], cols[src])]
    tcols[dst] = [x - q * y for x, y in zip(tcols[dst], tcols[src])]


def _col_scale(cols, tcols, j, c):
    cols[j] = [x * c for x in cols[j]]
    tcols[j] = [x * c for x in tcols[j]]


def hermite_form(a: PolyMatrix) -> HermiteForm:
    """Column Hermite form; each pivot is the lowest nonzero entry of its column.

    Pivots are monic and every entry sharing a row with a pivot has strictly smaller
    degree than that pivot.
    """
    K = a.field
    g, m = a.rows, a.cols
    cols = [list(a.column(j)) for j in range(m)]
    ident = PolyMatrix.identity(K, m)
    tcols = [list(ident.column(j)) for j in range(m)]
    active = list(range(m))
    pivots: list[tuple[int, int]] = []  # (row, column index in cols)
    for i in range(g - 1, -1, -1):
        while True:
            nz = [j for j in active if cols[j][i]]
            if not nz:
                break
            piv = min(nz, key=lambda j: (cols[j][i].degree, j))
            others = [j for j in nz if j != piv]
            if not others:
                break
            for j in others:
                q = cols[j][i] // cols[piv][i]
                _col_op(cols, tcols, j, piv, q)
        nz = [j for j in active if cols[j][i]]
        if not nz:
            continue
        piv = nz[0]
        _col_scale(cols, tcols, piv, pow(cols[piv][i].lead, -1, K.p))
        active.remove(piv)
        for r, j in pivots:
            if cols[j][i]:
                q = cols[j][i] // cols[piv][i]
                if q:
                    _col_op(cols, tcols, j, piv, q)
        pivots.append((i, piv))
    pivots.sort()
    order = [j for _, j in pivots] + active
    h = PolyMatrix.from_columns(K, g, [cols[j] for _, j in pivots])
    transform = PolyMatrix.from_columns(K, m, [tcols[j] for j in order])
    return HermiteForm(h, transform, tuple(r for r, _ in pivots))


@dataclass(frozen=True)
class SmithForm:
    """``U @ A @ V == diagonal`` with ``factors`` the nonzero monic invariant factors."""

    factors: tuple[Poly, ...]
    free_rank: int
    U: PolyMatrix
    V: PolyMatrix
    U_inv: PolyMatrix
    diagonal: PolyMatrix


def smith_form(a: PolyMatrix) -> SmithForm:
    K = a.field
    g, m = a.rows, a.cols
    A = [list(r) for r in a.entries]
    U = [list(r) for r in PolyMatrix.identity(K, g).entries]
    Ui = [list(r) for r in PolyMatrix.identity(K, g).entries]
    V = [list(r) for r in PolyMatrix.identity(K, m).entries]

    def row_sub(dst, src, q):  # row dst -= q * row src
        A[dst] = [x - q * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x - q * y for x, y in zip(U[dst], U[src])]
        # inverse: column src += q * column dst
        for r in Ui:
            r[src] = r[src] + q * r[dst]

    def row_swap(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def row_scale(i, c):
        A[i] = [x * c for x in A[i]]
        U[i] = [x * c for x in U[i]]
        cinv = pow(c, -1, K.p)
        for r in Ui:
            r[i] = r[i] * cinv

    def col_sub(dst, src, q):  # col dst -= q * col src
        for r in A:
            r[dst] = r[dst] - q * r[src]
        for r in V:
            r[dst] = r[dst] - q * r[src]

    def col_swap(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    k = 0
    while k < min(g, m):
        cand = [(A[i][j].degree, i, j) for i in range(k, g) for j in range(k, m) if A[i][j]]
        if not cand:
            break
        _, i, j = min(cand)
        if i != k:
            row_swap(i, k)
        if j != k:
            col_swap(j, k)
        while True:
            changed = False
            for i in range(k + 1, g):
                if A[i][k]:
                    row_sub(i, k, A[i][k] // A[k][k])
                    if A[i][k]:
                        row_swap(i, k)
                        changed = True
            for j in range(k + 1, m):
                if A[k][j]:
                    col_sub(j, k, A[k][j] // A[k][k])
                    if A[k][j]:
                        col_swap(j, k)
                        changed = True
            if changed:
                continue
            # divisibility: fold any non-multiple into row k and restart
            bad = next(((i, j) for i in range(k + 1, g) for j in range(k + 1, m)
                        if A[i][j] and not (A[i][j] % A[k][k]).is_zero()), None)
            if bad is None:
                break
            row_sub(k, bad[0], Poly.const(K, -1))
        row_scale(k, pow(A[k][k].lead, -1, K.p))
        k += 1
    factors = tuple(A[i][i] for i in range(min(g, m)) if A[i][i])
    return SmithForm(
        factors=factors,
        free_rank=g - len(factors),
        U=PolyMatrix(K, g, g, U),
        V=PolyMatrix(K, m, m, V),
        U_inv=PolyMatrix(K, g, g, Ui),
        diagonal=PolyMatrix(K, g, m, A),
    )


@dataclass(frozen=True, eq=False)
class ModulePresentation:
    """``K[t]^g`` modulo the column span of ``relations`` (a g x m matrix)."""

    field: PrimeField
    generators: int
    relations: PolyMatrix = dc_field(default=None)

    def __post_init__(self):
        if self.generators < 0:
            raise ValueError("generator count must be non-negative")
        rel = self.relations
        if rel is None:
            rel = PolyMatrix.zeros(self.field, self.generators, 0)
            object.__setattr__(self, "relations", rel)
        if rel.rows != self.generators:
            raise DimensionError("relation matrix must have one row per generator")

    @classmethod
    def free(cls, field: PrimeField, g: int) -> "ModulePresentation":
        return cls(field, g)

    @classmethod
    def cyclic(cls, field: PrimeField, modulus: Sequence[int] | Poly) -> "ModulePresentation":
        d = modulus if isinstance(modulus, Poly) else Poly(field, modulus)
        return cls(field, 1, PolyMatrix(field, 1, 1, [[d]]))

    @classmethod
    def diagonal(cls, field: PrimeField, torsion: Sequence[Poly | Sequence[int]], free: int = 0) -> "ModulePresentation":
        """K[t]/(d_1) + ... + K[t]/(d_r) + K[t]^free."""
        ds = [d if isinstance(d, Poly) else Poly(field, d) for d in torsion]
        g = len(ds) + free
        z = Poly.zero(field)
        entries = [[ds[i] if i == j else z for j in range(len(ds))] for i in range(g)]
        return cls(field, g, PolyMatrix(field, g, len(ds), entries))

    @classmethod
    def from_action(cls, field: PrimeField, action) -> "ModulePresentation":
        """The K[t]-module K^d with t acting by ``action`` (relations tI - A)."""
        import numpy as np

        a = np.asarray(action.data if hasattr(action, "data") else action, dtype=np.int64) % field.p
        d = a.shape[0]
        entries = [[Poly(field, (-int(a[i, j]), 1 if i == j else 0)) for j in range(d)] for i in range(d)]
        return cls(field, d, PolyMatrix(field, d, d, entries))

    @cached_property
    def hermite(self) -> HermiteForm:
        return hermite_form(self.relations)

    @cached_property
    def smith(self) -> SmithForm:
        return smith_form(self.relations)

    def direct_sum(self, other: "ModulePresentation") -> "ModulePresentation":
        K = self.field
        z = Poly.zero(K)
        a, b = self.relations, other.relations
        g = self.generators + other.generators
        rows = [list(r) + [z] * b.cols for r in a.entries] + [[z] * a.cols + list(r) for r in b.entries]
        return ModulePresentation(K, g, PolyMatrix(K, g, a.cols + b.cols, rows))

    def with_relations(self, extra: Sequence[Sequence[Poly]]) -> "ModulePresentation":
        """Quotient by the submodule generated by ``extra`` (vectors of length g)."""
        cols = self.relations.columns() + [tuple(v) for v in extra]
        return ModulePresentation(self.field, self.generators, PolyMatrix.from_columns(self.field, self.generators, cols))

    def k_dim(self) -> int | float:
        """K-dimension of W (infinite when the module has positive rank)."""
        s = self.smith
        if s.free_rank:
            return float("inf")
        return sum(len(d.coeffs) - 1 for d in s.factors)

    def __repr__(self):
        return f"ModulePresentation({self.field!r}, g={self.generators}, relations={self.relations.tolists()})"


def module_rank(w: ModulePresentation) -> int:
    """Torsion-free rank over K[t]."""
    return w.smith.free_rank


def polymatrix_rank(a: PolyMatrix) -> int:
    """Rank over the fraction field K(t)."""
    return len(smith_form(a).factors)


@dataclass(frozen=True)
class TorsionPart:
    presentation: ModulePresentation
    embedding: PolyMatrix  # g x k; column i is the image of the i-th torsion generator in W
    factors: tuple[Poly, ...]

    @property
    def k_dim(self) -> int:
        return sum(len(d.coeffs) - 1 for d in self.factors)


def torsion_submodule(w: ModulePresentation) -> TorsionPart:
    s = w.smith
    K = w.field
    idx = [i for i, d in enumerate(s.factors) if not d.is_unit()]
    factors = tuple(s.factors[i] for i in idx)
    emb = PolyMatrix.from_columns(K, w.generators, [s.U_inv.column(i) for i in idx])
    return TorsionPart(ModulePresentation.diagonal(K, factors), emb, factors)


def torsion_free_quotient(w: ModulePresentation) -> ModulePresentation:
    """W modulo its torsion submodule, kept in the original generator coordinates."""
    t = torsion_submodule(w)
    return w.with_relations(t.embedding.columns())


def canonical_form(v: Sequence[Poly], w: ModulePresentation) -> tuple[Poly, ...]:
    """Unique representative of ``v + R``: reduce against Hermite pivots from the last row up."""
    if len(v) != w.generators:
        raise DimensionError(f"vector has {len(v)} coordinates, module has {w.generators} generators")
    herm = w.hermite
    out = list(v)
    for j in range(len(herm.pivot_rows) - 1, -1, -1):
        i = herm.pivot_rows[j]
        if out[i]:
            q = out[i] // herm.h[i, j]
            if q:
                col = herm.h.column(j)
                out = [x - q * y for x, y in zip(out, col)]
    return tuple(out)


def syzygies(a: PolyMatrix) -> PolyMatrix:
    """Columns spanning the K[t]-kernel {c : a c = 0}."""
    herm = hermite_form(a)
    r = len(herm.pivot_rows)
    return PolyMatrix.from_columns(a.field, a.cols, herm.transform.columns()[r:])


def submodule_presentation(w: ModulePresentation, gens: Sequence[Sequence[Poly]]) -> ModulePresentation:
    """Presentation of the submodule of W generated by ``gens``: K[t]^k / {c : sum c_i g_i in R}."""
    K = w.field
    k = len(gens)
    stacked = PolyMatrix.from_columns(K, w.generators, [tuple(g) for g in gens]).hstack(w.relations)
    syz = syzygies(stacked)
    rel_cols = [col[:k] for col in syz.columns()]
    rel_cols = [c for c in rel_cols if any(x for x in c)]
    return ModulePresentation(K, k, PolyMatrix.from_columns(K, k, rel_cols) if rel_cols else None)


def submodule_rank(w: ModulePresentation, gens: Sequence[Sequence[Poly]]) -> int:
    """Rank of the submodule generated by ``gens``: rank[gens | R] - rank[R] over K(t)."""
    if not gens:
        return 0
    stacked = PolyMatrix.from_columns(w.field, w.generators, [tuple(g) for g in gens]).hstack(w.relations)
    return polymatrix_rank(stacked) - len(w.smith.factors)


def split_vector(v: Sequence[Poly], k: int) -> tuple[Poly, ...]:
    """Rewrite a K[t]-vector over K[s], s = t^k: coordinate (i, j) holds sum_m c_{i, mk+j} s^m."""
    out = []
    for x in v:
        for j in range(k):
            out.append(Poly(x.field, x.coeffs[j::k]))
    return tuple(out)


def restrict_scalars(w: ModulePresentation, k: int) -> ModulePresentation:
    """W viewed as a module over K[s], s = t^k, on the generators t^j e_i (j < k)."""
    K = w.field
    cols = []
    for col in w.relations.columns():
        for j in range(k):
            cols.append(split_vector([x.shift(j) for x in col], k))
    g = w.generators * k
    return ModulePresentation(K, g, PolyMatrix.from_columns(K, g, cols) if cols else None)
