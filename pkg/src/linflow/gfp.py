"""Dense linear algebra over a prime field GF(p).

Matrices are numpy ``int64`` arrays with entries in ``[0, p)``; products of two
residues stay below ``2**62`` for every admissible ``p``, so row operations never
overflow.  Subspaces are stored by their reduced row-echelon basis, which makes
equality a plain data comparison.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_PRIME = 2**31 - 1


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class DimensionError(ValueError):
    """Operands live in incompatible ambient spaces."""


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not 2 <= self.p <= MAX_PRIME:
            raise ValueError(f"modulus must be a prime in [2, 2^31-1], got {self.p!r}")
        if not _is_prime(int(self.p)):
            raise ValueError(f"{self.p} is not prime")
        object.__setattr__(self, "p", int(self.p))

    def inv(self, x: int) -> int:
        x %= self.p
        if x == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(x, -1, self.p)

    def array(self, data) -> np.ndarray:
        return np.asarray(data, dtype=np.int64) % self.p

    def __repr__(self):
        return f"GF({self.p})"


@dataclass(frozen=True, eq=False)
class MatrixGF:
    """A rows x cols matrix over ``field``; the wrapped array is read-only."""

    field: PrimeField
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise ValueError("matrix data must be two-dimensional")
        arr %= self.field.p
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_rows(cls, field: PrimeField, rows: Sequence[Sequence[int]], cols: int | None = None) -> "MatrixGF":
        rows = [list(r) for r in rows]
        if not rows:
            return cls(field, np.zeros((0, cols or 0), dtype=np.int64))
        return cls(field, np.array(rows, dtype=np.int64))

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "MatrixGF":
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "MatrixGF":
        return cls(field, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def T(self) -> "MatrixGF":
        return MatrixGF(self.field, self.data.T)

    def __matmul__(self, other):
        if isinstance(other, MatrixGF):
            if other.field != self.field:
                raise DimensionError("field mismatch")
            if self.cols != other.rows:
                raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
            return MatrixGF(self.field, _matmul(self.data, other.data, self.field.p))
        vec = np.asarray(other, dtype=np.int64)
        return _matmul(self.data, vec, self.field.p)

    def __eq__(self, other):
        return (
            isinstance(other, MatrixGF)
            and self.field == other.field
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self):
        return hash((self.field, self.data.shape, self.data.tobytes()))

    def tolist(self) -> list[list[int]]:
        return self.data.tolist()

    def __repr__(self):
        return f"MatrixGF({self.field!r}, {self.tolist()})"


def _matmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if a.shape[-1] == 0:
        shape = a.shape[:-1] + b.shape[1:]
        return np.zeros(shape, dtype=np.int64)
    if a.shape[-1] * (p - 1) ** 2 < 2**62:
        return (a @ b) % p
    # large moduli: accumulate one rank-1 term at a time
    out = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
    for k in range(a.shape[-1]):
        out = (out + np.multiply.outer(a[..., k], b[k]) % p) % p
    return out


def rref_array(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form of ``a`` mod ``p``; returns (nonzero rows, pivots)."""
    a = np.array(a, dtype=np.int64, copy=True) % p
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        lead = int(a[r, c])
        if lead != 1:
            a[r] = (a[r] * pow(lead, -1, p)) % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit] = (a[hit] - np.multiply.outer(col[hit], a[r]) % p) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rref(m: MatrixGF) -> tuple[MatrixGF, int, tuple[int, ...]]:
    echelon, pivots = rref_array(m.data, m.field.p)
    full = np.zeros_like(m.data)
    full[: len(pivots)] = echelon
    return MatrixGF(m.field, full), len(pivots), tuple(pivots)


def rank_array(a: np.ndarray, p: int) -> int:
    if a.size == 0:
        return 0
    return len(rref_array(a, p)[1])


def rank(m: MatrixGF) -> int:
    return rank_array(m.data, m.field.p)


def _null_space(a: np.ndarray, ncols: int, p: int) -> np.ndarray:
    """Basis rows of {v : a v = 0}."""
    if a.shape[0] == 0:
        return np.eye(ncols, dtype=np.int64)
    echelon, pivots = rref_array(a, p)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, pc in enumerate(pivots):
            basis[i, pc] = (-echelon[r, f]) % p
    return basis


class Subspace:
    """A subspace of K^d given by its canonical reduced row-echelon basis."""

    __slots__ = ("field", "ambient_dim", "basis", "pivots", "_key")

    def __init__(self, field: PrimeField, ambient_dim: int, vectors=None, *, _canonical=None):
        self.field = field
        self.ambient_dim = int(ambient_dim)
        if _canonical is not None:
            basis, pivots = _canonical
        else:
            arr = np.zeros((0, self.ambient_dim), dtype=np.int64) if vectors is None else np.asarray(vectors, dtype=np.int64)
            if arr.size == 0:
                arr = np.zeros((0, self.ambient_dim), dtype=np.int64)
            arr = arr.reshape(-1, self.ambient_dim) if self.ambient_dim else np.zeros((0, 0), dtype=np.int64)
            basis, pivots = rref_array(arr, field.p)
        basis = np.ascontiguousarray(basis, dtype=np.int64)
        basis.setflags(write=False)
        self.basis = basis
        self.pivots = tuple(pivots)
        self._key = None

    # constructors
    @classmethod
    def zero(cls, field: PrimeField, d: int) -> "Subspace":
        return cls(field, d)

    @classmethod
    def full(cls, field: PrimeField, d: int) -> "Subspace":
        return cls(field, d, _canonical=(np.eye(d, dtype=np.int64), list(range(d))))

    @classmethod
    def span(cls, field: PrimeField, d: int, vectors: Iterable[Sequence[int]]) -> "Subspace":
        return cls(field, d, [list(v) for v in vectors])

    @property
    def dim(self) -> int:
        return len(self.pivots)

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    def _check(self, other: "Subspace"):
        if other.field != self.field or other.ambient_dim != self.ambient_dim:
            raise DimensionError(
                f"ambient mismatch: {self.field}^{self.ambient_dim} vs {other.field}^{other.ambient_dim}"
            )

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.field == other.field
            and self.ambient_dim == other.ambient_dim
            and self.pivots == other.pivots
            and bool(np.array_equal(self.basis, other.basis))
        )

    def __hash__(self):
        if self._key is None:
            self._key = hash((self.field.p, self.ambient_dim, self.pivots, self.basis.tobytes()))
        return self._key

    def __repr__(self):
        return f"Subspace({self.field!r}^{self.ambient_dim}, dim={self.dim}, basis={self.basis.tolist()})"

    def contains(self, v) -> bool:
        v = np.asarray(v, dtype=np.int64).reshape(-1) % self.field.p
        if v.shape[0] != self.ambient_dim:
            raise DimensionError("vector length does not match ambient dimension")
        if self.dim == 0:
            return not v.any()
        residue = (v - self.coordinates(v) @ self.basis) % self.field.p
        return not residue.any()

    def contains_subspace(self, other: "Subspace") -> bool:
        self._check(other)
        return all(self.contains(row) for row in other.basis)

    def coordinates(self, v) -> np.ndarray:
        """Coefficients of ``v`` (rows) in the echelon basis; assumes membership."""
        v = np.asarray(v, dtype=np.int64) % self.field.p
        return v[..., list(self.pivots)]

    def perp(self) -> "Subspace":
        """Annihilator under the standard pairing sum(x_i y_i)."""
        return Subspace(self.field, self.ambient_dim, _null_space(self.basis, self.ambient_dim, self.field.p))

    def sum(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return Subspace(self.field, self.ambient_dim, np.vstack([self.basis, other.basis]))

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self.dim == self.ambient_dim:
            return other
        if other.dim == other.ambient_dim:
            return self
        return self.perp().sum(other.perp()).perp()

    def image(self, m: MatrixGF) -> "Subspace":
        if m.cols != self.ambient_dim:
            raise DimensionError("map domain does not match subspace ambient")
        return Subspace(self.field, m.rows, _matmul(self.basis, m.data.T, self.field.p))

    def __add__(self, other):
        return self.sum(other)

    def __and__(self, other):
        return self.intersect(other)

    def __le__(self, other):
        return other.contains_subspace(self)


def kernel(m: MatrixGF) -> Subspace:
    return Subspace(m.field, m.cols, _null_space(m.data, m.cols, m.field.p))


def preimage(m: MatrixGF, s: Subspace) -> Subspace:
    """{v : m v in s}."""
    if s.ambient_dim != m.rows or s.field != m.field:
        raise DimensionError(f"target subspace lives in K^{s.ambient_dim}, map lands in K^{m.rows}")
    if s.dim == s.ambient_dim:
        return Subspace.full(m.field, m.cols)
    constraints = _matmul(s.perp().basis, m.data, m.field.p)
    return Subspace(m.field, m.cols, _null_space(constraints, m.cols, m.field.p))


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    return a.sum(b)


def subspace_intersect(a: Subspace, b: Subspace) -> Subspace:
    return a.intersect(b)


def quotient_dim(ambient: Subspace, sub: Subspace) -> int:
    if not ambient.contains_subspace(sub):
        raise ValueError("sub is not contained in ambient")
    return ambient.dim - sub.dim


def solve_right_inverse(a: np.ndarray, p: int) -> np.ndarray:
    """A matrix r with a @ r = I for a surjective (full row rank) ``a``."""
    nrows, ncols = a.shape
    aug = np.hstack([a % p, np.eye(nrows, dtype=np.int64)])
    # row-reduce [a | I]; the pivot columns of a give a right inverse
    echelon, pivots = rref_array(aug, p)
    if len(pivots) < nrows or pivots[-1] >= ncols:
        raise ValueError("matrix is not surjective")
    # echelon = E [a | I] with E invertible, so E a has identity on the pivot columns
    e = echelon[:, ncols:]
    r = np.zeros((ncols, nrows), dtype=np.int64)
    for i, c in enumerate(pivots):
        r[c] = e[i]
    return r % p
