"""Finite modular lattices of invariant subspaces, (dual) Goldie dimension and corank."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from .algflow import FinDimFlow
from .gfp import MatrixGF, PrimeField, Subspace, _matmul
from .polymat import module_rank
from .report import EXACT, INFINITY, LOWER_BOUND
from .topflow import ProfiniteFlow, d_plus, theorem_a_witnesses
from .report import UnsupportedDescriptor

# enumeration caps
SMALL_FIELDS = (2, 3)
MAX_DIM = 6
# all subspaces are tabulated when there are at most this many
UNIVERSE_LIMIT = 400


def _subspace_count(p: int, d: int) -> int:
    total = 0
    for k in range(d + 1):
        num = den = 1
        for i in range(k):
            num *= p ** (d - i) - 1
            den *= p ** (i + 1) - 1
        total += num // den
    return total


class SubspaceUniverse:
    """Every subspace of K^d, with vector-set bitmasks and annihilator indices."""

    def __init__(self, field: PrimeField, d: int):
        p = field.p
        self.field = field
        self.d = d
        self.vectors = np.array(list(itertools.product(range(p), repeat=d)), dtype=np.int64).reshape(p ** d, d)
        self.weights = np.array([p ** (d - 1 - i) for i in range(d)], dtype=np.int64)
        self.subspaces: list[Subspace] = []
        self.masks: list[int] = []
        self.index: dict[int, int] = {}
        self._enumerate()
        self.perp = [self.index[self.mask_of(s.perp())] for s in self.subspaces]
        self.basis_codes = [tuple(int(c) for c in (s.basis @ self.weights)) for s in self.subspaces]

    def code(self, v) -> int:
        return int(np.asarray(v, dtype=np.int64) @ self.weights)

    def mask_of(self, s: Subspace) -> int:
        if s.dim == 0:
            return 1
        coeffs = np.array(list(itertools.product(range(self.field.p), repeat=s.dim)), dtype=np.int64)
        members = (coeffs @ s.basis) % self.field.p
        m = 0
        for c in members @ self.weights:
            m |= 1 << int(c)
        return m

    def _enumerate(self):
        K = self.field
        start = Subspace.zero(K, self.d)
        frontier = [start]
        self._add(start)
        while frontier:
            nxt = []
            for s in frontier:
                for v in self.vectors:
                    if not v.any() or s.contains(v):
                        continue
                    t = Subspace(K, self.d, np.vstack([s.basis, v[None, :]]))
                    if self._add(t):
                        nxt.append(t)
            frontier = nxt

    def _add(self, s: Subspace) -> bool:
        m = self.mask_of(s)
        if m in self.index:
            return False
        self.index[m] = len(self.subspaces)
        self.subspaces.append(s)
        self.masks.append(m)
        return True

    def meet(self, i: int, j: int) -> int:
        return self.index[self.masks[i] & self.masks[j]]

    def join(self, i: int, j: int) -> int:
        return self.perp[self.meet(self.perp[i], self.perp[j])]

    def image_codes(self, action: np.ndarray) -> list[int]:
        """code(A v) for every vector v, indexed by code(v)."""
        img = _matmul(self.vectors, action.T, self.field.p)
        return [int(c) for c in img @ self.weights]

    def invariant_indices(self, action: np.ndarray) -> list[int]:
        img = self.image_codes(action)
        out = []
        for i, (m, basis) in enumerate(zip(self.masks, self.basis_codes)):
            if all((m >> img[b]) & 1 for b in basis):
                out.append(i)
        return out


@lru_cache(maxsize=None)
def universe(p: int, d: int) -> SubspaceUniverse:
    return SubspaceUniverse(PrimeField(p), d)


@dataclass
class FiniteLattice:
    """A finite modular lattice given by join/meet tables on element indices.

    ``colength[i]`` is the length of the interval [a_i, 1]; for subspace lattices
    this is the codimension.
    """

    elements: list
    join_table: list[list[int]]
    meet_table: list[list[int]]
    top: int
    bottom: int
    colength: list[int]
    _memo: dict = dc_field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.elements)

    def join(self, i: int, j: int) -> int:
        return self.join_table[i][j]

    def meet(self, i: int, j: int) -> int:
        return self.meet_table[i][j]

    def leq(self, i: int, j: int) -> bool:
        return self.meet_table[i][j] == i

    def index_of(self, a) -> int:
        if isinstance(a, (int, np.integer)):
            return int(a)
        return self.elements.index(a)

    def dual(self) -> "FiniteLattice":
        """Order-reversed lattice (same elements, join and meet exchanged)."""
        n = len(self.elements)
        length = self.colength[self.bottom]
        return FiniteLattice(list(self.elements), self.meet_table, self.join_table, self.bottom, self.top,
                             [length - self.colength[i] for i in range(n)])

    def is_modular(self, samples: int | None = None) -> bool:
        """x v (a ^ b) == (x v a) ^ b whenever x <= b."""
        n = len(self.elements)
        triples = itertools.product(range(n), repeat=3)
        if samples is not None:
            triples = itertools.islice(triples, samples)
        for x, a, b in triples:
            if self.leq(x, b) and self.join(x, self.meet(a, b)) != self.meet(self.join(x, a), b):
                return False
        return True

    @classmethod
    def from_subspaces(cls, subspaces: Sequence[Subspace]) -> "FiniteLattice":
        elems = list(dict.fromkeys(subspaces))
        index = {s: i for i, s in enumerate(elems)}
        n = len(elems)
        join = [[0] * n for _ in range(n)]
        meet = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                try:
                    join[i][j] = join[j][i] = index[elems[i] + elems[j]]
                    meet[i][j] = meet[j][i] = index[elems[i] & elems[j]]
                except KeyError as exc:
                    raise ValueError("elements are not closed under sum and intersection") from exc
        dims = [s.dim for s in elems]
        top = max(range(n), key=dims.__getitem__)
        bottom = min(range(n), key=dims.__getitem__)
        return cls(elems, join, meet, top, bottom, [s.codim for s in elems])

    @classmethod
    def from_universe(cls, uni: SubspaceUniverse, indices: Sequence[int]) -> "FiniteLattice":
        idx = list(indices)
        local = {g: i for i, g in enumerate(idx)}
        n = len(idx)
        join = [[0] * n for _ in range(n)]
        meet = [[0] * n for _ in range(n)]
        for i in range(n):
            gi = idx[i]
            for j in range(i, n):
                gj = idx[j]
                join[i][j] = join[j][i] = local[uni.join(gi, gj)]
                meet[i][j] = meet[j][i] = local[uni.meet(gi, gj)]
        elems = [uni.subspaces[g] for g in idx]
        dims = [s.dim for s in elems]
        top = max(range(n), key=dims.__getitem__)
        bottom = min(range(n), key=dims.__getitem__)
        return cls(elems, join, meet, top, bottom, [s.codim for s in elems])


def _action_array(flow) -> tuple[PrimeField, np.ndarray]:
    if isinstance(flow, FinDimFlow):
        return flow.field, flow.action.data
    if isinstance(flow, MatrixGF):
        return flow.field, flow.data
    raise TypeError("expected a finite-dimensional flow or an action matrix")


def invariant_subspaces(flow, max_dim: int = MAX_DIM) -> FiniteLattice:
    """All subspaces mapped into themselves by the action."""
    field, a = _action_array(flow)
    d = a.shape[0]
    if field.p not in SMALL_FIELDS or d > max_dim:
        raise ValueError(f"enumeration is capped at GF(2)/GF(3) and dimension {max_dim}")
    if _subspace_count(field.p, d) <= UNIVERSE_LIMIT:
        uni = universe(field.p, d)
        return FiniteLattice.from_universe(uni, uni.invariant_indices(a))
    return FiniteLattice.from_subspaces(_invariant_closure(field, a))


def _invariant_closure(field: PrimeField, a: np.ndarray) -> list[Subspace]:
    """Grow invariant subspaces by adjoining cyclic subspaces, breadth first."""
    p = field.p
    d = a.shape[0]
    vecs = [np.array(v, dtype=np.int64) for v in itertools.product(range(p), repeat=d) if any(v)]

    def cyclic(v):
        rows = [v]
        for _ in range(d - 1):
            rows.append(_matmul(a, rows[-1], p))
        return np.vstack(rows)

    cyc = [cyclic(v) for v in vecs]
    start = Subspace.zero(field, d)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for s in frontier:
            for v, c in zip(vecs, cyc):
                if s.contains(v):
                    continue
                t = Subspace(field, d, np.vstack([s.basis, c]))
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return sorted(seen, key=lambda s: (s.dim, s.basis.tobytes()))


# ---------------------------------------------------------------- predicates

def _indices(lattice: FiniteLattice, subset) -> list[int]:
    return [lattice.index_of(a) for a in subset]


def _meet_all(lattice: FiniteLattice, idx: Sequence[int]) -> int:
    m = lattice.top
    for i in idx:
        m = lattice.meet(m, i)
    return m


def is_coindependent(lattice: FiniteLattice, subset) -> bool:
    """a_i v (meet of the others) = 1 for every i; members must be proper."""
    idx = _indices(lattice, subset)
    if lattice.top in idx:
        raise ValueError("the top element cannot belong to a coindependent set")
    for k, i in enumerate(idx):
        rest = _meet_all(lattice, idx[:k] + idx[k + 1:])
        if lattice.join(i, rest) != lattice.top:
            return False
    return True


def is_superfluous(lattice: FiniteLattice, a, within: Sequence[int] | None = None) -> bool:
    """a v b != 1 for every b != 1 (b ranging over ``within`` when given)."""
    i = lattice.index_of(a)
    pool = range(len(lattice)) if within is None else within
    return all(lattice.join(i, b) != lattice.top for b in pool if b != lattice.top)


def interval(lattice: FiniteLattice, a) -> list[int]:
    i = lattice.index_of(a)
    return [x for x in range(len(lattice)) if lattice.leq(i, x)]


def is_couniform(lattice: FiniteLattice, a=None) -> bool:
    """Without ``a``: the lattice is couniform.  With ``a``: the interval [a, 1] is."""
    base = lattice.bottom if a is None else lattice.index_of(a)
    pool = interval(lattice, base)
    if len(pool) < 2:
        return False
    return all(is_superfluous(lattice, x, pool) for x in pool if x != lattice.top)


# ---------------------------------------------------------------- (dual) Goldie dimension

def _coindependent_search(lattice: FiniteLattice, candidates: Sequence[int] | None = None,
                          first_only_size: int | None = None):
    """Yield maximal-size coindependent families by depth-first search with a length bound.

    Families only ever grow by candidates of larger index, so each set is seen once.
    A coindependent family has sum of colengths equal to the colength of its meet,
    which bounds how many more members can be added.
    """
    top = lattice.top
    cands = [i for i in (range(len(lattice)) if candidates is None else candidates) if i != top]
    cands.sort(key=lambda i: (lattice.colength[i], i))
    total = lattice.colength[lattice.bottom]
    best: list[int] = []

    def extend(chosen: list[int], excl: list[int], meet_all: int, used: int, start: int):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
            if first_only_size is not None and len(best) >= first_only_size:
                return True
        if len(chosen) + (total - used) <= len(best):
            return False
        for pos in range(start, len(cands)):
            x = cands[pos]
            cx = lattice.colength[x]
            if used + cx > total:
                continue
            if lattice.join(x, meet_all) != top:
                continue
            ok = True
            new_excl = []
            for i, e in zip(chosen, excl):
                e2 = lattice.meet(e, x)
                if lattice.join(i, e2) != top:
                    ok = False
                    break
                new_excl.append(e2)
            if not ok:
                continue
            new_excl.append(meet_all)
            if extend(chosen + [x], new_excl, lattice.meet(meet_all, x), used + cx, pos + 1):
                return True
        return False

    extend([], [], top, 0, 0)
    return best


def max_coindependent(lattice: FiniteLattice) -> list[int]:
    return _coindependent_search(lattice)


def dual_goldie_dim(lattice: FiniteLattice) -> int:
    key = "codi"
    if key not in lattice._memo:
        lattice._memo[key] = len(max_coindependent(lattice))
    return lattice._memo[key]


def goldie_dim(lattice: FiniteLattice) -> int:
    return dual_goldie_dim(lattice.dual())


def couniform_certificate(lattice: FiniteLattice) -> list[int] | None:
    """A coindependent family of couniform elements whose meet is superfluous.

    Its size is the dual Goldie dimension; None when no such family exists.
    """
    top = lattice.top
    if len(lattice) == 1:
        return []
    couni = [i for i in range(len(lattice)) if i != top and is_couniform(lattice, i)]
    total = lattice.colength[lattice.bottom]
    for size in range(total, 0, -1):
        for fam in itertools.combinations(couni, size):
            if sum(lattice.colength[i] for i in fam) > total:
                continue
            if is_coindependent(lattice, fam) and is_superfluous(lattice, _meet_all(lattice, fam)):
                return list(fam)
    return None


def certified_dual_goldie_dim(lattice: FiniteLattice) -> int | None:
    cert = couniform_certificate(lattice)
    return None if cert is None else len(cert)


# ---------------------------------------------------------------- corank

@dataclass
class CorankReport:
    value: int | float
    witness: list
    method: str  # exhaustive | dual-rank | witness-search
    status: str
    routes: dict[str, Any]
    consistent: bool

    def as_dict(self) -> dict[str, Any]:
        return {
            "value": "inf" if self.value == INFINITY else int(self.value),
            "method": self.method,
            "status": self.status,
            "routes": self.routes,
            "consistent": self.consistent,
        }


def _finite_restriction(flow: ProfiniteFlow, probe: int) -> FinDimFlow | None:
    """The flow as a finite-dimensional one, when that is evident from its level data."""
    d = flow.dim(probe)
    if d == 0 and flow.dim(probe + 1) == 0:
        return FinDimFlow(flow.field, MatrixGF.zeros(flow.field, 0, 0))
    if flow.window == 0 and flow.dim(probe + 1) == d:
        return FinDimFlow(flow.field, flow.level(probe).M)
    return None


def cork(flow: ProfiniteFlow, max_level: int = 2, level_bound: int = 8, k_max: int = 16) -> CorankReport:
    """Dual Goldie dimension of the invariant-subspace lattice of D+."""
    if flow.cert is None:
        raise UnsupportedDescriptor(f"corank is not computed for {flow.descriptor.kind} flows")
    routes: dict[str, Any] = {}
    dp = d_plus(flow, level_bound)
    module = flow.descriptor.module
    if module is not None:
        routes["dual-rank"] = module_rank(module)
    elif flow.descriptor.structural is not None:
        routes["dual-rank"] = flow.descriptor.structural
    wres = theorem_a_witnesses(dp.flow, k_max, max_level)
    routes["witness-search"] = {
        "value": wres.count,
        "status": EXACT if wres.remainder_zero else LOWER_BOUND,
    }
    witness = [u.functionals.basis.tolist() for u in wres.witnesses]
    probe = max(level_bound, flow.cert.torsion_ready()) + 1
    fin = _finite_restriction(dp.flow, probe)
    if fin is not None and fin.field.p in SMALL_FIELDS and fin.dim <= MAX_DIM:
        lat = invariant_subspaces(fin)
        routes["exhaustive"] = dual_goldie_dim(lat)
    values = []
    if "dual-rank" in routes:
        values.append(routes["dual-rank"])
    if wres.remainder_zero:
        values.append(wres.count)
    if "exhaustive" in routes:
        values.append(routes["exhaustive"])
    consistent = len(set(values)) <= 1 and all(
        wres.count <= v for v in values
    )
    if "exhaustive" in routes:
        return CorankReport(routes["exhaustive"], witness, "exhaustive", EXACT, routes, consistent)
    if "dual-rank" in routes:
        return CorankReport(routes["dual-rank"], witness, "dual-rank", EXACT, routes, consistent)
    if wres.remainder_zero:
        return CorankReport(wres.count, witness, "witness-search", EXACT, routes, consistent)
    value = INFINITY if wres.count >= k_max else wres.count
    return CorankReport(value, witness, "witness-search", LOWER_BOUND, routes, consistent)
