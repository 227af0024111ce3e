"""Topological flows presented as inverse limits of finite-dimensional levels.

A flow has levels V_k = K^{d_k}, surjective projections pi_k: V_{k+1} -> V_k and
level maps M_k: V_{k+s} -> V_k describing phi.  Open subspaces are stored through
their annihilators: a set of functionals (row vectors) on some level.
"""
from __future__ import annotations

import itertools
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .gfp import DimensionError, MatrixGF, PrimeField, Subspace, _matmul, preimage, rank_array, solve_right_inverse
from .polymat import ModulePresentation, module_rank
from .report import EXACT, HORIZON_LIMITED, INFINITY, LOWER_BOUND, EntropyReport, UnsupportedDescriptor

# beyond this many steps a certification bound is not pursued
MAX_CERTIFIED_STEPS = 512


class InvariantViolation(RuntimeError):
    """Level data broke a structural identity (surjectivity, compatibility, ...)."""


@dataclass(frozen=True)
class Level:
    dim: int
    pi: MatrixGF  # d_k x d_{k+1}
    M: MatrixGF  # d_k x d_{k+s}

    def __iter__(self):
        return iter((self.dim, self.pi, self.M))


@dataclass(frozen=True)
class Cert:
    """Module-side data that bounds when cotrajectory increments settle.

    For the dual of a module with free rank f and K-dimensional torsion tau, the
    increments of an open subspace defined at level L are final from step
    f * ceil((L + offset) / divisor) + tau + 1 on.
    """

    free_rank: int
    torsion_dim: int
    level_offset: int = 0
    level_divisor: int = 1
    torsion_level: int | None = None
    generator_level: int = 1  # the functionals of this level generate the dual module

    def bound(self, level: int) -> int:
        return self.free_rank * -(-(level + self.level_offset) // self.level_divisor) + self.torsion_dim + 1

    def torsion_ready(self) -> int:
        """A level whose functionals already contain every torsion functional."""
        if self.torsion_level is not None:
            return self.torsion_level
        return self.torsion_dim + 1 + self.level_offset

    def power(self, k: int) -> "Cert":
        return Cert(k * self.free_rank, self.torsion_dim, self.level_offset, k * self.level_divisor,
                    self.torsion_level, k * self.generator_level)


@dataclass(frozen=True)
class Descriptor:
    kind: str  # bernoulli | findim | periodic | dual_of_module | restricted | quotient | power
    structural: int | None = None
    cert: Cert | None = None
    module: ModulePresentation | None = None
    params: dict = dc_field(default_factory=dict, compare=False, hash=False)


def _as_matrix(field: PrimeField, m, rows: int) -> MatrixGF:
    if isinstance(m, MatrixGF):
        return m
    arr = np.asarray(m, dtype=np.int64)
    if arr.ndim != 2:
        arr = arr.reshape(rows, -1) if rows else np.zeros((0, 0), dtype=np.int64)
    return MatrixGF(field, arr)


class ProfiniteFlow:
    """(V, phi) with a memoized, thread-safe level rule."""

    def __init__(self, field: PrimeField, window: int, rule: Callable[[int], tuple], descriptor: Descriptor):
        if window < 0:
            raise ValueError("window must be non-negative")
        self.field = field
        self.window = window
        self.descriptor = descriptor
        self._rule = rule
        self._levels: dict[int, Level] = {}
        self._proj: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.RLock()

    def __repr__(self):
        return f"ProfiniteFlow({self.field!r}, s={self.window}, kind={self.descriptor.kind})"

    @property
    def cert(self) -> Cert | None:
        return self.descriptor.cert

    def level(self, k: int) -> Level:
        if k < 0:
            raise ValueError("levels are indexed from 0")
        with self._lock:
            lv = self._levels.get(k)
            if lv is None:
                d, pi, m = self._rule(k)
                pi = _as_matrix(self.field, pi, d)
                m = _as_matrix(self.field, m, d)
                if pi.rows != d or m.rows != d:
                    raise InvariantViolation(f"level {k}: maps do not have {d} rows")
                lv = Level(int(d), pi, m)
                self._levels[k] = lv
            return lv

    def dim(self, k: int) -> int:
        return self.level(k).dim

    def projection(self, j: int, k: int) -> np.ndarray:
        """The composite projection V_j -> V_k (j >= k) as a d_k x d_j array."""
        if j < k:
            raise ValueError("can only project to a lower level")
        if j == k:
            return np.eye(self.dim(k), dtype=np.int64)
        with self._lock:
            hit = self._proj.get((j, k))
            if hit is None:
                hit = _matmul(self.projection(j - 1, k), self.level(j - 1).pi.data, self.field.p)
                hit.setflags(write=False)
                self._proj[(j, k)] = hit
            return hit

    def lift(self, rows: np.ndarray, k: int, j: int) -> np.ndarray:
        """Functionals on V_k read as functionals on V_j."""
        d = self.dim(k)
        rows = np.asarray(rows, dtype=np.int64)
        rows = rows.reshape(-1, d) if d else np.zeros((0, 0), dtype=np.int64)
        return _matmul(rows, self.projection(j, k), self.field.p)

    def check_level(self, k: int) -> None:
        """Surjectivity of pi_k and the compatibility identity at level k."""
        p = self.field.p
        lv = self.level(k)
        if rank_array(lv.pi.data, p) != lv.dim:
            raise InvariantViolation(f"pi_{k} is not surjective")
        if self.dim(k + 1) < lv.dim:
            raise InvariantViolation(f"level dimensions decrease at {k}")
        s = self.window
        left = _matmul(lv.pi.data, self.level(k + 1).M.data, p)
        right = _matmul(lv.M.data, self.projection(k + 1 + s, k + s), p)
        if not np.array_equal(left, right):
            raise InvariantViolation(f"pi_{k} M_{k + 1} != M_{k} pi at level {k}")

    def validate(self, upto: int = 6) -> None:
        for k in range(upto + 1):
            self.check_level(k)


# ---------------------------------------------------------------- builtins

def bernoulli(field: PrimeField, copies: int = 1) -> ProfiniteFlow:
    """The k-fold left Bernoulli shift on (K^N)^copies; coordinates block-major per copy."""
    if copies < 0:
        raise ValueError("copies must be non-negative")

    def rule(k):
        d = copies * k
        pi = np.zeros((d, copies * (k + 1)), dtype=np.int64)
        m = np.zeros((d, copies * (k + 1)), dtype=np.int64)
        for c in range(copies):
            for j in range(k):
                pi[c * k + j, c * (k + 1) + j] = 1
                m[c * k + j, c * (k + 1) + j + 1] = 1
        return d, pi, m

    desc = Descriptor("bernoulli", copies, Cert(copies, 0, torsion_level=0),
                      ModulePresentation.free(field, copies), {"copies": copies})
    return ProfiniteFlow(field, 1, rule, desc)


def findim(field: PrimeField, action) -> ProfiniteFlow:
    """A finite-dimensional space with an endomorphism; every level is the space itself."""
    a = action if isinstance(action, MatrixGF) else MatrixGF(field, np.asarray(action, dtype=np.int64).reshape(len(action), -1))
    if a.rows != a.cols:
        raise DimensionError("action matrix must be square")
    d = a.rows
    eye = MatrixGF.identity(field, d)
    desc = Descriptor("findim", 0, Cert(0, d, torsion_level=0, generator_level=0), ModulePresentation.from_action(field, a.T),
                      {"action": a})
    return ProfiniteFlow(field, 0, lambda k: (d, eye, a), desc)


def periodic(field: PrimeField, window: int, preperiod: Sequence[tuple], period: Sequence[tuple]) -> ProfiniteFlow:
    """Level data given explicitly: preperiod levels, then the period repeated forever."""
    if not period:
        raise ValueError("period must be non-empty")
    pre = list(preperiod)
    per = list(period)

    def rule(k):
        return pre[k] if k < len(pre) else per[(k - len(pre)) % len(per)]

    flow = ProfiniteFlow(field, window, rule, Descriptor("periodic", params={"preperiod": pre, "period": per}))
    flow.validate(len(pre) + 2 * len(per) + window)
    return flow


def power(flow: ProfiniteFlow, k: int) -> ProfiniteFlow:
    """(V, phi^k)."""
    if k < 1:
        raise ValueError("power must be positive")
    s = flow.window

    def rule(j):
        lv = flow.level(j)
        m = lv.M
        for i in range(1, k):
            m = m @ flow.level(j + i * s).M
        return lv.dim, lv.pi, m

    d = flow.descriptor
    desc = Descriptor(
        "power",
        None if d.structural is None else k * d.structural,
        None if d.cert is None else d.cert.power(k),
        None,
        {"base": flow, "k": k},
    )
    return ProfiniteFlow(flow.field, k * s, rule, desc)


def _basis_rows(sub: Subspace) -> np.ndarray:
    return np.asarray(sub.basis, dtype=np.int64)


def restrict(flow: ProfiniteFlow, levels: Callable[[int], Subspace], descriptor: Descriptor) -> ProfiniteFlow:
    """The closed invariant subspace X with p_k(X) = levels(k), in echelon coordinates."""
    p = flow.field.p

    def coords(target: Subspace, images: np.ndarray) -> np.ndarray:
        for row in images:
            if not target.contains(row):
                raise InvariantViolation("level images leave the restricted subspace")
        return target.coordinates(images).T.copy() if len(images) else np.zeros((target.dim, 0), dtype=np.int64)

    def rule(k):
        lv = flow.level(k)
        b0, b1, bs = levels(k), levels(k + 1), levels(k + flow.window)
        pi = coords(b0, _matmul(_basis_rows(b1), lv.pi.data.T, p))
        m = coords(b0, _matmul(_basis_rows(bs), lv.M.data.T, p))
        return b0.dim, pi.reshape(b0.dim, b1.dim), m.reshape(b0.dim, bs.dim)

    return ProfiniteFlow(flow.field, flow.window, rule, descriptor)


def quotient(flow: ProfiniteFlow, levels: Callable[[int], Subspace], descriptor: Descriptor) -> ProfiniteFlow:
    """V / X for a closed invariant X with p_k(X) = levels(k); level k is V_k / p_k(X)."""
    p = flow.field.p

    def q(k):
        return _basis_rows(levels(k).perp())

    def rinv(a):
        if a.shape[0] == 0:
            return np.zeros((a.shape[1], 0), dtype=np.int64)
        return solve_right_inverse(a, p)

    def rule(k):
        lv = flow.level(k)
        qk, q1, qs = q(k), q(k + 1), q(k + flow.window)
        pi = _matmul(_matmul(qk, lv.pi.data, p), rinv(q1), p)
        m = _matmul(_matmul(qk, lv.M.data, p), rinv(qs), p)
        return qk.shape[0], pi.reshape(qk.shape[0], q1.shape[0]), m.reshape(qk.shape[0], qs.shape[0])

    return ProfiniteFlow(flow.field, flow.window, rule, descriptor)


# ---------------------------------------------------------------- open subspaces

class OpenSubspace:
    """U = p_k^{-1}(s), stored by the annihilator of s in the dual of V_k."""

    __slots__ = ("flow", "level", "functionals", "_s")

    def __init__(self, flow: ProfiniteFlow, level: int, functionals):
        d = flow.dim(level)
        self.flow = flow
        self.level = level
        self.functionals = functionals if isinstance(functionals, Subspace) else Subspace(flow.field, d, functionals)
        if self.functionals.ambient_dim != d:
            raise DimensionError("functionals do not live on the given level")
        self._s = None

    @classmethod
    def from_subspace(cls, flow: ProfiniteFlow, level: int, s: Subspace) -> "OpenSubspace":
        return cls(flow, level, s.perp())

    @classmethod
    def whole(cls, flow: ProfiniteFlow) -> "OpenSubspace":
        return cls(flow, 0, Subspace.zero(flow.field, flow.dim(0)))

    @classmethod
    def hyperplane(cls, flow: ProfiniteFlow, level: int, normal) -> "OpenSubspace":
        return cls(flow, level, Subspace(flow.field, flow.dim(level), [list(normal)]))

    @classmethod
    def kernel_of_level(cls, flow: ProfiniteFlow, level: int) -> "OpenSubspace":
        return cls(flow, level, Subspace.full(flow.field, flow.dim(level)))

    @property
    def s(self) -> Subspace:
        if self._s is None:
            self._s = self.functionals.perp()
        return self._s

    @property
    def codim(self) -> int:
        return self.functionals.dim

    def at_level(self, j: int) -> "OpenSubspace":
        if j < self.level:
            raise ValueError("an open subspace can only be re-represented at a higher level")
        rows = self.flow.lift(self.functionals.basis, self.level, j)
        return OpenSubspace(self.flow, j, Subspace(self.flow.field, self.flow.dim(j), rows))

    def __and__(self, other: "OpenSubspace") -> "OpenSubspace":
        j = max(self.level, other.level)
        a, b = self.at_level(j), other.at_level(j)
        return OpenSubspace(self.flow, j, a.functionals + b.functionals)

    def same_as(self, other: "OpenSubspace") -> bool:
        j = max(self.level, other.level)
        return self.at_level(j).functionals == other.at_level(j).functionals

    def contains(self, other: "OpenSubspace") -> bool:
        j = max(self.level, other.level)
        return other.at_level(j).functionals.contains_subspace(self.at_level(j).functionals)

    def __repr__(self):
        return f"OpenSubspace(level={self.level}, codim={self.codim}, functionals={self.functionals.basis.tolist()})"


def intersect_all(flow: ProfiniteFlow, opens: Sequence[OpenSubspace]) -> OpenSubspace:
    out = OpenSubspace.whole(flow)
    for u in opens:
        out = out & u
    return out


def preimage_endo(flow: ProfiniteFlow, u: OpenSubspace) -> OpenSubspace:
    """phi^{-1} U, represented one window above U."""
    k = u.level
    rows = _matmul(u.functionals.basis, flow.level(k).M.data, flow.field.p)
    return OpenSubspace(flow, k + flow.window, Subspace(flow.field, flow.dim(k + flow.window), rows))


def preimage_power(flow: ProfiniteFlow, u: OpenSubspace, n: int) -> OpenSubspace:
    for _ in range(n):
        u = preimage_endo(flow, u)
    return u


# ---------------------------------------------------------------- cotrajectories

@dataclass
class Cotrajectory:
    base: OpenSubspace
    chain: list[OpenSubspace]  # chain[n-1] = C_n
    increments: list[int]  # increments[n-1] = dim(C_n / C_{n+1})
    stationary_at: int | None
    horizon: int
    certified_from: int | None = None  # increments from here on are final

    @property
    def codims(self) -> list[int]:
        return [c.codim for c in self.chain]

    def quotient_dims(self) -> list[int]:
        """dim(U / C_n) for n = 1..len(chain)."""
        c0 = self.base.codim
        return [c - c0 for c in self.codims]

    @property
    def certified(self) -> bool:
        return self.stationary_at is not None or (
            self.certified_from is not None and len(self.increments) >= self.certified_from
        )

    @property
    def limit(self) -> int:
        if self.stationary_at is not None:
            return 0
        return self.increments[-1] if self.increments else 0

    @property
    def last(self) -> OpenSubspace:
        return self.chain[-1]


def _certification_step(flow: ProfiniteFlow, u: OpenSubspace) -> int | None:
    if flow.cert is None:
        return None
    n = flow.cert.bound(u.level)
    return n if n <= MAX_CERTIFIED_STEPS else None


def cotrajectory(flow: ProfiniteFlow, u: OpenSubspace, horizon: int | None = None, certify: bool = True) -> Cotrajectory:
    """C_1 = U, C_{n+1} = U cap phi^{-1} C_n, computed until stationary or past the horizon.

    ``horizon`` counts increments.  With ``certify`` the horizon is raised to the
    flow's certification step when one is known.
    """
    cert_n = _certification_step(flow, u) if certify else None
    if horizon is None:
        horizon = cert_n if cert_n is not None else 16
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    steps = max(horizon, cert_n or 0)
    p = flow.field.p
    s = flow.window
    chain = [u]
    incs: list[int] = []
    stationary = None
    cur = u
    for n in range(1, steps + 1):
        j = u.level + n * s
        back = preimage_endo(flow, cur)
        rows = np.vstack([flow.lift(u.functionals.basis, u.level, j), back.functionals.basis])
        nxt = OpenSubspace(flow, j, Subspace(flow.field, flow.dim(j), rows))
        inc = nxt.codim - cur.codim
        if inc < 0:
            raise InvariantViolation("cotrajectory grew")
        chain.append(nxt)
        incs.append(inc)
        cur = nxt
        if inc == 0:
            stationary = n
            break
    return Cotrajectory(u, chain, incs, stationary, horizon, cert_n)


def h_star(flow: ProfiniteFlow, u: OpenSubspace, horizon: int | None = None) -> EntropyReport:
    traj = cotrajectory(flow, u, horizon)
    details = {"increments": traj.increments, "level": u.level}
    if traj.stationary_at is not None:
        return EntropyReport(0, EXACT, "cotrajectory", details={**details, "stationary_at": traj.stationary_at})
    if traj.certified:
        return EntropyReport(traj.limit, EXACT, "cotrajectory",
                             details={**details, "certified_from": traj.certified_from})
    return EntropyReport(traj.limit, HORIZON_LIMITED, "cotrajectory", details=details)


def is_nonstationary_cocyclic(flow: ProfiniteFlow, u: OpenSubspace, horizon: int = 16) -> tuple[bool, bool]:
    """(non-stationary, certified) for a codimension-1 U.

    A normal vector whose cyclic submodule is torsion generates at most tau
    dimensions, so an increment of 1 at step tau + 1 settles the question.
    """
    if u.codim != 1:
        raise ValueError("U is not cocyclic")
    if flow.cert is not None:
        steps = flow.cert.torsion_dim + 1
        traj = cotrajectory(flow, u, steps, certify=False)
        return traj.stationary_at is None, True
    traj = cotrajectory(flow, u, horizon, certify=False)
    return traj.stationary_at is None, traj.stationary_at is not None


# ---------------------------------------------------------------- hyperplane search

def _normals(p: int, d: int) -> Iterator[tuple[int, ...]]:
    """Nonzero vectors of K^d with first nonzero entry 1, lexicographically."""
    for v in itertools.product(range(p), repeat=d):
        nz = next((x for x in v if x), 0)
        if nz == 1:
            yield v


def _seed() -> int | None:
    raw = os.environ.get("FLOWCTL_SEED")
    return int(raw) if raw not in (None, "") else None


def hyperplanes(flow: ProfiniteFlow, max_level: int, max_candidates: int | None = None) -> Iterator[OpenSubspace]:
    """Codimension-1 open subspaces at levels 0..max_level, skipping those already seen lower.

    With ``max_candidates`` and FLOWCTL_SEED set, a level with more normals than the
    cap is sampled; without a seed the first ``max_candidates`` in order are used.
    """
    p = flow.field.p
    seed = _seed()
    rng = np.random.default_rng(seed) if seed is not None else None
    for lvl in range(max_level + 1):
        d = flow.dim(lvl)
        if d == 0:
            continue
        lower = (
            Subspace(flow.field, d, flow.projection(lvl, lvl - 1)) if lvl > 0 else Subspace.zero(flow.field, d)
        )
        if lower.dim == d:
            continue
        total = (p ** d - 1) // (p - 1)
        if max_candidates is not None and total > max_candidates and rng is not None:
            picks = sorted(set(int(x) for x in rng.integers(0, p ** d, size=4 * max_candidates)))
            cands = []
            for code in picks:
                v = [(code // p ** (d - 1 - i)) % p for i in range(d)]
                nz = next((x for x in v if x), 0)
                if nz:
                    v = [(x * pow(nz, -1, p)) % p for x in v]
                    cands.append(tuple(v))
            cands = sorted(set(cands))[:max_candidates]
        else:
            cands = _normals(p, d)
            if max_candidates is not None:
                cands = itertools.islice(cands, max_candidates)
        for v in cands:
            if lower.dim and lower.contains(v):
                continue
            yield OpenSubspace.hyperplane(flow, lvl, v)


def find_cocyclic_cotrajectories(flow: ProfiniteFlow, max_level: int = 2, horizon: int = 16,
                                 max_candidates: int | None = None, jobs: int = 1) -> list[OpenSubspace]:
    """Hyperplanes (in search order) whose cotrajectory is non-stationary."""
    cands = list(hyperplanes(flow, max_level, max_candidates))

    def test(u):
        return is_nonstationary_cocyclic(flow, u, horizon)[0]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            flags = list(ex.map(test, cands))
    else:
        flags = [test(u) for u in cands]
    return [u for u, ok in zip(cands, flags) if ok]


# ---------------------------------------------------------------- coindependence

@dataclass
class CoindependenceVerdict:
    coindependent: bool
    conclusive: bool  # a failure is always conclusive; success is verified up to the bounds
    failing_index: int | None = None
    failing_level: int | None = None
    level_bound: int = 0
    image_horizon: int = 0

    def __bool__(self):
        return self.coindependent


def image_annihilator(flow: ProfiniteFlow, traj: Cotrajectory, level: int) -> Subspace:
    """Functionals on V_level vanishing on the level image of the last computed C_n.

    This grows with n towards the annihilator of p_level(C(phi, U)).
    """
    c = traj.last
    j = max(c.level, level)
    c = c.at_level(j)
    pt = MatrixGF(flow.field, flow.projection(j, level).T)
    return preimage(pt, c.functionals)


def coindependent_check(flow: ProfiniteFlow, trajs: Sequence[Cotrajectory], level_bound: int = 4,
                        image_horizon: int | None = None) -> CoindependenceVerdict:
    """Is {C(phi, U_i)} coindependent?  Tested on level images up to ``level_bound``.

    C_i + (intersection of the others) = V fails at some level exactly when the two
    image annihilators meet nontrivially; images of a finite C_n contain the true
    images, so a failure found here is conclusive.
    """
    if not trajs:
        raise ValueError("need at least one cotrajectory")
    m = len(trajs)
    horizon = image_horizon if image_horizon is not None else max(t.horizon for t in trajs)
    if m == 1:
        return CoindependenceVerdict(True, True, level_bound=level_bound, image_horizon=horizon)
    full = [cotrajectory(flow, t.base, horizon) for t in trajs]
    for i in range(m):
        rest = intersect_all(flow, [t.base for jdx, t in enumerate(trajs) if jdx != i])
        others = cotrajectory(flow, rest, horizon)
        for lvl in range(level_bound + 1):
            a = image_annihilator(flow, full[i], lvl)
            b = image_annihilator(flow, others, lvl)
            if (a & b).dim:
                return CoindependenceVerdict(False, True, i, lvl, level_bound, horizon)
    return CoindependenceVerdict(True, False, level_bound=level_bound, image_horizon=horizon)


def open_family_coindependent(flow: ProfiniteFlow, opens: Sequence[OpenSubspace]) -> bool:
    """Exact test for open subspaces: no annihilator meets the sum of the others."""
    if len(opens) <= 1:
        return True
    j = max(u.level for u in opens)
    anns = [u.at_level(j).functionals for u in opens]
    zero = Subspace.zero(flow.field, flow.dim(j))
    for i, a in enumerate(anns):
        rest = zero
        for k, b in enumerate(anns):
            if k != i:
                rest = rest + b
        if (a & rest).dim:
            return False
    return True


# ---------------------------------------------------------------- witnesses

def lemma_check(flow: ProfiniteFlow, u: OpenSubspace, horizon: int = 10) -> dict[str, Any]:
    """For cocyclic non-stationary U: codim-1 preimages, their coindependence, H* = 1."""
    pre = [u]
    for _ in range(horizon):
        pre.append(preimage_endo(flow, pre[-1]))
    codims = [x.codim for x in pre]
    h = h_star(flow, u)
    return {
        "codim_one": all(c == 1 for c in codims),
        "preimages_coindependent": open_family_coindependent(flow, pre),
        "h_star": h.value,
        "h_star_status": h.status,
        "ok": all(c == 1 for c in codims) and open_family_coindependent(flow, pre) and h.value == 1,
    }


@dataclass
class ConjugacyWitness:
    base: OpenSubspace
    horizon: int
    level: int  # level on which the vectors e_n live
    normals: np.ndarray  # row n: the normal of phi^{-n} U lifted to ``level``
    vectors: np.ndarray  # column n: e_n, dual to the normals
    quotient_dims: list[int]  # dim(V / C_n), n = 1..horizon+1
    checks: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def bernoulli_conjugacy(flow: ProfiniteFlow, u: OpenSubspace, horizon: int = 10) -> ConjugacyWitness:
    """Truncated conjugacy of V / C(phi, U) with the left Bernoulli shift.

    v + C(phi, U) maps to (a_n(v))_n where a_n is the normal of phi^{-n} U.
    """
    if u.codim != 1:
        raise ValueError("U is not cocyclic")
    nonstat, _ = is_nonstationary_cocyclic(flow, u, max(horizon, 16))
    if not nonstat:
        raise ValueError("the cotrajectory of U is stationary")
    p = flow.field.p
    s = flow.window
    pre = [u]
    for _ in range(horizon + 1):
        pre.append(preimage_endo(flow, pre[-1]))
    top = pre[-1].level
    normals = np.vstack([flow.lift(x.functionals.basis, x.level, top) for x in pre])
    checks: dict[str, bool] = {}
    checks["codim_one"] = all(x.codim == 1 for x in pre)
    checks["normals_independent"] = rank_array(normals, p) == len(pre)
    traj = cotrajectory(flow, u, horizon + 1, certify=False)
    qd = [c.codim for c in traj.chain]
    checks["theta_isomorphism"] = qd[: horizon + 1] == list(range(1, horizon + 2))
    # a_i o phi = a_{i+1}, checked on the level matrices
    lower = top - s
    sq = True
    for i in range(horizon + 1):
        a_i = flow.lift(pre[i].functionals.basis, pre[i].level, lower)
        if not np.array_equal(_matmul(a_i, flow.level(lower).M.data, p), normals[i + 1: i + 2]):
            sq = False
    checks["square_commutes"] = sq
    e = solve_right_inverse(normals, p) if checks["normals_independent"] else np.zeros((flow.dim(top), len(pre)), dtype=np.int64)
    # phi(e_n) = e_{n-1} modulo C_{horizon+1}: read through a_0..a_horizon at the lower level
    shift = True
    if checks["normals_independent"]:
        img = _matmul(flow.level(lower).M.data, e, p)  # columns phi(e_n) on V_lower
        lowered = np.vstack([flow.lift(pre[i].functionals.basis, pre[i].level, lower) for i in range(horizon + 1)])
        got = _matmul(lowered, img, p)
        want = np.zeros_like(got)
        for n in range(1, len(pre)):
            want[n - 1, n] = 1
        shift = bool(np.array_equal(got, want))
    checks["shift_relation"] = shift
    return ConjugacyWitness(u, horizon, top, normals, e, qd, checks)


@dataclass
class WitnessResult:
    witnesses: list[OpenSubspace]
    cotrajectories: list[Cotrajectory]
    remainder: EntropyReport
    target: EntropyReport
    scanned: int
    coindependence: list[CoindependenceVerdict]

    @property
    def count(self) -> int:
        return len(self.witnesses)

    @property
    def remainder_zero(self) -> bool:
        return self.remainder.exact and self.remainder.value == 0


def theorem_a_witnesses(flow: ProfiniteFlow, k_max: int = 16, max_level: int = 2, horizon: int = 16,
                        level_bound: int | None = None, max_candidates: int | None = None) -> WitnessResult:
    """Greedy search for coindependent non-stationary cocyclic cotrajectories.

    A hyperplane U is taken when its cotrajectory is non-stationary, adding it
    raises H* of the running intersection by one, and C(phi, U) is coindependent
    with the intersection of the earlier witnesses.  The remainder entropy is
    H*(ker p_L) - m at L = max_level (raised to the level whose functionals
    generate the dual module); it is exact when both H* values are.
    """
    if flow.cert is not None:
        max_level = max(max_level, flow.cert.generator_level)
    level_bound = max_level + 1 if level_bound is None else level_bound
    target = h_star(flow, OpenSubspace.kernel_of_level(flow, max_level), horizon)
    wits: list[OpenSubspace] = []
    trajs: list[Cotrajectory] = []
    verdicts: list[CoindependenceVerdict] = []
    cur = OpenSubspace.whole(flow)
    scanned = 0

    def remainder():
        val = max(target.value - len(wits), 0)
        return EntropyReport(val, target.status, "witness-remainder",
                             details={"h_star_kernel": target.value, "witnesses": len(wits)})

    if target.exact and target.value == 0:
        return WitnessResult(wits, trajs, remainder(), target, scanned, verdicts)
    for u in hyperplanes(flow, max_level, max_candidates):
        if len(wits) >= k_max or (target.exact and len(wits) >= target.value):
            break
        scanned += 1
        j = max(cur.level, u.level)
        if cur.at_level(j).functionals.contains(u.at_level(j).functionals.basis[0]):
            continue
        nonstat, _ = is_nonstationary_cocyclic(flow, u, horizon)
        if not nonstat:
            continue
        joint = cur & u
        if h_star(flow, joint, horizon).value != len(wits) + 1:
            continue
        traj = cotrajectory(flow, u, horizon)
        if wits:
            verdict = coindependent_check(flow, [traj, cotrajectory(flow, cur, horizon)], level_bound)
            if not verdict:
                continue
            verdicts.append(verdict)
        wits.append(u)
        trajs.append(traj)
        cur = joint
    return WitnessResult(wits, trajs, remainder(), target, scanned, verdicts)


# ---------------------------------------------------------------- entropy

def structural_entropy(flow: ProfiniteFlow) -> int:
    d = flow.descriptor
    if d.structural is not None:
        return d.structural
    if d.module is not None:
        return module_rank(d.module)
    raise UnsupportedDescriptor(f"no structural entropy for {d.kind} flows")


def ent_star(flow: ProfiniteFlow, strategy: str = "structural", *, max_level: int = 2, horizon: int = 16,
             k_max: int = 16, max_candidates: int | None = None) -> EntropyReport:
    if strategy == "structural":
        return EntropyReport(structural_entropy(flow), EXACT, "structural",
                             details={"descriptor": flow.descriptor.kind})
    if strategy == "witness":
        res = theorem_a_witnesses(flow, k_max, max_level, horizon, max_candidates=max_candidates)
        details = {"witnesses": res.count, "remainder": res.remainder.as_dict(), "scanned": res.scanned}
        if res.remainder_zero:
            return EntropyReport(res.count, EXACT, "witness", res.witnesses, {**details, "certified_by": "remainder"})
        if res.count >= k_max:
            return EntropyReport(INFINITY, LOWER_BOUND, "witness", res.witnesses, {**details, "reached_k_max": True})
        status = LOWER_BOUND if flow.cert is not None else HORIZON_LIMITED
        return EntropyReport(res.count, status, "witness", res.witnesses, details)
    if strategy == "both":
        st = ent_star(flow, "structural")
        wt = ent_star(flow, "witness", max_level=max_level, horizon=horizon, k_max=k_max,
                      max_candidates=max_candidates)
        agree = wt.value == st.value
        return EntropyReport(st.value, EXACT, "both", wt.witnesses, {
            "structural": st.as_dict(), "witness": wt.as_dict(), "pipelines_agree": agree,
        })
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------- D+ and the Pinsker factor

@dataclass
class DPlus:
    """D+ through its level images p_k(D+) and their annihilators."""

    parent: ProfiniteFlow
    torsion_level: int
    torsion_functionals: Subspace  # the largest phi-dual-invariant subspace of W_L, L = torsion_level
    flow: ProfiniteFlow  # D+ with the restricted endomorphism
    _cache: dict = dc_field(default_factory=dict, repr=False)

    def annihilator(self, k: int) -> Subspace:
        """p_k(D+)^perp inside the dual of V_k."""
        hit = self._cache.get(("ann", k))
        if hit is None:
            L = self.torsion_level
            y = self.torsion_functionals
            f = self.parent
            if k <= L:
                pt = MatrixGF(f.field, f.projection(L, k).T)
                hit = preimage(pt, y)
            else:
                hit = Subspace(f.field, f.dim(k), f.lift(y.basis, L, k))
            self._cache[("ann", k)] = hit
        return hit

    def level(self, k: int) -> Subspace:
        hit = self._cache.get(("img", k))
        if hit is None:
            hit = self.annihilator(k).perp()
            self._cache[("img", k)] = hit
        return hit


def invariant_functionals(flow: ProfiniteFlow, level: int) -> Subspace:
    """Largest subspace Y of the dual of V_level with Y M contained in the lift of Y."""
    p = flow.field.p
    s = flow.window
    d = flow.dim(level)
    y = Subspace.full(flow.field, d)
    mt = MatrixGF(flow.field, flow.level(level).M.data.T)
    while True:
        lifted = Subspace(flow.field, flow.dim(level + s), flow.lift(y.basis, level, level + s))
        nxt = preimage(mt, lifted) & y
        if nxt.dim == y.dim:
            return nxt
        y = nxt


def d_plus(flow: ProfiniteFlow, level_bound: int = 8) -> DPlus:
    """The domain of completely positive entropy, computed from level data alone.

    The invariant functionals at a level that already holds every torsion functional
    annihilate exactly D+.
    """
    if flow.cert is None:
        raise UnsupportedDescriptor(f"D+ is not computed for {flow.descriptor.kind} flows")
    L = max(level_bound, flow.cert.torsion_ready())
    y = invariant_functionals(flow, L)
    holder: dict[str, DPlus] = {}
    c = flow.cert
    desc = Descriptor(
        "restricted",
        flow.descriptor.structural if flow.descriptor.structural is not None else None,
        Cert(c.free_rank, 0, c.level_offset, c.level_divisor, torsion_level=0, generator_level=c.generator_level),
        None,
        {"parent": flow, "what": "d_plus"},
    )
    if desc.structural is None and flow.descriptor.module is not None:
        desc = Descriptor(desc.kind, module_rank(flow.descriptor.module), desc.cert, None, desc.params)
    sub = restrict(flow, lambda k: holder["d"].level(k), desc)
    dp = DPlus(flow, L, y, sub)
    holder["d"] = dp
    return dp


def pinsker_factor(flow: ProfiniteFlow, level_bound: int = 8) -> ProfiniteFlow:
    """V / D+, which has zero entropy."""
    dp = d_plus(flow, level_bound)
    c = flow.cert
    desc = Descriptor("quotient", 0, Cert(0, c.torsion_dim, 0, 1, torsion_level=dp.torsion_level), None,
                      {"parent": flow, "what": "pinsker"})
    return quotient(flow, dp.level, desc)


def has_open_invariant_proper_subspace(flow: ProfiniteFlow, max_level: int = 4) -> OpenSubspace | None:
    """Search hyperplane-generated open invariant proper subspaces; return one if found."""
    for u in hyperplanes(flow, max_level):
        traj = cotrajectory(flow, u, certify=flow.cert is not None)
        if traj.stationary_at is not None:
            return traj.last
    return None
