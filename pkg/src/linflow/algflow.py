"""Algebraic flows: discrete K-spaces with an endomorphism.

Two representations are supported: a finite-dimensional space with an action
matrix, and a finitely presented K[t]-module where t acts as the endomorphism.
Exact entropy always comes from the module rank; the trajectory limit is kept as
an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .gfp import DimensionError, MatrixGF, PrimeField, Subspace, rank_array
from .polymat import (
    ModulePresentation,
    Poly,
    PolyMatrix,
    canonical_form,
    module_rank,
    restrict_scalars,
    split_vector,
    submodule_presentation,
    submodule_rank,
    torsion_free_quotient,
    torsion_submodule,
)
from .report import EXACT, HORIZON_LIMITED, EntropyReport


@dataclass(frozen=True, eq=False)
class FinDimFlow:
    field: PrimeField
    action: MatrixGF

    def __post_init__(self):
        if not isinstance(self.action, MatrixGF):
            object.__setattr__(self, "action", MatrixGF(self.field, self.action))
        if self.action.rows != self.action.cols:
            raise DimensionError("action matrix must be square")

    @property
    def dim(self) -> int:
        return self.action.rows

    def power(self, k: int) -> "FinDimFlow":
        m = MatrixGF.identity(self.field, self.dim)
        for _ in range(k):
            m = m @ self.action
        return FinDimFlow(self.field, m)

    def as_module(self) -> "ModuleFlow":
        return ModuleFlow(ModulePresentation.from_action(self.field, self.action))


@dataclass(frozen=True, eq=False)
class ModuleFlow:
    presentation: ModulePresentation

    @property
    def field(self) -> PrimeField:
        return self.presentation.field

    @property
    def generators(self) -> int:
        return self.presentation.generators

    def basis_element(self, i: int) -> tuple[Poly, ...]:
        K = self.field
        return canonical_form(
            tuple(Poly.one(K) if j == i else Poly.zero(K) for j in range(self.generators)),
            self.presentation,
        )


AlgebraicFlow = Union[FinDimFlow, ModuleFlow]


def zero_flow(field: PrimeField) -> ModuleFlow:
    return ModuleFlow(ModulePresentation(field, 0))


def canonical(flow: AlgebraicFlow, element) -> tuple:
    if isinstance(flow, FinDimFlow):
        v = tuple(int(x) % flow.field.p for x in element)
        if len(v) != flow.dim:
            raise DimensionError("element length does not match flow dimension")
        return v
    K = flow.field
    v = tuple(x if isinstance(x, Poly) else Poly(K, x) for x in element)
    return canonical_form(v, flow.presentation)


def act(flow: AlgebraicFlow, element, power: int = 1) -> tuple:
    """Apply the flow endomorphism ``power`` times."""
    if isinstance(flow, FinDimFlow):
        v = np.asarray(element, dtype=np.int64)
        for _ in range(power):
            v = flow.action @ v
        return tuple(int(x) for x in v)
    return canonical_form(tuple(x.shift(power) for x in element), flow.presentation)


def _encode(flow: AlgebraicFlow, elements: Sequence[tuple], width: int | None = None) -> np.ndarray:
    """Coefficient rows: coordinate i, degree j lands in column i * width + j."""
    if isinstance(flow, FinDimFlow):
        if not elements:
            return np.zeros((0, flow.dim), dtype=np.int64)
        return np.asarray(elements, dtype=np.int64).reshape(len(elements), flow.dim)
    g = flow.generators
    if width is None:
        width = max([len(x.coeffs) for e in elements for x in e] + [1])
    out = np.zeros((len(elements), g * width), dtype=np.int64)
    for r, e in enumerate(elements):
        for i, x in enumerate(e):
            out[r, i * width: i * width + len(x.coeffs)] = x.coeffs
    return out


def _decode(flow: AlgebraicFlow, row: np.ndarray, width: int) -> tuple:
    if isinstance(flow, FinDimFlow):
        return tuple(int(x) for x in row)
    K = flow.field
    return tuple(Poly(K, row[i * width:(i + 1) * width]) for i in range(flow.generators))


@dataclass(frozen=True, eq=False)
class FiniteSubspaceOfW:
    """The K-span of finitely many canonical elements of an algebraic flow."""

    flow: AlgebraicFlow
    generators: tuple

    @classmethod
    def span(cls, flow: AlgebraicFlow, elements) -> "FiniteSubspaceOfW":
        return cls(flow, tuple(canonical(flow, e) for e in elements))

    def _width(self, extra: Sequence[tuple] = ()) -> int:
        if isinstance(self.flow, FinDimFlow):
            return 1
        return max([len(x.coeffs) for e in (*self.generators, *extra) for x in e] + [1])

    @property
    def dim(self) -> int:
        if not self.generators:
            return 0
        return rank_array(_encode(self.flow, self.generators, self._width()), self.flow.field.p)

    def basis(self) -> list[tuple]:
        if not self.generators:
            return []
        w = self._width()
        rows = Subspace(self.flow.field, _encode(self.flow, self.generators[:1], w).shape[1],
                        _encode(self.flow, self.generators, w)).basis
        return [_decode(self.flow, r, w) for r in rows]

    def contains(self, element) -> bool:
        e = canonical(self.flow, element)
        w = self._width([e])
        p = self.flow.field.p
        base = _encode(self.flow, self.generators, w)
        both = np.vstack([base, _encode(self.flow, [e], w)])
        return rank_array(both, p) == rank_array(base, p)

    def contains_subspace(self, other: "FiniteSubspaceOfW") -> bool:
        return all(self.contains(e) for e in other.generators)

    def __add__(self, other: "FiniteSubspaceOfW") -> "FiniteSubspaceOfW":
        return FiniteSubspaceOfW(self.flow, self.generators + other.generators)

    def same_as(self, other: "FiniteSubspaceOfW") -> bool:
        return self.contains_subspace(other) and other.contains_subspace(self)


def _orbits(flow: AlgebraicFlow, f: FiniteSubspaceOfW, steps: int, power: int) -> list[list[tuple]]:
    """orbit[j] = images of the generators of f under psi^(power * j), j < steps."""
    layer = list(f.generators)
    out = [layer]
    for _ in range(steps - 1):
        layer = [act(flow, e, power) for e in layer]
        out.append(layer)
    return out


def _prefix_dims(flow: AlgebraicFlow, orbit: list[list[tuple]]) -> list[int]:
    """dim(T_n) for n = 1..len(orbit)."""
    p = flow.field.p
    if isinstance(flow, FinDimFlow):
        width = 1
    else:
        width = max([len(x.coeffs) for layer in orbit for e in layer for x in e] + [1])
    dims = []
    basis = None
    for layer in orbit:
        rows = _encode(flow, layer, width)
        stacked = rows if basis is None else np.vstack([basis, rows])
        basis = Subspace(flow.field, stacked.shape[1], stacked).basis if stacked.size else stacked
        dims.append(basis.shape[0])
    return dims


def trajectory(flow: AlgebraicFlow, f: FiniteSubspaceOfW, n: int, power: int = 1):
    """T_n = f + psi f + ... + psi^(n-1) f and the dimensions dim(T_k / f), k = 1..n."""
    if n < 1:
        raise ValueError("n must be positive")
    orbit = _orbits(flow, f, n, power)
    dims = _prefix_dims(flow, orbit)
    t_n = FiniteSubspaceOfW(flow, tuple(e for layer in orbit for e in layer))
    return t_n, tuple(d - dims[0] for d in dims)


def _certified_bound(flow: AlgebraicFlow, f: FiniteSubspaceOfW, power: int) -> int:
    if isinstance(flow, FinDimFlow):
        return 0
    if power == 1:
        return submodule_rank(flow.presentation, list(f.generators))
    # limit for psi^k is the rank of the K[t^k]-submodule generated by f
    w = restrict_scalars(flow.presentation, power)
    return submodule_rank(w, [split_vector(g, power) for g in f.generators])


def default_horizon(flow: AlgebraicFlow) -> int:
    if isinstance(flow, FinDimFlow):
        return flow.dim + 2
    w = flow.presentation
    return max(4 * max(w.generators, 1) * (1 + max(w.relations.max_degree, 0)), 4)


def h_alg(flow: AlgebraicFlow, f: FiniteSubspaceOfW, horizon: int | None = None,
          patience: int | None = None, power: int = 1) -> EntropyReport:
    """Limit of the trajectory increments dim(T_{n+1} / T_n) for psi^power."""
    horizon = default_horizon(flow) if horizon is None else horizon

    def increments(h):
        dims = _prefix_dims(flow, _orbits(flow, f, h + 1, power))
        return [dims[i + 1] - dims[i] for i in range(h)]

    deltas = increments(horizon)
    if patience is None:
        patience = (deltas[0] if deltas else 0) + 1
    patience = max(patience, 2)
    if horizon < patience:
        horizon = patience
        deltas = increments(horizon)
    bound = _certified_bound(flow, f, power)
    details = {"increments": deltas[:], "certified_bound": bound}
    # a plateau can still drop later, so only the certified bound ends the scan early
    for n, d in enumerate(deltas):
        if d == 0 or d == bound:
            return EntropyReport(d, EXACT, "trajectory-limit", details={**details, "stable_from": n + 1})
    last = deltas[-1] if deltas else 0
    run = 0
    while run < len(deltas) and deltas[-1 - run] == last:
        run += 1
    return EntropyReport(last, HORIZON_LIMITED, "trajectory-limit", details={**details, "stable_from": len(deltas) - run + 1})


def generator_span(flow: AlgebraicFlow) -> FiniteSubspaceOfW:
    """The K-span of the module generators (or of all of K^d)."""
    if isinstance(flow, FinDimFlow):
        return FiniteSubspaceOfW.span(flow, np.eye(flow.dim, dtype=np.int64).tolist())
    return FiniteSubspaceOfW(flow, tuple(flow.basis_element(i) for i in range(flow.generators)))


def ent_alg(flow: AlgebraicFlow, cross_check: bool = False) -> EntropyReport:
    if isinstance(flow, FinDimFlow):
        return EntropyReport(0, EXACT, "finite-dimensional")
    rep = EntropyReport(module_rank(flow.presentation), EXACT, "module-rank")
    if cross_check:
        lim = h_alg(flow, generator_span(flow))
        rep.details["trajectory_limit"] = lim.as_dict()
        rep.details["pipelines_agree"] = lim.value == rep.value
    return rep


def pinsker_subflow(flow: AlgebraicFlow):
    """Largest invariant subspace of zero entropy (the K[t]-torsion) and its embedding."""
    if isinstance(flow, FinDimFlow):
        return flow, MatrixGF.identity(flow.field, flow.dim)
    tors = torsion_submodule(flow.presentation)
    return ModuleFlow(tors.presentation), tors.embedding


def cpa_factor(flow: AlgebraicFlow) -> AlgebraicFlow:
    """W / P_alg(W): the factor of completely positive entropy."""
    if isinstance(flow, FinDimFlow):
        return FinDimFlow(flow.field, MatrixGF.zeros(flow.field, 0, 0))
    return ModuleFlow(torsion_free_quotient(flow.presentation))


def is_cpa(flow: AlgebraicFlow) -> bool:
    """Torsion-free (the zero flow counts as completely positive by convention)."""
    if isinstance(flow, FinDimFlow):
        return flow.dim == 0
    return not torsion_submodule(flow.presentation).factors


def is_zero_flow(flow: AlgebraicFlow) -> bool:
    if isinstance(flow, FinDimFlow):
        return flow.dim == 0
    return flow.presentation.k_dim() == 0


def invariant_submodule(flow: ModuleFlow, gens: Sequence[Sequence[Poly]]) -> tuple[ModuleFlow, ModuleFlow]:
    """The subflow generated by ``gens`` (t-saturated by construction) and the quotient flow."""
    w = flow.presentation
    gens = [canonical(flow, g) for g in gens]
    sub = ModuleFlow(submodule_presentation(w, gens))
    quo = ModuleFlow(w.with_relations(gens))
    return sub, quo


def image_in(flow: ModuleFlow, embedding: PolyMatrix, element: Sequence[Poly]) -> tuple:
    """Push an element of a subflow into ``flow`` along a generator embedding."""
    return canonical(flow, embedding.apply(tuple(element)))
