"""Duality between module flows and profinite flows, through explicit level pairings.

For W = K[t]/(d_1) + ... + K[t]/(d_r) + K[t]^f (Smith coordinates), level k of the
dual is the K-dual of W_k = span{t^j e_i : j < min(k, deg d_i)} + span{t^j e_i : j < k},
basis ordered factor by factor, torsion factors first.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field
from typing import Any, Sequence

import numpy as np

from .algflow import FiniteSubspaceOfW, ModuleFlow, canonical, ent_alg, is_cpa, trajectory
from .gfp import DimensionError, MatrixGF, PrimeField, Subspace, _matmul, preimage
from .polymat import ModulePresentation, Poly, PolyMatrix, torsion_submodule
from .topflow import (
    Cert,
    Descriptor,
    OpenSubspace,
    ProfiniteFlow,
    cotrajectory,
    d_plus,
    ent_star,
    hyperplanes,
    pinsker_factor,
)


@dataclass(frozen=True)
class Component:
    modulus: Poly | None  # None for a free component
    source: int  # row of the Smith transform feeding this component

    @property
    def degree(self) -> int | None:
        return None if self.modulus is None else len(self.modulus.coeffs) - 1

    def width(self, k: int) -> int:
        return k if self.modulus is None else min(k, self.degree)


class DualityContext:
    """A module flow W, its dual profinite flow and the level pairings between them."""

    def __init__(self, module: ModulePresentation):
        self.module = module
        self.field: PrimeField = module.field
        s = module.smith
        comps = [Component(d, i) for i, d in enumerate(s.factors) if not d.is_unit()]
        comps += [Component(None, i) for i in range(len(s.factors), module.generators)]
        self.components: tuple[Component, ...] = tuple(comps)
        self.smith = s
        self.algebraic = ModuleFlow(module)
        tdims = [c.degree for c in comps if c.modulus is not None]
        cert = Cert(
            free_rank=s.free_rank,
            torsion_dim=sum(tdims),
            torsion_level=max(tdims, default=0),
            generator_level=1,
        )
        desc = Descriptor("dual_of_module", s.free_rank, cert, module, {"context": self})
        self.flow = ProfiniteFlow(self.field, 1, self._rule, desc)

    # level layout
    def offsets(self, k: int) -> list[int]:
        out, acc = [], 0
        for c in self.components:
            out.append(acc)
            acc += c.width(k)
        out.append(acc)
        return out

    def level_dim(self, k: int) -> int:
        return self.offsets(k)[-1]

    def _psi(self, k: int) -> np.ndarray:
        """Multiplication by t, W_k -> W_{k+1}, as a d_{k+1} x d_k array."""
        p = self.field.p
        src, dst = self.offsets(k), self.offsets(k + 1)
        out = np.zeros((dst[-1], src[-1]), dtype=np.int64)
        for ci, c in enumerate(self.components):
            for j in range(c.width(k)):
                col = src[ci] + j
                if c.modulus is None or j + 1 < c.degree:
                    out[dst[ci] + j + 1, col] = 1
                else:
                    for m, coef in enumerate(c.modulus.coeffs[:-1]):
                        out[dst[ci] + m, col] = (-coef) % p
        return out

    def _incl(self, k: int) -> np.ndarray:
        src, dst = self.offsets(k), self.offsets(k + 1)
        out = np.zeros((dst[-1], src[-1]), dtype=np.int64)
        for ci, c in enumerate(self.components):
            for j in range(c.width(k)):
                out[dst[ci] + j, src[ci] + j] = 1
        return out

    def _rule(self, k: int):
        return self.level_dim(k), self._incl(k).T, self._psi(k).T

    # element <-> functional
    def smith_coordinates(self, v: Sequence[Poly]) -> list[Poly]:
        """Reduced coordinates of v in the decomposed module, one per component."""
        y = self.smith.U.apply(tuple(v))
        out = []
        for c in self.components:
            x = y[c.source]
            out.append(x if c.modulus is None else x % c.modulus)
        return out

    def min_level(self, v: Sequence[Poly]) -> int:
        k = 0
        for c, x in zip(self.components, self.smith_coordinates(v)):
            k = max(k, len(x.coeffs))
        return k

    def element_to_functional(self, v: Sequence[Poly], k: int) -> np.ndarray:
        off = self.offsets(k)
        row = np.zeros(off[-1], dtype=np.int64)
        for ci, (c, x) in enumerate(zip(self.components, self.smith_coordinates(v))):
            if len(x.coeffs) > c.width(k):
                raise DimensionError(f"element does not lie in level {k}")
            row[off[ci]: off[ci] + len(x.coeffs)] = x.coeffs
        return row

    def functional_to_element(self, row: Sequence[int], k: int) -> tuple[Poly, ...]:
        K = self.field
        off = self.offsets(k)
        row = np.asarray(row, dtype=np.int64)
        g = self.module.generators
        y = [Poly.zero(K) for _ in range(g)]
        for ci, c in enumerate(self.components):
            y[c.source] = Poly(K, row[off[ci]: off[ci + 1]])
        return canonical(self.algebraic, self.smith.U_inv.apply(tuple(y)))


def dual_of_module(w: ModulePresentation) -> DualityContext:
    return DualityContext(w)


def annihilator(ctx: DualityContext, u: OpenSubspace) -> FiniteSubspaceOfW:
    """U^perp as a finite-dimensional subspace of W."""
    rows = u.functionals.basis
    return FiniteSubspaceOfW(ctx.algebraic, tuple(ctx.functional_to_element(r, u.level) for r in rows))


def co_annihilator(ctx: DualityContext, f: FiniteSubspaceOfW, level: int | None = None) -> OpenSubspace:
    """The open subspace of the dual killed by every element of f."""
    need = max([ctx.min_level(v) for v in f.generators] + [0])
    k = need if level is None else level
    if k < need:
        raise ValueError(f"f needs level {need}")
    d = ctx.level_dim(k)
    rows = [ctx.element_to_functional(v, k) for v in f.generators]
    return OpenSubspace(ctx.flow, k, Subspace(ctx.field, d, rows if rows else None))


def _rng():
    raw = os.environ.get("FLOWCTL_SEED")
    return np.random.default_rng(int(raw) if raw else 0)


def sample_open_subspaces(ctx: DualityContext, count: int = 3, max_level: int = 2, rng=None) -> list[OpenSubspace]:
    """Open subspaces of codimension 1..3 at levels 1..max_level, drawn from a seeded generator."""
    rng = _rng() if rng is None else rng
    p = ctx.field.p
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count:
        tries += 1
        k = int(rng.integers(1, max_level + 1))
        d = ctx.level_dim(k)
        if d == 0:
            continue
        c = int(rng.integers(1, min(3, d) + 1))
        rows = rng.integers(0, p, size=(c, d))
        sub = Subspace(ctx.field, d, rows)
        if sub.dim:
            out.append(OpenSubspace(ctx.flow, k, sub))
    return out


def per_subspace_identity(ctx: DualityContext, u: OpenSubspace, n_max: int = 8) -> dict[str, Any]:
    """Compare dim(U / C_n) with dim(T_n(psi, U^perp) / U^perp) for n = 1..n_max."""
    traj = cotrajectory(ctx.flow, u, n_max, certify=False)
    top = traj.quotient_dims()
    top = (top + [top[-1]] * n_max)[:n_max]  # a stationary chain stays put
    f = annihilator(ctx, u)
    _, alg = trajectory(ctx.algebraic, f, n_max)
    return {"level": u.level, "codim": u.codim, "topological": top, "algebraic": list(alg), "equal": top == list(alg)}


def bridge_check(w: ModulePresentation, n_max: int = 8, samples: int = 3, max_level: int = 2,
                 ctx: DualityContext | None = None) -> dict[str, Any]:
    ctx = dual_of_module(w) if ctx is None else ctx
    alg = ent_alg(ctx.algebraic)
    st = ent_star(ctx.flow, "structural")
    wt = ent_star(ctx.flow, "witness", max_level=max_level)
    evidence = [per_subspace_identity(ctx, u, n_max) for u in sample_open_subspaces(ctx, samples, max_level)]
    return {
        "ent_alg": alg.as_dict(),
        "ent_star_structural": st.as_dict(),
        "ent_star_witness": wt.as_dict(),
        "bridge_equal": alg.value == st.value == wt.value and wt.exact,
        "per_subspace": evidence,
        "per_subspace_equal": all(e["equal"] for e in evidence),
    }


def torsion_annihilator(ctx: DualityContext, k: int) -> Subspace:
    """Functionals on V_k that come from torsion elements: W_k cap T, module side."""
    tors = torsion_submodule(ctx.module)
    K = ctx.field
    elems = []
    for col, d in zip(tors.embedding.columns(), tors.factors):
        for j in range(len(d.coeffs) - 1):
            elems.append(canonical(ctx.algebraic, tuple(x.shift(j) for x in col)))
    top = max([ctx.min_level(e) for e in elems] + [k])
    d_top = ctx.level_dim(top)
    t_sub = Subspace(K, d_top, [ctx.element_to_functional(e, top) for e in elems] if elems else None)
    pt = MatrixGF(K, ctx.flow.projection(top, k).T)
    return preimage(pt, t_sub)


def theorem_b_check(w: ModulePresentation, level_bound: int = 8, ctx: DualityContext | None = None) -> dict[str, Any]:
    """D+ from level data against the annihilator of the torsion submodule, level by level."""
    ctx = dual_of_module(w) if ctx is None else ctx
    dp = d_plus(ctx.flow, level_bound)
    per_level = []
    for k in range(level_bound + 1):
        top = dp.annihilator(k)
        mod = torsion_annihilator(ctx, k)
        per_level.append({"level": k, "d_plus_dim": dp.level(k).dim, "equal": top == mod})
    tors_dim = torsion_submodule(w).k_dim
    far = max(level_bound, ctx.flow.cert.torsion_ready()) + 1
    pf = pinsker_factor(ctx.flow, level_bound)
    whole = all(dp.annihilator(k).dim == 0 for k in range(far + 1))
    return {
        "levels": per_level,
        "levels_equal": all(x["equal"] for x in per_level),
        "pinsker_dim": pf.dim(far),
        "torsion_dim": tors_dim,
        "pinsker_matches": pf.dim(far) == tors_dim,
        "cpa_iff_whole": is_cpa(ctx.algebraic) == whole,
    }


def zero_entropy_duality_check(w: ModulePresentation, max_level: int = 2, ctx: DualityContext | None = None) -> dict[str, Any]:
    ctx = dual_of_module(w) if ctx is None else ctx
    alg = ent_alg(ctx.algebraic).value
    top = ent_star(ctx.flow, "witness", max_level=max_level)
    return {
        "ent_alg": alg,
        "ent_star": top.as_dict(),
        "zero_iff_zero": (alg == 0) == (top.value == 0) and top.exact,
    }
