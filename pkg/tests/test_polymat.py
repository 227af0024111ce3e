import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from linflow.gfp import PrimeField
from linflow.polymat import (
    ModulePresentation,
    Poly,
    PolyMatrix,
    canonical_form,
    hermite_form,
    module_rank,
    poly_gcd,
    polymatrix_rank,
    restrict_scalars,
    smith_form,
    split_vector,
    submodule_rank,
    torsion_free_quotient,
    torsion_submodule,
)

from corpus import presentations, structured
from oracles import invariant_factors, module_invariants

K2, K3 = PrimeField(2), PrimeField(3)


def P(K, *c):
    return Poly(K, c)


def pm(K, rows):
    return PolyMatrix.from_coeffs(K, rows)


def as_tuples(a: PolyMatrix):
    return [[tuple(x.coeffs) for x in r] for r in a.entries]


def test_gcd_examples():
    assert poly_gcd(P(K2, 0, 1), P(K2, 0, 0, 1)) == P(K2, 0, 1)
    assert poly_gcd(P(K2, 1, 1), P(K2, 1, 0, 1)) == P(K2, 1, 1)
    assert poly_gcd(P(K3, 2), P(K3, 1, 2, 1)) == P(K3, 1)


def test_poly_division():
    a, b = P(K3, 1, 2, 0, 1), P(K3, 2, 1)
    q, r = divmod(a, b)
    assert q * b + r == a and r.degree < b.degree


def test_hermite_examples():
    h = hermite_form(pm(K2, [[[0, 1], [1]]]))
    assert len(h.pivot_rows) == 1 and h.h[0, 0] == P(K2, 1)
    diag = pm(K2, [[[0, 1], []], [[], [0, 1]]])
    assert hermite_form(diag).h == diag
    z = PolyMatrix.zeros(K2, 2, 2)
    assert not any(x for r in hermite_form(z).h.entries for x in r)


def test_smith_examples():
    assert smith_form(pm(K2, [[[0, 1], []], [[], [0, 0, 1]]])).factors == (P(K2, 0, 1), P(K2, 0, 0, 1))
    assert smith_form(pm(K2, [[[0, 1], [1]], [[], [0, 1]]])).factors == (P(K2, 1), P(K2, 0, 0, 1))
    assert smith_form(pm(K2, [[[-1, 1]]])).factors == (P(K2, 1, 1),)


def test_module_rank_examples():
    assert module_rank(ModulePresentation.free(K2, 1)) == 1
    assert module_rank(ModulePresentation.cyclic(K2, [0, 0, 1])) == 0
    assert module_rank(ModulePresentation(K2, 2, pm(K2, [[[0, 1]], [[]]]))) == 1


def test_torsion_examples():
    w = ModulePresentation.diagonal(K2, [[0, 1]], 1)
    t = torsion_submodule(w)
    assert t.k_dim == 1 and t.factors == (P(K2, 0, 1),)
    assert torsion_submodule(ModulePresentation.free(K3, 2)).k_dim == 0
    t2 = torsion_submodule(ModulePresentation.cyclic(K2, [0, 0, 1]))
    assert t2.k_dim == 2
    q = torsion_free_quotient(w)
    assert module_rank(q) == 1 and torsion_submodule(q).k_dim == 0


def test_canonical_form_examples():
    w = ModulePresentation.cyclic(K2, [0, 0, 1])
    assert canonical_form((P(K2, 0, 0, 0, 1),), w) == (Poly.zero(K2),)
    rel = ModulePresentation(K3, 2, pm(K3, [[[1, 1]], [[2]]]))
    assert all(not x for x in canonical_form((P(K3, 1, 1), P(K3, 2)), rel))


def _smith_contract(a: PolyMatrix):
    s = smith_form(a)
    assert s.U @ a @ s.V == s.diagonal
    assert s.U @ s.U_inv == PolyMatrix.identity(a.field, a.rows)
    for i, d in enumerate(s.factors):
        assert d.lead == 1
        assert s.diagonal[i, i] == d
        if i:
            assert not (d % s.factors[i - 1])
    assert [tuple(d.coeffs) for d in s.factors] == invariant_factors(as_tuples(a), a.field.p)
    return s


def test_smith_exhaustive_2x2_gf2_degree_2():
    polys = [tuple(c) for n in range(4) for c in itertools.product(range(2), repeat=n) if not c or c[-1]]
    polys = sorted(set(polys))
    assert len(polys) == 8
    for entries in itertools.product(polys, repeat=4):
        a = pm(K2, [[list(entries[0]), list(entries[1])], [list(entries[2]), list(entries[3])]])
        _smith_contract(a)


def test_smith_exhaustive_1x1_and_1x2_gf3():
    polys = [c for n in range(3) for c in itertools.product(range(3), repeat=n) if not c or c[-1]]
    for a0, a1 in itertools.product(polys, repeat=2):
        _smith_contract(pm(K3, [[list(a0), list(a1)]]))


def poly_lists(p, max_deg=2):
    return st.lists(st.integers(0, p - 1), max_size=max_deg + 1)


def poly_matrices(p, max_rows=3, max_cols=3, max_deg=2):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(poly_lists(p, max_deg), min_size=c, max_size=c), min_size=r, max_size=r)))


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(lambda p: st.tuples(st.just(p), poly_matrices(p))))
def test_smith_contracts_random(pr):
    p, rows = pr
    _smith_contract(pm(PrimeField(p), rows))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(lambda p: st.tuples(st.just(p), poly_matrices(p))))
def test_hermite_preserves_column_span(pr):
    p, rows = pr
    K = PrimeField(p)
    a = pm(K, rows)
    h = hermite_form(a)
    prod = (a @ h.transform).columns()
    assert prod[: h.h.cols] == h.h.columns()
    assert all(not x for col in prod[h.h.cols:] for x in col)
    w_a = ModulePresentation(K, a.rows, a)
    w_h = ModulePresentation(K, a.rows, h.h)
    for col in a.columns():
        assert all(not x for x in canonical_form(col, w_h))
    for col in h.h.columns():
        assert all(not x for x in canonical_form(col, w_a))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(lambda p: st.tuples(st.just(p), poly_matrices(p))),
       st.data())
def test_canonical_form_idempotent_and_class_invariant(pr, data):
    p, rows = pr
    K = PrimeField(p)
    a = pm(K, rows)
    w = ModulePresentation(K, a.rows, a)
    v = tuple(Poly(K, data.draw(poly_lists(p, 4))) for _ in range(a.rows))
    u = tuple(Poly(K, data.draw(poly_lists(p, 2))) for _ in range(a.cols))
    c = canonical_form(v, w)
    assert canonical_form(c, w) == c
    shifted = tuple(x + y for x, y in zip(v, a.apply(u)))
    assert canonical_form(shifted, w) == c


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(lambda p: st.tuples(st.just(p), poly_matrices(p, 4, 4, 3))))
def test_rank_plus_torsion_count_is_g(pr):
    p, rows = pr
    K = PrimeField(p)
    a = pm(K, rows)
    w = ModulePresentation(K, a.rows, a)
    assert module_rank(w) + polymatrix_rank(a) == w.generators


def test_corpus_invariants_match_minor_oracle():
    for w in presentations() + structured():
        rel = as_tuples(w.relations)
        free, tdim, factors = module_invariants(w.generators, rel, w.field.p)
        assert module_rank(w) == free
        t = torsion_submodule(w)
        assert t.k_dim == tdim
        assert [tuple(d.coeffs) for d in t.factors] == factors


def test_restrict_scalars_rank_scales():
    # K[t] over K[t^2] is free of rank 2; K[t]/(t^3) stays torsion
    assert module_rank(restrict_scalars(ModulePresentation.free(K2, 1), 2)) == 2
    w = ModulePresentation.diagonal(K3, [[0, 0, 0, 1]], 1)
    r = restrict_scalars(w, 3)
    assert module_rank(r) == 3 and torsion_submodule(r).k_dim == 3


def test_split_vector_and_submodule_rank():
    v = (P(K2, 1, 1, 0, 1),)
    assert split_vector(v, 2) == (P(K2, 1), P(K2, 1, 1))
    w = ModulePresentation.free(K2, 2)
    assert submodule_rank(w, [(P(K2, 1), P(K2, 0, 1)), (P(K2, 0, 1), P(K2, 0, 0, 1))]) == 1
