"""Brute-force reference computations, written without the package's algebra.

Polynomials are tuples of ints (ascending), trimmed; vectors are tuples of residues.
"""
from __future__ import annotations

import itertools
from functools import reduce


# ---------------------------------------------------------------- polynomials

def ptrim(a, p):
    a = [x % p for x in a]
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def padd(a, b, p):
    n = max(len(a), len(b))
    return ptrim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)], p)


def pneg(a, p):
    return ptrim([-x for x in a], p)


def pmul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return ptrim(out, p)


def pdivmod(a, b, p):
    a, b = list(ptrim(a, p)), ptrim(b, p)
    inv = pow(b[-1], p - 2, p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        c = a[-1] * inv % p
        k = len(a) - len(b)
        q[k] = c
        for i, y in enumerate(b):
            a[i + k] = (a[i + k] - c * y) % p
        a = list(ptrim(a, p))
    return ptrim(q, p), tuple(a)


def pmonic(a, p):
    if not a:
        return ()
    inv = pow(a[-1], p - 2, p)
    return ptrim([x * inv for x in a], p)


def pgcd(a, b, p):
    a, b = ptrim(a, p), ptrim(b, p)
    while b:
        a, b = b, pdivmod(a, b, p)[1]
    return pmonic(a, p)


def det(m, p):
    """Laplace expansion; m is a square list of polynomials."""
    n = len(m)
    if n == 0:
        return (1,)
    if n == 1:
        return m[0][0]
    acc = ()
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = pmul(m[0][j], det(minor, p), p)
        acc = padd(acc, term if j % 2 == 0 else pneg(term, p), p)
    return acc


def determinantal_divisors(rel, p):
    """D_k = monic gcd of all k x k minors, for k = 1.. while some minor is nonzero."""
    rows = len(rel)
    cols = len(rel[0]) if rows else 0
    out = []
    for k in range(1, min(rows, cols) + 1):
        g = ()
        for ri in itertools.combinations(range(rows), k):
            for ci in itertools.combinations(range(cols), k):
                g = pgcd(g, det([[rel[r][c] for c in ci] for r in ri], p), p)
        if not g:
            break
        out.append(g)
    return out


def invariant_factors(rel, p):
    """Nonzero invariant factors d_k = D_k / D_{k-1}, units included."""
    ds = determinantal_divisors(rel, p)
    prev, out = (1,), []
    for d in ds:
        out.append(pmonic(pdivmod(d, prev, p)[0], p))
        prev = d
    return out


def module_invariants(g, rel, p):
    """(free rank, K-dimension of the torsion, non-unit invariant factors) of K[t]^g / colspan(rel)."""
    fs = invariant_factors(rel, p) if rel and rel[0] else []
    nonunit = [f for f in fs if len(f) > 1]
    return g - len(fs), sum(len(f) - 1 for f in nonunit), nonunit


# ---------------------------------------------------------------- vector spaces

def all_vectors(p, d):
    return list(itertools.product(range(p), repeat=d))


def vadd(u, v, p):
    return tuple((a + b) % p for a, b in zip(u, v))


def span(vectors, p, d):
    """The set of all linear combinations, by closure."""
    out = {tuple([0] * d)}
    for v in vectors:
        mult = [tuple(c * x % p for x in v) for c in range(p)]
        out = {vadd(w, m, p) for w in out for m in mult}
    return frozenset(out)


def all_subspaces(p, d):
    """Every subspace of K^d as a frozenset of vectors."""
    found = {span([], p, d)}
    frontier = list(found)
    while frontier:
        nxt = []
        for s in frontier:
            for v in all_vectors(p, d):
                if v not in s:
                    t = span(list(s) + [v], p, d) if len(s) < 64 else _extend(s, v, p)
                    if t not in found:
                        found.add(t)
                        nxt.append(t)
        frontier = nxt
    return found


def _extend(s, v, p):
    return frozenset(vadd(w, tuple(c * x % p for x in v), p) for w in s for c in range(p))


def dim_of(s, p):
    n, k = len(s), 0
    while p ** k < n:
        k += 1
    return k


def apply(a, v, p):
    return tuple(sum(a[i][j] * v[j] for j in range(len(v))) % p for i in range(len(a)))


def invariant_subspace_sets(a, p):
    d = len(a)
    return [s for s in all_subspaces(p, d) if all(apply(a, v, p) in s for v in s)]


def lattice_codi(subs, p):
    """Largest coindependent family among non-top elements, by brute force over subsets.

    A family is coindependent when every member joined with the meet of the others is the top.
    """
    top = max(subs, key=len)
    pool = [s for s in subs if s != top]

    def join(a, b):
        return frozenset(vadd(x, y, p) for x in a for y in b)

    best = 0
    for r in range(1, len(pool) + 1):
        ok_any = False
        for fam in itertools.combinations(pool, r):
            good = True
            for i, x in enumerate(fam):
                rest = [y for j, y in enumerate(fam) if j != i]
                meet = reduce(frozenset.intersection, rest, top)
                if join(x, meet) != top:
                    good = False
                    break
            if good:
                ok_any = True
                break
        if not ok_any:
            break
        best = r
    return best


def rank_mod_p(rows, p):
    m = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] % p), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][col], p - 2, p)
        m[rank] = [x * inv % p for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][col] % p:
                c = m[i][col]
                m[i] = [(x - c * y) % p for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank
