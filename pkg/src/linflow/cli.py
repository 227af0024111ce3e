"""flowctl: compute entropies, Pinsker data, Bernoulli witnesses, duality checks and lattices."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable

import numpy as np

from . import __version__
from .algflow import ModuleFlow, cpa_factor, ent_alg, is_cpa, pinsker_subflow
from .documents import DocumentError, FlowDocument, algebraic_flow, loads, module_presentation, profinite_flow
from .duality import bridge_check, dual_of_module, theorem_b_check, zero_entropy_duality_check
from .lattice import (
    cork,
    couniform_certificate,
    dual_goldie_dim,
    goldie_dim,
    invariant_subspaces,
    is_couniform,
    max_coindependent,
)
from .report import UnsupportedDescriptor
from .topflow import (
    InvariantViolation,
    bernoulli_conjugacy,
    d_plus,
    ent_star,
    lemma_check,
    pinsker_factor,
    theorem_a_witnesses,
)

EXIT_OK, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_INTERNAL = 0, 2, 3, 4


def _plain(x: Any) -> Any:
    """Convert numpy values and containers into JSON-ready Python objects."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    return x


# ---------------------------------------------------------------- commands

def cmd_entropy(doc: FlowDocument, args) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if doc.kind in ("findim", "module"):
        out["algebraic"] = ent_alg(algebraic_flow(doc), cross_check=True).as_dict()
    top = profinite_flow(doc)
    rep = ent_star(top, args.strategy, max_level=args.max_level, horizon=args.horizon)
    out["topological"] = rep.as_dict()
    try:
        ck = cork(top, max_level=args.max_level, level_bound=args.levels)
    except UnsupportedDescriptor:
        out["corank"], out["corank_equals_entropy"] = None, None
    else:
        out["corank"] = ck.as_dict()
        out["corank_equals_entropy"] = ck.value == rep.value
    if "algebraic" in out:
        out["bridge_equal"] = out["algebraic"]["value"] == out["topological"]["value"]
    return out


def cmd_pinsker(doc: FlowDocument, args) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if doc.kind in ("findim", "module"):
        flow = algebraic_flow(doc)
        sub, emb = pinsker_subflow(flow)
        if isinstance(flow, ModuleFlow):
            tors_dim = sub.presentation.k_dim()
            factors = [list(d.coeffs) for d in sub.presentation.smith.factors if not d.is_unit()]
        else:
            tors_dim, factors = flow.dim, []
        cpa = cpa_factor(flow)
        out["algebraic"] = {
            "pinsker_dim": tors_dim,
            "torsion_factors": factors,
            "is_cpa": is_cpa(flow),
            "ent": ent_alg(flow).value,
            "ent_cpa_factor": ent_alg(cpa).value,
            "ent_equal": ent_alg(flow).value == ent_alg(cpa).value,
        }
    top = profinite_flow(doc)
    dp = d_plus(top, args.levels)
    pf = pinsker_factor(top, args.levels)
    levels = list(range(args.levels + 1))
    whole = ent_star(top, "witness", max_level=args.max_level, horizon=args.horizon)
    restricted = ent_star(dp.flow, "witness", max_level=args.max_level, horizon=args.horizon)
    quotient = ent_star(pf, "witness", max_level=args.max_level, horizon=args.horizon)
    out["topological"] = {
        "d_plus_level_dims": [dp.level(k).dim for k in levels],
        "pinsker_factor_level_dims": [pf.dim(k) for k in levels],
        "ent_star": whole.as_dict(),
        "ent_star_d_plus": restricted.as_dict(),
        "ent_star_pinsker_factor": quotient.as_dict(),
        "ent_equal": whole.value == restricted.value,
        "pinsker_zero": quotient.value == 0 and quotient.exact,
    }
    return out


def cmd_bernoulli(doc: FlowDocument, args) -> dict[str, Any]:
    top = profinite_flow(doc)
    res = theorem_a_witnesses(top, args.max_witnesses, args.max_level, args.horizon)
    wits = []
    for u in res.witnesses:
        conj = bernoulli_conjugacy(top, u, args.conjugacy_horizon)
        lem = lemma_check(top, u, args.conjugacy_horizon)
        wits.append({
            "level": u.level,
            "normal": u.functionals.basis[0].tolist(),
            "conjugacy": {
                "vector_level": conj.level,
                "e": conj.vectors.T.tolist(),
                "quotient_dims": conj.quotient_dims,
                "checks": conj.checks,
                "ok": conj.ok,
            },
            "lemma": lem,
        })
    return {
        "witness_count": res.count,
        "witnesses": wits,
        "remainder": res.remainder.as_dict(),
        "remainder_zero": res.remainder_zero,
        "coindependent": all(bool(v) for v in res.coindependence),
    }


def cmd_bridge(doc: FlowDocument, args) -> dict[str, Any]:
    if doc.kind != "module":
        raise UnsupportedDescriptor("bridge needs a module document")
    w = module_presentation(doc)
    ctx = dual_of_module(w)
    b = bridge_check(w, n_max=args.horizon, max_level=args.max_level, ctx=ctx)
    tb = theorem_b_check(w, args.levels, ctx=ctx)
    z = zero_entropy_duality_check(w, args.max_level, ctx=ctx)
    return {
        "bridge": b,
        "theorem_b": tb,
        "zero_entropy": z,
        "bridge_equal": b["bridge_equal"] and b["per_subspace_equal"],
        "theorem_b_holds": tb["levels_equal"] and tb["pinsker_matches"] and tb["cpa_iff_whole"],
        "zero_entropy_equivalence": z["zero_iff_zero"],
    }


def cmd_lattice(doc: FlowDocument, args) -> dict[str, Any]:
    if doc.kind != "findim":
        raise UnsupportedDescriptor("lattice needs a findim document")
    flow = algebraic_flow(doc)
    lat = invariant_subspaces(flow)
    codi = dual_goldie_dim(lat)
    out: dict[str, Any] = {
        "size": len(lat),
        "elements": [s.basis.tolist() for s in lat.elements],
        "dual_goldie_dim": codi,
        "goldie_dim": goldie_dim(lat),
        "couniform_elements": [i for i in range(len(lat)) if is_couniform(lat, i)],
        "couniform": is_couniform(lat),
        "max_coindependent": max_coindependent(lat),
    }
    if args.exhaustive:
        cert = couniform_certificate(lat)
        out["certificate"] = cert
        out["certified_equal"] = cert is not None and len(cert) == codi
    return out


COMMANDS: dict[str, Callable] = {
    "entropy": cmd_entropy,
    "pinsker": cmd_pinsker,
    "bernoulli": cmd_bernoulli,
    "bridge": cmd_bridge,
    "lattice": cmd_lattice,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowctl", description=__doc__)
    ap.add_argument("--version", action="version", version=f"flowctl {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="FILE")
        sp.add_argument("--out", default=None)
        sp.add_argument("--horizon", type=int, default=16)
        sp.add_argument("--max-level", type=int, default=2)
        sp.add_argument("--strategy", choices=("structural", "witness", "both"), default="both")
        sp.add_argument("--levels", type=int, default=8)
        sp.add_argument("--max-witnesses", type=int, default=16)
        sp.add_argument("--conjugacy-horizon", type=int, default=10)
        sp.add_argument("--exhaustive", action="store_true")
        sp.add_argument("--jobs", type=int, default=1)
    return ap


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _run_one(command: str, path: str, args) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise _Failure(EXIT_PARSE, f"{path}: {exc}") from exc
    try:
        doc = loads(raw.decode("utf-8"))
    except (DocumentError, UnicodeDecodeError) as exc:
        raise _Failure(EXIT_PARSE, f"{path}: {exc}") from exc
    try:
        result = COMMANDS[command](doc, args)
    except DocumentError as exc:
        raise _Failure(EXIT_PARSE, f"{path}: {exc}") from exc
    except UnsupportedDescriptor as exc:
        raise _Failure(EXIT_UNSUPPORTED, f"{path}: unsupported: {exc}") from exc
    except InvariantViolation as exc:
        raise _Failure(EXIT_INTERNAL, f"{path}: invariant violated: {exc}") from exc
    return {
        "input": path,
        "sha256": hashlib.sha256(raw).hexdigest(),
        "label": doc.label,
        "kind": doc.kind,
        "field": doc.field,
        "result": _plain(result),
    }


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    start = time.perf_counter()
    try:
        if args.jobs > 1 and len(args.inputs) > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as ex:
                results = list(ex.map(lambda p: _run_one(args.command, p, args), args.inputs))
        else:
            results = [_run_one(args.command, p, args) for p in args.inputs]
    except _Failure as exc:
        print(f"flowctl: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # anything else is a bug on our side
        print(f"flowctl: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    report = {
        "tool": "flowctl",
        "version": __version__,
        "command": args.command,
        "options": {
            "horizon": args.horizon,
            "max_level": args.max_level,
            "strategy": args.strategy,
            "levels": args.levels,
            "max_witnesses": args.max_witnesses,
            "conjugacy_horizon": args.conjugacy_horizon,
            "exhaustive": args.exhaustive,
        },
        "results": results,
        "timing": {"seconds": round(time.perf_counter() - start, 6)},
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
