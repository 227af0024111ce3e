import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from linflow.cli import main
from linflow.documents import DocumentError, dumps, loads, parse, serialize

DOCS = {
    "bernoulli.json": {"field": 2, "kind": "profinite", "builtin": {"name": "bernoulli", "copies": 1}},
    "bernoulli2.json": {"field": 2, "kind": "profinite", "builtin": {"name": "bernoulli", "copies": 2}},
    "findim.json": {"field": 2, "kind": "findim", "action": [[0, 1], [0, 0]], "label": "J2"},
    "identity.json": {"field": 2, "kind": "findim", "action": [[1, 0], [0, 1]]},
    "module_rank2.json": {"field": 3, "kind": "module", "generators": 2, "relations": [[], []]},
    "mixed.json": {"field": 2, "kind": "module", "generators": 2, "relations": [[[0, 0, 1]], [[]]]},
    "torsion.json": {"field": 2, "kind": "module", "generators": 1, "relations": [[[0, 0, 1]]]},
    "diag.json": {"field": 2, "kind": "module", "generators": 2, "relations": [[[0, 1]], [[0]]]},
    "periodic.json": {"field": 2, "kind": "profinite", "window": 1,
                      "period": [{"dim": 1, "projection": [[1]], "action": [[1]]}]},
}


@pytest.fixture(scope="module")
def docs(tmp_path_factory):
    d = tmp_path_factory.mktemp("docs")
    for name, body in DOCS.items():
        (d / name).write_text(json.dumps(body))
    (d / "broken.json").write_text("{nope")
    (d / "notprime.json").write_text(json.dumps({"field": 4, "kind": "findim", "action": [[1]]}))
    return d


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == 0 and out.out else None), out.err


def result(report):
    return report["results"][0]["result"]


def test_entropy_examples(docs, capsys):
    code, rep, _ = run(["entropy", "--in", str(docs / "bernoulli.json"), "--strategy", "both"], capsys)
    r = result(rep)["topological"]
    assert code == 0 and r["value"] == 1 and r["status"] == "exact"
    assert r["details"]["structural"]["status"] == r["details"]["witness"]["status"] == "exact"
    assert result(rep)["corank_equals_entropy"] is True
    _, rep, _ = run(["entropy", "--in", str(docs / "findim.json")], capsys)
    assert result(rep)["algebraic"]["value"] == 0 and result(rep)["topological"]["value"] == 0
    _, rep, _ = run(["entropy", "--in", str(docs / "module_rank2.json")], capsys)
    assert result(rep)["topological"]["value"] == 2 and result(rep)["bridge_equal"]


def test_pinsker_examples(docs, capsys):
    _, rep, _ = run(["pinsker", "--in", str(docs / "mixed.json")], capsys)
    r = result(rep)
    assert r["algebraic"]["pinsker_dim"] == 2 and r["algebraic"]["torsion_factors"] == [[0, 0, 1]]
    assert r["topological"]["ent_equal"] and r["topological"]["pinsker_zero"]
    _, rep, _ = run(["pinsker", "--in", str(docs / "module_rank2.json")], capsys)
    assert result(rep)["algebraic"]["pinsker_dim"] == 0
    _, rep, _ = run(["pinsker", "--in", str(docs / "torsion.json")], capsys)
    r = result(rep)
    assert r["algebraic"]["pinsker_dim"] == 2 and r["topological"]["d_plus_level_dims"][-1] == 0


def test_bernoulli_examples(docs, capsys):
    _, rep, _ = run(["bernoulli", "--in", str(docs / "bernoulli2.json")], capsys)
    assert result(rep)["witness_count"] == 2
    _, rep, _ = run(["bernoulli", "--in", str(docs / "findim.json")], capsys)
    assert result(rep)["witness_count"] == 0
    _, rep, _ = run(["bernoulli", "--in", str(docs / "bernoulli.json")], capsys)
    w = result(rep)["witnesses"]
    assert len(w) == 1 and w[0]["conjugacy"]["ok"] and w[0]["lemma"]["ok"]
    assert w[0]["conjugacy"]["e"][0][:3] == [1, 0, 0]


def test_bridge_and_lattice_examples(docs, capsys):
    _, rep, _ = run(["bridge", "--in", str(docs / "diag.json")], capsys)
    r = result(rep)
    assert r["bridge_equal"] and r["theorem_b_holds"] and r["zero_entropy_equivalence"]
    _, rep, _ = run(["lattice", "--in", str(docs / "findim.json"), "--exhaustive"], capsys)
    assert result(rep)["dual_goldie_dim"] == 1 and result(rep)["certified_equal"]
    _, rep, _ = run(["lattice", "--in", str(docs / "identity.json")], capsys)
    assert result(rep)["dual_goldie_dim"] == 2 and result(rep)["size"] == 5


def test_exit_codes(docs, capsys):
    assert run(["entropy", "--in", str(docs / "broken.json")], capsys)[0] == 2
    assert run(["entropy", "--in", str(docs / "notprime.json")], capsys)[0] == 2
    assert run(["entropy", "--in", str(docs / "missing.json")], capsys)[0] == 2
    code, _, err = run(["bridge", "--in", str(docs / "findim.json")], capsys)
    assert code == 3 and "unsupported" in err
    assert run(["entropy", "--in", str(docs / "periodic.json"), "--strategy", "structural"], capsys)[0] == 3
    assert run(["nonsense"], capsys)[0] == 2


def test_periodic_witness_entropy(docs, capsys):
    code, rep, _ = run(["entropy", "--in", str(docs / "periodic.json"), "--strategy", "witness"], capsys)
    assert code == 0 and result(rep)["topological"]["value"] == 0 and result(rep)["corank"] is None


def _strip_timing(text):
    d = json.loads(text)
    d.pop("timing")
    return json.dumps(d, sort_keys=True)


def test_reports_are_deterministic(docs, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["bridge", "--in", str(docs / "mixed.json"), str(docs / "diag.json"), "--out", str(out), "--jobs", str(i + 1)]) == 0
        outs.append(_strip_timing(out.read_text()))
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["tool"] == "flowctl" and len(rep["results"][0]["sha256"]) == 64


def test_console_script_module_entry(docs):
    proc = subprocess.run([sys.executable, "-m", "linflow.cli", "lattice", "--in", str(docs / "findim.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["results"][0]["result"]["size"] == 3


# ---------------------------------------------------------------- documents

def test_round_trip_is_idempotent():
    for body in DOCS.values():
        once = dumps(parse(body))
        assert dumps(loads(once)) == once


def test_parse_normalizes_residues_and_trailing_zeros():
    doc = parse({"field": 3, "kind": "module", "generators": 1, "relations": [[[4, 0, 0]]]})
    assert serialize(doc)["relations"] == [[[1]]]
    doc = parse({"field": 2, "kind": "findim", "action": [[3]]})
    assert doc.payload["action"] == [[1]]


@pytest.mark.parametrize("bad", [
    [], {"field": 2}, {"field": 2, "kind": "other"}, {"field": True, "kind": "findim", "action": [[1]]},
    {"field": 2, "kind": "findim", "action": [[1, 0]]},
    {"field": 2, "kind": "module", "generators": 2, "relations": [[]]},
    {"field": 2, "kind": "profinite", "window": 1, "period": []},
    {"field": 2, "kind": "profinite", "builtin": {"name": "unknown"}},
])
def test_malformed_documents(bad):
    with pytest.raises(DocumentError):
        parse(bad)


small = st.integers(0, 6)


@settings(max_examples=80)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 3).flatmap(
    lambda g: st.integers(0, 3).flatmap(
        lambda m: st.lists(st.lists(st.lists(small, max_size=4), min_size=m, max_size=m), min_size=g, max_size=g))))
def test_module_round_trip_property(p, rel):
    body = {"field": p, "kind": "module", "generators": len(rel), "relations": rel}
    once = dumps(parse(body))
    assert dumps(loads(once)) == once
