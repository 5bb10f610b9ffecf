import json
import os
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

import oracles
from infquillen import cli
from infquillen.free_lie import CDGLPresentation, LieSeries

DATA = Path(__file__).resolve().parent.parent / "demos" / "data"


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_build_ln_vertex(tmp_path):
    out = tmp_path / "l0.json"
    assert run("build-ln", "--n", 0, "--order", 3, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["differential"]["s-1|a0"] == [["[s-1|a0,s-1|a0]", "-1/2"]]


def test_build_ln_linear_part(tmp_path):
    out = tmp_path / "l1.json"
    assert run("build-ln", "--n", 1, "--order", 1, "--out", out) == 0
    d = json.loads(out.read_text())["differential"]
    assert d["s-1|a01"] == [["s-1|a0", "-1"], ["s-1|a1", "1"]]
    assert d["s-1|a0"] == [] and d["s-1|a1"] == []


def test_build_ln_interval_matches_the_oracle_file(tmp_path):
    out = tmp_path / "l1.json"
    assert run("build-ln", "--n", 1, "--order", 4, "--out", out) == 0
    P = CDGLPresentation.from_json(json.loads(out.read_text()))
    V = P.generators
    dx = LieSeries.from_tensor(V, oracles.interval_kuranishi(4), 4)
    da = LieSeries.from_tensor(V, {(oracles.A, oracles.A): Fraction(-1)}, 4)
    db = LieSeries.from_tensor(V, {(oracles.B, oracles.B): Fraction(-1)}, 4)
    expect = CDGLPresentation(V, {oracles.X: dx, oracles.A: da, oracles.B: db}, 4, "L_1")
    oracle_file = tmp_path / "oracle.json"
    cli.write_json(expect.to_json(), str(oracle_file))
    assert out.read_bytes() == oracle_file.read_bytes()


def test_order_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ORDER_ENV, "2")
    out = tmp_path / "l.json"
    assert run("build-ln", "--n", 1, "--out", out) == 0
    assert json.loads(out.read_text())["order"] == 2
    monkeypatch.setenv(cli.ORDER_ENV, "two")
    assert run("build-ln", "--n", 1) == 2


def test_dimension_cap_and_bad_config(capsys):
    assert run("build-ln", "--n", 5) == 2
    assert "cap" in capsys.readouterr().err
    assert run("build-ln", "--n", 1, "--order", 0) == 2


def test_output_is_deterministic_and_atomic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("realize", "--dgl", DATA / "heisenberg.json", "--dim", 2, "--seed", 3, "--out", a)
    run("realize", "--dgl", DATA / "heisenberg.json", "--dim", 2, "--seed", 3, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json", "b.json"]


@pytest.mark.parametrize("suite,args", [
    ("lie-polynomial", ["--max-leaves", 5]),
    ("dupont", ["--n", 3, "--deg", 4]),
    ("mc-bijection", ["--dgl", DATA / "heisenberg.json"]),
    ("trees", ["--max-leaves", 7]),
    ("ln", ["--n", 2, "--order", 4]),
    ("cinf", ["--n", 1, "--bound", 4]),
])
def test_verify_suites_pass(suite, args, capsys):
    assert run("verify", suite, *args) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "identities hold" in out


def test_verify_unknown_suite():
    assert run("verify", "nope") == 2


def test_realize_abelian_vertex_describes_cycles(tmp_path):
    out = tmp_path / "r.json"
    assert run("realize", "--dgl", DATA / "abelian.json", "--dim", 0, "--samples", 1, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["description"]["mc_elements"] == "the degree -1 cycles of L"
    assert data["description"]["cycles"] == [{"x": "1"}]


def test_pi0_abelian_is_homology(tmp_path):
    out = tmp_path / "p.json"
    assert run("pi0", "--dgl", DATA / "abelian.json", "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["rank"] == 1 and data["representatives"] == [{"x": "1"}]


def test_pi0_on_heisenberg_grid(tmp_path):
    out = tmp_path / "p.json"
    assert run("pi0", "--dgl", DATA / "heisenberg.json", "--out", out) == 0
    sizes = sorted(len(c) for c in json.loads(out.read_text())["classes"])
    # u-coefficient nonzero: 3 elements per class; u = 0: v is fixed
    assert sizes == [1, 1, 1, 3, 3]


def test_realize_round_trips_through_nerve_check(tmp_path, capsys):
    forms = tmp_path / "y.json"
    assert run("realize", "--dgl", DATA / "heisenberg.json", "--dim", 1, "--forms", forms,
               "--out", tmp_path / "r.json") == 0
    assert run("nerve-check", "--form", forms) == 0
    assert "FAIL" not in capsys.readouterr().out
    # tamper: drop the form and the check must fail
    data = json.loads(forms.read_text())
    data["form"]["terms"] = data["form"]["terms"][:1]
    forms.write_text(json.dumps(data))
    assert run("nerve-check", "--form", forms) == 1


def test_transfer_kinds(tmp_path):
    for kind, extra in (("coalg", []), ("alg", []), ("lie", ["--dgl", DATA / "abelian.json"])):
        out = tmp_path / f"{kind}.json"
        assert run("transfer", "--kind", kind, "--n", 1, "--bound", 3, "--out", out, *extra) == 0
        data = json.loads(out.read_text())
        assert data["bound"] == 3
    alg = json.loads((tmp_path / "alg.json").read_text())
    assert [["c0", "c01"], {"c01": "1/2"}] in alg["ops"]["2"]
    assert run("transfer", "--kind", "lie", "--n", 1) == 2


def test_export_and_import(tmp_path, capsys):
    out = tmp_path / "h.json"
    assert run("export", "--dgl", DATA / "heisenberg.json", "--out", out) == 0
    assert run("import", "--file", out) == 0
    l1 = tmp_path / "l1.json"
    run("build-ln", "--n", 1, "--order", 3, "--out", l1)
    assert run("import", "--file", l1) == 0
    assert run("export", "--dgl", l1, "--out", tmp_path / "l1f.json") == 0
    capsys.readouterr()


def test_parse_errors_report_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"basis": [\n  {"label": "x",, }]}')
    assert run("pi0", "--dgl", bad) == 2
    assert "bad.json:2:" in capsys.readouterr().err
    invalid = tmp_path / "jac.json"
    invalid.write_text(json.dumps({"basis": [{"label": "a", "degree": 0}, {"label": "b", "degree": 0}],
                                   "brackets": [["a", "b", [["a", "1"]]]], "differential": {}}))
    assert run("pi0", "--dgl", invalid) == 2


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "infquillen.cli", "build-ln", "--n", "0", "--order", "2"],
                       capture_output=True, text=True, env={**os.environ})
    assert r.returncode == 0 and "s-1|a0" in r.stdout
