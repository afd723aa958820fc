import csv
import io
import json
import subprocess
import sys

import pytest

from rlogic.cli import main
from rlogic.logic import parse
from rlogic.structures import Structure


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ordered(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "arithmetic", "--n", "4", "--which", "leq")
    assert code == 0
    p = tmp_path / "a.json"
    p.write_text(out)
    return str(p)


def test_gen_families(capsys):
    for argv in (["gen", "cfi", "--base", "theta", "--twist", "0"], ["gen", "tcfi", "--base", "theta"],
                 ["gen", "matching", "--p", "2", "--k", "1"], ["gen", "sparse", "--Q", "1,4"],
                 ["gen", "cfi", "--base", "random", "--vertices", "6", "--seed", "3"], ["gen", "empty", "--n", "2"]):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        Structure.loads(out)


def test_eval(capsys, ordered):
    code, out, _ = run(capsys, "eval", ordered, "forall x. exists y. leq(x, y)")
    assert code == 0 and json.loads(out) == {"holds": True}
    code, out, _ = run(capsys, "eval", ordered, "leq(x, y) & !x = y", "--assign", "x=2")
    assert json.loads(out) == {"free": ["y"], "tuples": [[3]]}


def test_formula_from_file(capsys, ordered, tmp_path):
    f = tmp_path / "phi.txt"
    f.write_text("exists x. forall y. leq(x, y)")
    code, out, _ = run(capsys, "eval", ordered, "@" + str(f))
    assert json.loads(out)["holds"] is True


def test_prob_exact_and_mc(capsys, ordered):
    code, out, _ = run(capsys, "prob", ordered, "exists x. R(x)", "--random", "R/1")
    assert code == 0 and json.loads(out)["value"] == "15/16"
    code, out, _ = run(capsys, "--seed", "5", "prob", ordered, "exists x. R(x)", "--random", "R/1",
                       "--mode", "mc", "--samples", "200")
    a = json.loads(out)
    code, out, _ = run(capsys, "prob", ordered, "exists x. R(x)", "--random", "R/1",
                       "--mode", "mc", "--samples", "200", "--seed", "5")
    assert json.loads(out) == a and a["seed"] == 5 and a["samples"] == 200


def test_csv_output(capsys, ordered):
    code, out, _ = run(capsys, "--format", "csv", "prob", ordered, "forall x. R(x)", "--random", "R/1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["value"] == "1/16"


def test_gap(capsys, ordered):
    code, out, _ = run(capsys, "gap", "exists x. R(x)", ordered, "--random", "R/1", "--alpha", "1/3",
                       "--beta", "2/3")
    assert code == 0 and json.loads(out)[0]["class"] == "High"


def test_amplify(capsys):
    code, out, _ = run(capsys, "amplify", "exists x. R(x)", "--random", "R/1", "--n", "3", "--l", "2")
    doc = json.loads(out)
    parse(doc["formula"])
    assert doc["random_vocabulary"] == "{R_c1/1, R_c2/1, R_c3/1}"


def test_design_build_and_check(capsys, tmp_path):
    code, out, _ = run(capsys, "design", "build", "--n", "20", "--m", "5", "--degree", "2")
    p = tmp_path / "d.json"
    p.write_text(out)
    code, out, _ = run(capsys, "design", "check", str(p))
    assert code == 0 and json.loads(out)["valid"]
    doc = json.loads(p.read_text())
    doc["sets"][1] = doc["sets"][0]
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "design", "check", str(p))
    assert code == 1 and not json.loads(out)["valid"]


def test_prg_compare(capsys, ordered):
    code, out, _ = run(capsys, "prg", "compare", ordered, "exists x. R(x)", "--random", "R/1", "--m", "3")
    doc = json.loads(out)
    assert code == 0 and doc["true"]["value"] == "15/16" and doc["design"]["l"] == 9
    code, out2, _ = run(capsys, "prg", "compare", ordered, "exists x. R(x)", "--random", "R/1", "--m", "3")
    assert out2 == out


def test_corpus_listing(capsys):
    code, out, _ = run(capsys, "corpus")
    names = {r["name"] for r in json.loads(out)}
    assert {"phi_ith", "tcfi", "rescher_order"} <= names
    code, out, _ = run(capsys, "corpus", "phi_ith", "--param", "i=1")
    parse(out)


def test_experiment(capsys):
    code, out, _ = run(capsys, "experiment", "amplification", "--seed", "1")
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 1 and doc["experiment"] == "amplification"


@pytest.mark.parametrize("argv", [
    ["eval", "missing.json", "x = x"],
    ["corpus", "nope"],
    ["amplify", "R(x", "--random", "R/1", "--n", "2"],
    ["amplify", "R(x)", "--random", "R/1", "--n", "2", "--l", "3"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "nope"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rlogic", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "experiment" in r.stdout
