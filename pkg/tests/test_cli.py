import io
import json

import pytest

from lphard import __version__
from lphard.main import run

from .conftest import SAT_DIMACS, UNSAT_DIMACS

Z2 = {"d": 2, "n": 2, "basis": [["1", "0"], ["0", "1"]], "target": ["1/2", "1/2"], "p": "2", "r_pow": "1"}


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_count_exact_text():
    code, out = call("count", "--p", "3", "--n", "20", "--radius-pow", "5/2", "--shift", "1/2", "--exact")
    assert code == 0
    assert out == "lo=1048576 hi=1048576\n"


def test_count_json_document():
    code, out = call("count", "--p", "2", "--n", "4", "--radius-pow", "2", "--out", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["header"]["tool"] == "lphard"
    assert doc["header"]["version"] == __version__
    assert doc["header"]["precision"] == 128
    assert (doc["lo"], doc["hi"]) == (33, 33)
    assert out == json.dumps(doc, sort_keys=True, indent=2) + "\n"


def test_count_shift_file(write_file):
    path = write_file("shift.txt", "1/2 0 1/4\n")
    code, out = call("count", "--p", "4", "--n", "3", "--radius-pow", "9/4", "--shift", path, "--exact")
    assert code == 0
    assert out.startswith("lo=")


def test_constants_csv():
    code, out = call("constants", "--p", "3", "--out", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# ") and "config_hash=" in lines[0]
    assert lines[1] == "p,W_p,tau_star,C_p"
    assert lines[2].startswith("3,")
    assert float(lines[2].split(",")[3]) == pytest.approx(3.0171778031766, rel=1e-12)


@pytest.mark.parametrize("argv", [
    ("count", "--p", "3"),
    ("constants",),
    ("constants", "--p", "3", "--p0"),
    ("count", "--p", "3", "--n", "2", "--radius-pow", "1", "--shift", "one half"),
    ("nosuch",),
])
def test_usage_errors(argv):
    assert call(*argv)[0] == 64


def test_domain_refusal():
    assert call("count", "--p", "1/2", "--n", "2", "--radius-pow", "1")[0] == 2


def test_lattice_and_oracle_commands(write_file):
    path = write_file("z2.json", json.dumps(Z2))
    assert call("lattice", "lambda1", "--in", path) == (0, "lambda1 = 1.0\n")
    assert call("oracle", "svp", "--in", path) == (0, "YES\n")
    assert call("oracle", "cvp", "--in", path, "--r-pow", "1/4") == (0, "NO\n")
    assert call("oracle", "svp", "--in", path, "--rank-cap", "1")[0] == 2


def test_cover_command(write_file):
    path = write_file("cover.json", json.dumps({"k": 3, "sets": [[1, 2], [3], [1], [2, 3]], "d": 2}))
    code, out = call("oracle", "cover", "--in", path, "--out", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["exact_size"] == 2
    assert len(doc["witness"]) == 2


def test_cover_budget_refusal(write_file):
    sets = [[i % 25 + 1, (i + 1) % 25 + 1] for i in range(31)]
    path = write_file("big.json", json.dumps({"k": 25, "sets": sets, "d": 13}))
    assert call("oracle", "cover", "--in", path)[0] == 2


def test_bad_dimacs_is_a_refusal(write_file):
    path = write_file("bad.cnf", "1 2 0\n")
    assert call("reduce", "sat-to-svp", "--in", path)[0] == 2


def test_overrides_need_the_unsafe_flag(write_file):
    path = write_file("sat.cnf", SAT_DIMACS)
    assert call("reduce", "sat-to-svp", "--in", path, "--ell", "60")[0] == 64


def test_missing_input_file():
    assert call("reduce", "sat-to-svp", "--in", "/nonexistent/formula.cnf")[0] == 64


UNSAFE = ("--unsafe-overrides", "--ell", "60", "--q-min", "101", "--threshold-fraction", "1/20")


def test_reduce_no_instance_is_reproducible(write_file, tmp_path):
    path = write_file("unsat.cnf", UNSAT_DIMACS)
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert call("reduce", "sat-to-svp", "--in", path, "--seed", "5", *UNSAFE, "--out-file", str(first)) == \
        (0, "DECISION=NO seed=5\n")
    call("reduce", "sat-to-svp", "--in", path, "--seed", "5", *UNSAFE, "--out-file", str(second))
    assert first.read_bytes() == second.read_bytes()
    doc = json.loads(first.read_text())
    assert doc["seed"] == 5
    assert doc["summary"]["hits"] == 0
    assert len(doc["trials"]) == 60
    assert doc["overrides"]["allow_small_gap"] is True
    assert doc["parameters"]["separated"] is True


@pytest.mark.slow
def test_reduce_yes_instance(write_file):
    path = write_file("sat.cnf", SAT_DIMACS)
    code, out = call("reduce", "sat-to-svp", "--in", path, "--seed", "5", "--rank-cap", "24", *UNSAFE)
    assert code == 0
    assert out == "DECISION=YES seed=5\n"
