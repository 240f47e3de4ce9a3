import json
import subprocess
import sys

import pytest

from cftransfer.cli import main, parse_digits, parse_word_nd, UsageError
from cftransfer.config import RunConfig, default_budget
from cftransfer.errors import InvalidInput


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_digits_positions():
    assert parse_digits("2,1") == (2, 1)
    assert parse_word_nd("1 2; 3,4") == ((1, 2), (3, 4))
    with pytest.raises(UsageError, match="digit 2"):
        parse_digits("3,0")
    with pytest.raises(UsageError, match="vector 2"):
        parse_word_nd("1 2; 3 x")


def test_cylinder_word(capsys):
    code, out, _ = run(capsys, "cylinder", "--word", "2,1")
    data = json.loads(out)
    assert code == 0
    assert data["interval"] == {"lo": "1/3", "hi": "2/5", "lo_closed": True, "hi_closed": False}
    assert data["length"] == "1/15"


def test_cylinder_nd_separation(capsys):
    code, out, _ = run(capsys, "cylinder", "--nd", "1 2; 3 4", "--separate", "1 1", "1 3")
    data = json.loads(out)
    assert code == 0 and data["separation"]["sibling_ok"] and data["separation"]["digit_ok"]


def test_usage_errors(capsys):
    assert run(capsys, "cylinder", "--word", "2,x")[0] == 2
    assert run(capsys, "cylinder")[0] == 2
    assert run(capsys, "construct", "--t", "3/2", "--L", "2")[0] == 2
    assert run(capsys, "exponent", "--set", "bogus", "--kind", "s_star")[0] == 2
    assert run(capsys, "density", "--set", "full1", "--N", "x")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["exponent", "--set", "full1", "--kind", "nope"])
    assert exc.value.code == 2


def test_exponent_statuses(capsys):
    code, out, _ = run(capsys, "exponent", "--set", "full2", "--kind", "s_star", "--tol", "1/20")
    assert code == 0 and json.loads(out)["status"] == "bracket"
    code, out, _ = run(capsys, "exponent", "--set", "diag2", "--kind", "s_sharp")
    assert code == 4 and json.loads(out)["reason"] == "no_threshold"


def test_exponent_budget_exit(capsys):
    code, _, _ = run(capsys, "exponent", "--set", "ck:K=3,d=3", "--kind", "s_sharp", "--budget", "3")
    assert code == 3


def test_construct_and_verify(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, _, _ = run(capsys, "construct", "--stages", "2", "--out", str(path))
    assert code == 0
    code, out, _ = run(capsys, "construct", "--verify", str(path))
    assert code == 0 and json.loads(out)["verified"]
    data = json.loads(path.read_text())
    data["W"][0] = [[2], [5]]
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, "construct", "--verify", str(path))
    assert code == 4 and json.loads(out)["mismatches"]


def test_construct_partial_exit(capsys):
    code, _, err = run(capsys, "construct", "--stages", "3")
    assert code == 4 and "2 of 3 stages" in err


def test_moran_and_density_csv(capsys):
    code, out, _ = run(capsys, "moran", "--cantor", "--n", "200", "--format", "csv")
    assert code == 0 and out.splitlines()[-1].startswith("200,")
    code, out, _ = run(capsys, "density", "--set", "ck:K=2,d=2", "--N", "100", "10000", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["N,count,denom,ratio,running_max", "100,5100,10000,51/100,51/100",
                                "10000,50010000,100000000,5001/10000,51/100"]


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("[run]\nbudget = 3\n")
    code, _, _ = run(capsys, "exponent", "--set", "ck:K=3,d=3", "--kind", "s_sharp", "--config", str(cfg))
    assert code == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"nonsense": 1}')
    assert run(capsys, "density", "--set", "full1", "--N", "5", "--config", str(bad))[0] == 2


def test_budget_env(monkeypatch):
    monkeypatch.setenv("CFTRANSFER_BUDGET", "1234")
    assert default_budget() == 1234 and RunConfig().budget == 1234
    monkeypatch.setenv("CFTRANSFER_BUDGET", "abc")
    with pytest.raises(InvalidInput):
        default_budget()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cftransfer", "suite", "--only", "1,2"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["criterion  1 PASS  exact cylinder identities",
                                       "criterion  2 PASS  balanced-set density"]
