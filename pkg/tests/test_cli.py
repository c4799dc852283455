"""CLI contract: determinism, exit codes, emission formats."""

import json

import pytest

from qhyper.cli import main, parse_values
from qhyper.signs import SignTable


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_values():
    assert parse_values("2") == [2.0]
    assert parse_values("1,1.5,2") == [1.0, 1.5, 2.0]
    grid = parse_values("0:1:0.25")
    assert grid == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_values("-0.5") == [-0.5]
    with pytest.raises(ValueError):
        parse_values("0:1:0.25:9")
    with pytest.raises(ValueError):
        parse_values("0:1:-1")


def test_relations_json_schema(capsys):
    code, out, _ = run(capsys, ["relations", "--n", "2", "--mu", "1,1.5",
                                "--sign-seed", "3"])
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"config", "records", "pass"}
    assert doc["pass"] is True
    assert doc["config"]["version"]
    assert any(r["check"] == "commutation" for r in doc["records"])


def test_csv_emission_and_determinism(capsys):
    argv = ["choi", "--t", "0:0.5:0.25", "--mu", "2", "--emit", "csv"]
    code1, out1, _ = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    header = out1.splitlines()[0]
    assert header.split(",")[:4] == ["t", "mu", "min_eigenvalue", "identity_residual"]
    assert header.endswith("provenance")
    assert len(out1.splitlines()) == 1 + 3


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code == 1


def test_bad_value_exit_code(capsys):
    code, _, errtext = run(capsys, ["perturb", "--mu", "1.0"])
    assert code == 1
    assert "error" in errtext


def test_assertion_failure_exit_code(capsys):
    # an impossible tolerance forces the pass flags off
    code, out, errtext = run(capsys, ["relations", "--n", "1", "--mu", "1",
                                      "--tol", "-1"])
    assert code == 2
    assert "FAIL" in errtext


def test_sign_file_round_trip(tmp_path, capsys):
    table = SignTable.random(2, seed=5)
    path = tmp_path / "signs.json"
    path.write_text(table.to_json(), encoding="utf-8")
    code, out, _ = run(capsys, ["relations", "--n", "2", "--mu", "1.2,2",
                                "--sign-file", str(path)])
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_fock_moment_value(capsys):
    code, out, _ = run(capsys, ["fock-moment", "(g+g*)^4", "--q", "0.5", "--mu", "1"])
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["records"][0]["value_re"] - 2.5) < 1e-12
    assert doc["records"][0]["oracle_disagreement"] < 1e-12


def test_clt_reports(capsys):
    argv = ["clt", "(s+s*)^4", "--q", "-0.5", "--mu", "1", "--m", "5,15",
            "--samples", "25", "--seed", "7", "--emit", "csv"]
    code, out, _ = run(capsys, argv)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split(",")[:7] == ["m", "mean_re", "mean_im", "stderr",
                                       "oracle_re", "oracle_im", "abs_err"]
    code2, out2, _ = run(capsys, argv)
    assert out2 == out


def test_necessary_time_flags_discrepancy(capsys):
    code, out, _ = run(capsys, ["necessary-time", "--p", "4", "--mu", "2"])
    assert code == 0
    rec = json.loads(out)["records"][0]
    assert rec["differs"] is True
    assert rec["ratio_above"] > 1.0 > rec["ratio_below"]


def test_hyperc_search_reports_only(capsys):
    code, out, _ = run(capsys, ["hyperc-search", "--n", "1", "--mu", "2",
                                "--p", "4", "--t", "0.2", "--direction", "dual",
                                "--restarts", "20", "--seed", "1"])
    assert code == 0
    rec = json.loads(out)["records"][0]
    assert rec["violation"] in (True, False)
