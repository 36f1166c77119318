"""Command line entry points, run in process."""

import json

import pytest

from su2crit.cli import main


def test_density_header_and_origin_value(tmp_path):
    out = tmp_path / "curve.csv"
    code = main(["density", "--model", "exact", "--n", "3",
                 "--r-min", "0", "--r-max", "1", "--steps", "2",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "r,density"
    # D(3, 0) = 2(n-1)/(pi (n+1)) = 1/pi, printed with 17 digits
    assert lines[1] == "0,0.31830988618379069"
    assert len(lines) == 3


def test_density_limit_origin_value(capsys):
    code = main(["density", "--model", "asymptotic",
                 "--r-min", "0", "--r-max", "0", "--steps", "1"])
    assert code == 0
    got = capsys.readouterr().out
    assert got == "r,density\n0,0.63661977236758138\n"


def test_density_bytes_are_stable(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    argv = ["density", "--model", "unsimplified", "--n", "7",
            "--r-min", "0.2", "--r-max", "3.0", "--steps", "15"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_density_usage_errors():
    assert main(["density", "--model", "exact", "--n", "4",
                 "--steps", "0"]) == 2
    assert main(["density", "--model", "exact", "--n", "4",
                 "--r-min", "2", "--r-max", "1"]) == 2
    assert main(["density", "--model", "exact"]) == 2   # degree missing


def test_argparse_failures_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--trials", "5"])             # --n required
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--n", "5", "--trials", "5", "--frobnicate"])
    assert err.value.code == 2


def test_simulate_payload_and_determinism(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    argv = ["simulate", "--n", "6", "--trials", "400", "--seed", "9"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    payload = json.loads(a.read_text(encoding="utf-8"))
    assert payload["schema"] == 1
    assert payload["config"]["n"] == 6
    hist = payload["histogram"]
    assert sum(hist["count_sums"]) == hist["trials_accepted"] * 5
    assert len(hist["bin_edges"]) == 61
    assert "timestamp" not in payload


def test_simulate_worker_split_changes_only_metadata(tmp_path):
    a = tmp_path / "w1.json"
    b = tmp_path / "w2.json"
    base = ["simulate", "--n", "6", "--trials", "400", "--seed", "9"]
    assert main(base + ["--workers", "1", "--out", str(a)]) == 0
    assert main(base + ["--workers", "2", "--out", str(b)]) == 0
    pa = json.loads(a.read_text(encoding="utf-8"))
    pb = json.loads(b.read_text(encoding="utf-8"))
    assert pa["config"].pop("workers") == 1
    assert pb["config"].pop("workers") == 2
    assert pa == pb


def test_simulate_bad_bins_exits_2(capsys):
    assert main(["simulate", "--n", "6", "--trials", "5",
                 "--bins", "0"]) == 2
    assert "error:" in capsys.readouterr().err


def test_compare_gate_passes(tmp_path):
    out = tmp_path / "cmp.json"
    code = main(["compare", "--n", "12", "--trials", "2000",
                 "--seed", "42", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    block = payload["comparison"]
    assert block["passed"] is True
    assert block["gating"] is True
    assert block["max_abs_z"] < 5.0
    assert payload["config"]["model"] == "exact"
    assert payload["config"]["model_n"] == 12


def test_compare_wrong_degree_fails(tmp_path, capsys):
    out = tmp_path / "cmp.json"
    code = main(["compare", "--n", "12", "--trials", "2000",
                 "--seed", "42", "--model-n", "11", "--out", str(out)])
    assert code == 1
    err = capsys.readouterr().err
    assert "statistical gate failed" in err
    assert "replay with --seed 42" in err
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["comparison"]["passed"] is False


def test_selftest_quick_exits_0(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
