#!/usr/bin/env python3
"""
End-to-end tests for the command-line front end. Each test calls
main.main(argv) and inspects the exit status and the written files.
"""

import json

import pandas as pd
import pytest

import main
from main import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, RunConfig


def run(argv):
    return main.main([str(a) for a in argv])


# --- table1 ---

def test_table1_default_run(tmp_path):
    out = tmp_path / "table1.csv"
    assert run(["table1", "--out", out]) == EXIT_OK
    table = pd.read_csv(out)
    assert list(table["n"]) == list(range(2, 16)) + [100]
    assert list(table.columns[:4]) == ["n", "eta_star", "fidelity_star", "evaluations"]

    row4 = table[table["n"] == 4].iloc[0]
    assert abs(row4["eta_star"] - 2.31) <= 0.05
    assert abs(row4["fidelity_star"] - 0.933) <= 1e-3
    row100 = table[table["n"] == 100].iloc[0]
    assert abs(row100["eta_star"] - 2.02) <= 0.05
    assert abs(row100["fidelity_star"] - 0.941) <= 1e-3
    assert table["agrees"].all()


def test_table1_single_n(tmp_path):
    out = tmp_path / "two.csv"
    assert run(["table1", "--n", 2, "--out", out]) == EXIT_OK
    table = pd.read_csv(out)
    assert len(table) == 1
    assert table["fidelity_star"].iloc[0] == pytest.approx(1.0, abs=1e-9)


def test_table1_workers_keep_input_order(tmp_path):
    serial, pooled = tmp_path / "serial.csv", tmp_path / "pooled.csv"
    assert run(["table1", "--n", 7, 3, 12, "--out", serial]) == EXIT_OK
    assert run(["table1", "--n", 7, 3, 12, "--workers", 2, "--out", pooled]) == EXIT_OK
    assert serial.read_bytes() == pooled.read_bytes()
    assert list(pd.read_csv(pooled)["n"]) == [7, 3, 12]


def test_csv_output_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["fig2", "--n-min", 2, "--n-max", 12, "--out", first]) == EXIT_OK
    assert run(["fig2", "--n-min", 2, "--n-max", 12, "--out", second]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


# --- fig2 ---

def test_fig2_minimum(tmp_path):
    out = tmp_path / "fig2.json"
    assert run(["fig2", "--n-min", 2, "--n-max", 30, "--format", "json", "--out", out]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["minimum"]["n"] == "9"
    assert float(data["minimum"]["overlap"]) == pytest.approx(0.891, abs=1e-3)
    first = data["rows"][0]
    assert first["n"] == "2"
    assert float(first["overlap"]) == pytest.approx(1.0, abs=1e-12)


def test_fig2_large_n(tmp_path):
    out = tmp_path / "big.csv"
    assert run(["fig2", "--n-min", 1000, "--n-max", 1000, "--out", out]) == EXIT_OK
    assert pd.read_csv(out)["overlap"].iloc[0] >= 0.94


def test_json_round_trips_byte_for_byte(tmp_path):
    out = tmp_path / "fig2.json"
    assert run(["fig2", "--n-min", 2, "--n-max", 8, "--format", "json", "--precision", 9, "--out", out]) == EXIT_OK
    text = out.read_text()
    assert json.dumps(json.loads(text), indent=2) + "\n" == text
    assert json.loads(text)["rows"][1]["overlap"].count(".") == 1
    assert len(json.loads(text)["rows"][1]["overlap"].split(".")[1]) == 9


# --- fringe ---

def test_fringe_csv_with_sidecar(tmp_path):
    out = tmp_path / "fringe.csv"
    assert run(["fringe", "--n", 2, "--eta", 2, "--samples", 64, "--out", out]) == EXIT_OK
    table = pd.read_csv(out)
    assert table.shape == (64, 6)
    assert list(table.columns) == ["phi", "p_0", "p_1", "p_2", "parity", "extremal"]

    sidecar = pd.read_csv(tmp_path / "fringe.visibility.csv")
    parity = sidecar[sidecar["signal"] == "parity"].iloc[0]
    assert parity["frequency"] == 2
    assert abs(parity["visibility"] - 1.0) <= 1e-9
    assert parity["normalization"] == "parity"

    assert list(sidecar["signal"]) == ["parity", "extremal", "p_0", "p_1", "p_2"]
    coincidence = sidecar[sidecar["signal"] == "p_1"].iloc[0]
    assert abs(coincidence["visibility"] - 1.0) <= 1e-9
    assert coincidence["normalization"] == "mean"
    assert (sidecar["leakage"] < 1e-9).all()


def test_fringe_json_footer(tmp_path):
    out = tmp_path / "fringe.json"
    assert run(["fringe", "--n", 4, "--eta", 2.31, "--samples", 128, "--format", "json", "--out", out]) == EXIT_OK
    data = json.loads(out.read_text())
    assert len(data["rows"]) == 128
    parity = next(v for v in data["visibility"] if v["signal"] == "parity")
    assert float(parity["visibility"]) == pytest.approx(0.93, abs=0.02)
    assert float(parity["sensitivity"]) == pytest.approx(4 * float(parity["visibility"]))
    channels = [v for v in data["visibility"] if v["signal"].startswith("p_")]
    assert [v["signal"] for v in channels] == [f"p_{m}" for m in range(5)]
    assert all(0.0 <= float(v["visibility"]) <= 1.0 for v in channels)
    assert all(v["frequency"] == "4" for v in channels)


def test_fringe_undersampling_is_a_usage_error(capsys):
    assert run(["fringe", "--n", 4, "--samples", 8]) == EXIT_USAGE
    assert "17" in capsys.readouterr().err


def test_fringe_default_samples():
    config = RunConfig(command="fringe", n=20)
    assert config.samples == 160


# --- state, fidelity, optimize ---

def test_state_dump(tmp_path):
    out = tmp_path / "state.csv"
    assert run(["state", "--n", 3, "--eta", 3, "--gamma", 0.2, "--out", out]) == EXIT_OK
    table = pd.read_csv(out)
    assert list(table.columns) == ["m", "n_a", "n_b", "eta_re", "eta_im", "noon", "probability"]
    assert table["eta_re"].tolist() == pytest.approx([0.5, 0.0, 3 ** 0.5 / 2, 0.0], abs=1e-12)
    assert table["noon"].tolist() == pytest.approx(table["eta_re"].tolist(), abs=1e-12)
    assert table["n_a"].tolist() == [3, 2, 1, 0]


def test_fidelity_command(tmp_path):
    out = tmp_path / "f.csv"
    assert run(["fidelity", "--n", 9, "--eta", 2.0, "--out", out]) == EXIT_OK
    assert pd.read_csv(out)["overlap"].iloc[0] == pytest.approx(0.891, abs=1e-3)


def test_optimize_command(tmp_path):
    out = tmp_path / "opt.json"
    assert run(["optimize", "--n", 5, "--eta-lo", 2.0, "--eta-hi", 3.0, "--tol", 1e-5,
                "--format", "json", "--out", out]) == EXIT_OK
    row = json.loads(out.read_text())["rows"][0]
    assert float(row["eta_star"]) == pytest.approx(2.48, abs=0.05)
    assert float(row["fidelity_star"]) == pytest.approx(0.941, abs=1e-3)
    assert row["agrees"] is True


# --- usage errors ---

@pytest.mark.parametrize("argv", [
    ["table1", "--eta-lo", 3, "--eta-hi", 2],
    ["fig2", "--n-min", 5, "--n-max", 3],
    ["fidelity", "--n", 0],
    ["state"],
    ["nonsense"],
    ["fig2", "--format", "xml"],
    ["state", "--n", 3, "--gamma", 1.5],
])
def test_usage_errors(argv):
    assert run(argv) == EXIT_USAGE


# --- check ---

def test_check_passes(tmp_path):
    out = tmp_path / "check.csv"
    assert run(["check", "--out", out]) == EXIT_OK
    table = pd.read_csv(out)
    assert table["passed"].all()
    assert "asymptote_n10000" in set(table["check"])
    assert "defining_relation_residual" in set(table["check"])
    assert "fringe_row_sums_large_n" in set(table["check"])


def test_check_detects_injected_perturbation(tmp_path):
    out = tmp_path / "check.csv"
    assert run(["check", "--inject-perturbation", "--out", out]) == EXIT_CHECK_FAILED
    table = pd.read_csv(out).set_index("check")
    assert not table.loc["defining_relation_residual", "passed"]
    assert table.drop(index="defining_relation_residual")["passed"].all()


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
