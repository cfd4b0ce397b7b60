import csv
import io
import json

import numpy as np
import pytest

from starqnt.cli import ExperimentConfig, cmd_converge, cmd_estimate, cmd_sweep, cmd_verify, main
from starqnt.core import UsageError
from starqnt.protocols import Protocol


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_statuses():
    status, report = cmd_verify(n=3, draws=100, tol=1e-9, seed=0)
    assert status == 0 and report["max_deviation"] < 1e-9
    assert cmd_verify(n=3, draws=3, tol=0.0)[0] == 1
    with pytest.raises(UsageError):
        cmd_verify(n=7)


def test_verify_exit_codes(capsys):
    assert main(["verify", "--n", "2", "--draws", "5"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["verify", "--n", "2", "--draws", "2", "--tol", "0"]) == 1
    assert main(["verify", "--n", "7"]) == 2


def test_sweep_values():
    rows = cmd_sweep(ExperimentConfig(grid=(0.52, 0.58, 0.9, 0.98)))
    table = {(r["protocol"], r["theta_star"]): r for r in rows}
    assert table[("IE_1STEP", 0.58)]["qcrb_trace"] == pytest.approx(0.1218, abs=1e-12)
    for p in (Protocol.BF_1STEP, Protocol.BF_2STEP, Protocol.RIM_2STEP):
        near = table[(p.value, 0.52)]
        assert near["singular"] or near["qcrb_trace"] > 10 * table[(p.value, 0.9)]["qcrb_trace"]
    at98 = {p.value: table[(p.value, 0.98)]["qcrb_trace"] for p in Protocol}
    assert min(at98, key=at98.get) == "BF_1STEP"


def test_sweep_default_grid():
    config = ExperimentConfig()
    grid = config.sweep_grid()
    assert len(grid) == 50 and grid[0] == 0.505 and grid[-1] == 0.995


def test_sweep_flags_degenerate_points():
    rows = cmd_sweep(ExperimentConfig(grid=(0.0, 0.5, 1.0), protocols=("BF_1STEP",)))
    assert all(r["singular"] for r in rows)


def test_sweep_cli_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--grid", "0.58,0.7", "--protocols", "IE_1STEP", "--output", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert list(rows[0]) == ["protocol", "theta_star", "m_total", "qcrb_trace", "singular", "condition_number"]
    assert float(rows[0]["qcrb_trace"]) == pytest.approx(0.1218)
    assert rows[0]["singular"] == "false"


def test_sweep_json_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("STARQNT_OUTPUT_DIR", str(tmp_path))
    assert main(["sweep", "--grid", "0.5", "--protocols", "BF_1STEP", "--format", "json"]) == 0
    data = json.loads((tmp_path / "sweep.json").read_text())
    assert data[0]["singular"] is True and data[0]["condition_number"] is None


def test_converge_rows_and_seeds():
    config = ExperimentConfig(protocols=("IE_1STEP", "RI_NSTEP"), m_start=36, m_end=48, trials=3, seed=4)
    rows = cmd_converge(config)
    assert len(rows) == 2 * 3 * 4
    assert [r["trial"] for r in rows[:4]] == [0, 1, 2, "mean"]
    trial_seeds = [r["seed"] for r in rows if r["trial"] != "mean"]
    assert len(set(trial_seeds)) == len(trial_seeds)
    mean = rows[3]
    assert mean["err_l2"] == pytest.approx(np.mean([r["err_l2"] for r in rows[:3]]))


def test_converge_rounds_m_down():
    config = ExperimentConfig(n=4, protocols=("RI_NSTEP",), m_start=38, m_end=38, trials=1)
    assert cmd_converge(config)[0]["m_total"] == 36


def test_converge_cli_deterministic(tmp_path):
    args = ["converge", "--m-start", "36", "--m-end", "60", "--trials", "2", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a.read_text())
    assert list(rows[0])[-1] == "invalid_count" and "theta_hat_2" in rows[0]


def test_converge_parallel_matches_serial():
    base = dict(protocols=("BF_2STEP",), m_start=36, m_end=54, trials=2, seed=3)
    assert cmd_converge(ExperimentConfig(**base)) == cmd_converge(ExperimentConfig(jobs=2, **base))


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"protocols": ["IE_1STEP"], "grid": [0.58, 0.9], "m-total": 12}))
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfg), "--m-total", "6", "--output", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert [r["m_total"] for r in rows] == ["6", "6"]
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["sweep", "--config", str(cfg)]) == 2


def test_estimate():
    assert list(cmd_estimate("IE_1STEP", (1, 1, 1), 6).values) == [1, 1, 1]
    report = cmd_estimate("BF_2STEP", (0.58, 0.58, 0.58), 6, exact=True)
    np.testing.assert_allclose(report.values, 0.58, atol=1e-12)
    with pytest.raises(UsageError):
        cmd_estimate("RI_NSTEP", (0.58, 0.58, 0.58), 7)


def test_estimate_cli(capsys):
    assert main(["estimate", "--protocol", "ie_1step", "--theta", "0.6,0.7,0.8", "--m", "6", "--exact", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [t["value"] for t in data["theta_hat"]] == pytest.approx([0.6, 0.7, 0.8], abs=1e-12)
    assert main(["estimate", "--protocol", "RI_NSTEP", "--theta", "0.6,0.7,0.8", "--m", "7"]) == 2
    assert main(["estimate", "--protocol", "NOPE", "--theta", "0.6,0.7", "--m", "6"]) == 2
    assert main(["estimate", "--protocol", "BF_1STEP", "--theta", "0.6,0.7,0.8", "--m", "60"]) == 0
    assert "theta_hat[2]" in capsys.readouterr().out
