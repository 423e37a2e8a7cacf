import csv
import json

import pytest

from dcmwalk.cli import main


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=") and "seed=" in lines[0]
    return list(csv.DictReader(lines[1:]))


def test_plan(tmp_path, capsys):
    assert main(["plan", "--out", str(tmp_path), "--dump-gains"]) == 0
    fp = read_csv(tmp_path / "footprints.csv")
    assert [(float(r["x"]), float(r["y"])) for r in fp] == [
        (0.5, 0.6), (0.5, 0.4), (1.0, 1.1), (1.0, 0.9), (1.5, 1.6), (1.5, 1.4)]
    plan = read_csv(tmp_path / "plan.csv")
    apex = max(float(r["swing_z"]) for r in plan if r["swing_z"])
    assert apex == pytest.approx(0.025, abs=1e-9)
    gains = read_csv(tmp_path / "gains.csv")
    assert any(r["matrix"] == "K" for r in gains)
    assert "6 footprints" in capsys.readouterr().out


def test_plan_single_step(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"plan_n_steps": 1}))
    assert main(["plan", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "footprints.csv")) == 1
    plan = read_csv(tmp_path / "plan.csv")
    assert float(plan[0]["com_x"]) == pytest.approx(0.0, abs=1e-12)
    last = plan[-1]
    assert float(last["dcm_x"]) == pytest.approx(float(last["zmp_x"]), abs=1e-9)


def test_walk_columns_and_seed(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["walk", "--out", str(a), "--seed", "7"]) == 0
    assert main(["walk", "--out", str(b), "--seed", "7"]) == 0
    assert (a / "trial_walk.csv").read_bytes() == (b / "trial_walk.csv").read_bytes()
    rows = read_csv(a / "trial_walk.csv")
    # tracking plot columns: COM/DCM/ZMP references vs actual in both axes
    for col in ("com_ref_x", "com_x", "dcm_ref_y", "dcm_y", "zmp_ref_x", "p_x", "p_cmd_y", "dcm_meas_x"):
        assert col in rows[0]


def test_scenario1_rows(tmp_path):
    assert main(["scenario1", "--out", str(tmp_path), "--jobs", "2"]) == 0
    rows = read_csv(tmp_path / "grid.csv")
    assert len(rows) == 441
    assert {r["verdict"] for r in rows} == {"recovered", "fallen"}


def test_scenario2_small(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"s2_tol": 200.0, "s2_n_steps": 4}))
    assert main(["scenario2", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert sum(r["verdict"] == "F_max" for r in rows) == 3
    assert sum(r["verdict"] == "improvement_pct" for r in rows) == 3
    assert (tmp_path / "trial_location_time.csv").exists()


def test_bad_config_exit(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dt": 0, "mass": -1, "bogus": 1}))
    assert main(["plan", "--config", str(cfg), "--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err
    assert "dt:" in err and "mass:" in err and "bogus:" in err
    cfg.write_text("{not json")
    assert main(["plan", "--config", str(cfg), "--out", str(tmp_path)]) != 0


def test_bad_seed(tmp_path):
    assert main(["plan", "--seed", "-3", "--out", str(tmp_path)]) != 0
