import json

import numpy as np
import pytest

from diracflow.cli import main


def write_config(tmp_path, name, **overrides):
    cfg = {
        "model": {"name": "vortices", "params": {}},
        "method": "method1",
        "map": {"name": "theta", "theta": 0.5},
        "h": 1.0,
        "steps": 10,
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_simulate_writes_expected_row_count(tmp_path, capsys):
    cfg = write_config(tmp_path, "m1.json", steps=12)
    out = tmp_path / "run.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header[:2] == ["step", "t"]
    assert header[-3:] == ["H", "constraint_residual", "newton_iters"]
    assert len(rows) == 13
    assert (tmp_path / "run.meta.json").exists()


def test_simulate_zero_steps_records_initial_energy(tmp_path):
    cfg = write_config(tmp_path, "m1.json", steps=0)
    out = tmp_path / "run.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert len(rows) == 1
    h_col = header.index("H")
    assert float(rows[0][h_col]) == pytest.approx(-np.log(80.0) / np.pi, abs=1e-9)


def test_simulate_rejects_invalid_pair_without_output(tmp_path):
    cfg = write_config(tmp_path, "bad.json",
                       model={"name": "rigid_body", "params": {}},
                       method="method2", h=0.1)
    out = tmp_path / "never.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_simulate_is_byte_deterministic(tmp_path):
    cfg = write_config(tmp_path, "m1.json", steps=8)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_dump_config_round_trips(tmp_path, capsys):
    cfg = write_config(tmp_path, "m1.json", steps=5)
    assert main(["simulate", "--config", str(cfg), "--out", "unused.csv",
                 "--dump-config"]) == 0
    dumped = capsys.readouterr().out
    cfg2 = tmp_path / "echo.json"
    cfg2.write_text(dumped)
    assert main(["simulate", "--config", str(cfg2), "--out", "unused.csv",
                 "--dump-config"]) == 0
    assert capsys.readouterr().out == dumped
    # and the effective config produces the same CSV bytes
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", str(cfg), "--out", str(out1)])
    main(["simulate", "--config", str(cfg2), "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_check_symplectic_passes(tmp_path, capsys):
    cfg = write_config(tmp_path, "m1.json", h=0.5)
    assert main(["check", "symplectic", "--config", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] and report["residual"] <= report["threshold"]


def test_check_constraints_nonholonomic_method2(tmp_path, capsys):
    cfg = write_config(tmp_path, "nh.json",
                       model={"name": "nonholonomic_particle", "params": {}},
                       method="method2", h=0.05, steps=100)
    assert main(["check", "constraints", "--config", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"]


def test_check_order_rejects_wrong_expectation(tmp_path, capsys):
    cfg = write_config(tmp_path, "rk2.json", method="rk2", h=0.1, steps=10,
                       expected_order=3)
    assert main(["check", "order", "--config", str(cfg)]) == 1
    report = json.loads(capsys.readouterr().out)
    assert not report["pass"]


def test_check_dirac_classifications(tmp_path, capsys):
    for model in ("rigid_body", "ph_open", "ph_closed"):
        cfg = write_config(tmp_path, f"{model}.json",
                           model={"name": model, "params": {}},
                           method="method1", h=0.1)
        assert main(["check", "dirac", "--config", str(cfg)]) == 0
        assert json.loads(capsys.readouterr().out)["pass"]


def test_check_unknown_test_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, "m1.json")
    assert main(["check", "nosuch", "--config", str(cfg)]) == 2


def test_constraint_report(tmp_path, capsys):
    cfg = write_config(tmp_path, "m1.json")
    assert main(["constraint", "--config", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["terminated"] and report["steps_taken"] == 1


def test_compare_three_methods(tmp_path):
    m1 = write_config(tmp_path, "m1.json", steps=50, label="method1")
    m2 = write_config(tmp_path, "m2.json", steps=50, method="method2", label="method2")
    rk = write_config(tmp_path, "rk.json", steps=50, method="rk2", label="rk2")
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--configs", str(m1), str(m2), str(rk),
                 "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["step", "t", "method1", "method2", "rk2"]
    assert len(rows) == 51
    drift = np.array([[float(v) for v in row[2:]] for row in rows])
    assert np.all(drift[0] == 0.0)


def test_compare_single_config(tmp_path):
    m2 = write_config(tmp_path, "m2.json", steps=5, method="method2")
    out = tmp_path / "single.csv"
    assert main(["compare", "--configs", str(m2), "--out", str(out)]) == 0
    header, _ = read_csv(out)
    assert header == ["step", "t", "method2"]


def test_compare_rejects_mismatched_configs(tmp_path):
    a = write_config(tmp_path, "a.json", steps=5)
    b = write_config(tmp_path, "b.json", steps=6, method="method2")
    assert main(["compare", "--configs", str(a), str(b),
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_missing_config_file_is_usage_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_collision_is_numerical_failure(tmp_path):
    cfg = write_config(tmp_path, "collide.json",
                       model={"name": "vortices", "params": {"gamma": [1.0, 1.0]}},
                       method="rk2", h=1.0, steps=3,
                       initial_state=[0.0, 1e-9, 0.0, 0.0])
    out = tmp_path / "collide.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 3


def test_open_ph_with_input_sequence(tmp_path):
    cfg = write_config(tmp_path, "ph.json",
                       model={"name": "ph_open", "params": {}},
                       method="method1", h=0.1, steps=5,
                       inputs=[[0.1], [0.2], [0.0], [-0.1], [0.3]])
    out = tmp_path / "ph.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert len(rows) == 6


def test_check_energy_with_explicit_threshold(tmp_path, capsys):
    cfg = write_config(tmp_path, "en.json", method="method2", steps=300,
                       threshold=1e-7)
    assert main(["check", "energy", "--config", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] and report["threshold"] == 1e-7


def test_compare_threaded_matches_sequential(tmp_path, monkeypatch):
    m1 = write_config(tmp_path, "m1.json", steps=20, label="method1")
    m2 = write_config(tmp_path, "m2.json", steps=20, method="method2", label="method2")
    out_seq, out_par = tmp_path / "seq.csv", tmp_path / "par.csv"
    monkeypatch.setenv("DIRACFLOW_THREADS", "1")
    assert main(["compare", "--configs", str(m1), str(m2), "--out", str(out_seq)]) == 0
    monkeypatch.setenv("DIRACFLOW_THREADS", "2")
    assert main(["compare", "--configs", str(m1), str(m2), "--out", str(out_par)]) == 0
    assert out_seq.read_bytes() == out_par.read_bytes()
