import json

import pytest

from nonauto_slowfast.cli import build_parser, main, workers
from nonauto_slowfast.io import read_csv


def run(args, tmp_path):
    return main(args + ["--out", str(tmp_path)])


def test_simulate_fig2(tmp_path):
    assert run(["simulate", "--preset", "fig2", "--epsilon", "0.2"], tmp_path) == 0
    h, rows = read_csv(tmp_path / "slow.csv")
    assert h == ["epsilon", "t", "x_1"]
    h, rows = read_csv(tmp_path / "fast.csv")
    assert h == ["epsilon", "tau", "y_1", "blew_up"]
    assert float(rows[-1][1]) == pytest.approx(100.0)
    m = json.loads((tmp_path / "manifest_simulate.json").read_text())
    assert m["seed"] == 42 and m["metric_mode"] == "torus-angle"
    assert m["config"]["horizons"]["t0"] == 20.0
    assert m["config"]["integrator"]["step"] == 0.01


def test_missing_config_exit_1(tmp_path, capsys):
    assert run(["simulate", "--config", str(tmp_path / "nope.yaml")], tmp_path) == 1
    assert "nope.yaml" in capsys.readouterr().err


def test_invalid_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("gamma:\n  kind: arctan\n  slope: 1\n")
    assert run(["simulate", "--config", str(cfg)], tmp_path) == 1
    assert "gamma.arctan.slope" in capsys.readouterr().err


def test_blow_up_exit_2(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("initial:\n  y0: [-3.0]\n")
    assert run(["simulate", "--config", str(cfg), "--epsilon", "0.2"], tmp_path) == 2
    h, rows = read_csv(tmp_path / "fast.csv")
    assert rows[-1][-1] == "true"
    assert all(r[-1] == "false" for r in rows[:-1])


def test_fiber_non_convergence_exit_3(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("fiber:\n  seed_lower: [0.0]\n  seed_upper: [3.0]\n  T_pull: 0.5\n  tol: 1.0e-9\n")
    assert run(["fiber", "--config", str(cfg)], tmp_path) == 3
    h, _ = read_csv(tmp_path / "fiber.csv")
    assert h == ["theta_1", "theta_2", "x_1", "y_1", "pullback_time", "converged"]


def test_fiber_ok(tmp_path):
    assert run(["fiber", "--preset", "fig2"], tmp_path) == 0
    _, rows = read_csv(tmp_path / "fiber.csv")
    assert len(rows) == 1 and rows[0][-1] == "true"


def test_figure_fig1(tmp_path):
    assert run(["figure", "fig1"], tmp_path) == 0
    h, rows = read_csv(tmp_path / "fig1_pair.csv")
    assert h == ["tau", "attractor", "repeller"]
    assert float(rows[0][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(100.0)
    _, ex = read_csv(tmp_path / "fig1_exponents.csv")
    assert float(ex[0][0]) < -0.1 < 0.1 < float(ex[0][1])


def test_deltak_three_rows(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("epsilon_grid: [0.4, 0.2, 0.1]\n")
    assert run(["deltak", "--config", str(cfg)], tmp_path) == 0
    h, rows = read_csv(tmp_path / "delta_k.csv")
    assert h == ["epsilon", "delta_k"] and len(rows) == 3


def test_track_with_workers_is_ordered(tmp_path):
    assert run(["track", "--preset", "fig2", "--workers", "2"], tmp_path / "par") == 0
    assert run(["track", "--preset", "fig2", "--workers", "1"], tmp_path / "ser") == 0
    par = (tmp_path / "par" / "tracking_summary.csv").read_text()
    assert par == (tmp_path / "ser" / "tracking_summary.csv").read_text()
    _, rows = read_csv(tmp_path / "par" / "tracking_summary.csv")
    assert [float(r[0]) for r in rows] == [0.05, 0.2, 0.35, 0.5]
    h, _ = read_csv(tmp_path / "par" / "tracking.csv")
    assert h == ["epsilon", "tau", "dist", "mode"]


def test_tipscan_fig3(tmp_path):
    assert run(["tipscan", "--preset", "fig3"], tmp_path) == 0
    h, rows = read_csv(tmp_path / "tipping.csv")
    assert h == ["epsilon", "outcome", "evidence_value"]
    assert rows[0][1] == "tracks"


def test_figure_fig3(tmp_path):
    assert run(["figure", "fig3"], tmp_path) == 0
    h, _ = read_csv(tmp_path / "fig3_surface.csv")
    assert h == ["gamma", "tau", "attractor_value"]
    h, _ = read_csv(tmp_path / "fig3_transition.csv")
    assert h[:3] == ["tau", "gamma", "y"]


def test_preset_override_warns(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("horizons:\n  t0: 5.0\n")
    with pytest.warns(UserWarning):
        assert run(["simulate", "--preset", "fig2", "--config", str(cfg), "--epsilon", "0.5"], tmp_path) == 0
    m = json.loads((tmp_path / "manifest_simulate.json").read_text())
    assert m["config"]["horizons"]["t0"] == 20.0


def test_seed_recorded(tmp_path):
    assert run(["fiber", "--preset", "fig2", "--seed", "7"], tmp_path) == 0
    m = json.loads((tmp_path / "manifest_fiber.json").read_text())
    assert m["seed"] == 7 and m["config"]["seed"] == 7


def test_workers_env(monkeypatch):
    ap = build_parser()
    monkeypatch.setenv("NONAUTO_SLOWFAST_WORKERS", "3")
    assert workers(ap.parse_args(["fiber", "--preset", "fig2"])) == 3
    assert workers(ap.parse_args(["fiber", "--preset", "fig2", "--workers", "5"])) == 5


def test_no_config_is_error(tmp_path):
    assert run(["simulate"], tmp_path) == 1
    assert run(["simulate", "--preset", "fig2", "--epsilon", "0.2"], tmp_path) == 0


def test_unknown_preset_exit_1(tmp_path, capsys):
    assert run(["simulate", "--preset", "fig9"], tmp_path) == 1
    assert "fig9" in capsys.readouterr().err
