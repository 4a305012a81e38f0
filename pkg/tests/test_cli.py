import json
import os

import pytest

from degenerate_diffusion.cli import acceptance, main, run, run_suite
from degenerate_diffusion.presets import PRESETS, ConfigError, ExperimentConfig, build_problem, preset_config

FAST = ["--nx", "50", "--nt", "200"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_config_round_trip(name):
    cfg = PRESETS[name]
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["invert", "--preset", "test99", "--out", str(tmp_path)]) == 2
    assert main(["invert", "--preset", "test1", "--set", "kind=sideways", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("nx = 3\n")
    assert main(["invert", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        preset_config("nope")


def test_invert_writes_artifacts_and_is_byte_reproducible(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        # the coarse grid misses the 1e-4 tolerance: acceptance failure, exit 1
        assert main(["invert", "--preset", "test1", "--out", str(o)] + FAST) == 1
    for name in ("table.csv", "history.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    table = (outs[0] / "table.csv").read_bytes()
    assert table.startswith(b"noise_percent,cost,iterations,a\r\n")
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["acceptance"]["checked"] and not summary["acceptance"]["passed"]
    assert summary["preset"] == "test1"
    assert {"cost.svg", "iterates.svg"} <= set(os.listdir(outs[0] / "plots"))


def test_csv_has_17_significant_digits(tmp_path):
    main(["invert", "--preset", "test1", "--out", str(tmp_path)] + FAST)
    row = (tmp_path / "table.csv").read_text().splitlines()[1].split(",")
    assert float(row[3]) != round(float(row[3]), 8)
    assert len(row[3].replace(".", "").lstrip("0")) >= 15


def test_custom_zero_data_run(tmp_path, capsys):
    code = main(["invert", "--preset", "custom", "--set", "u0=zero", "--out", str(tmp_path)] + FAST)
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert any("zero gradient" in w for w in summary["warnings"])
    assert summary["iterations"] == 0
    cfg = preset_config("custom")
    assert summary["params"]["a"] == cfg.initial[0]


def test_source_preset_emits_solution_plot(tmp_path):
    cfg = preset_config("test4").override(nx=50, nt=200)
    run(cfg, str(tmp_path))
    assert os.path.exists(tmp_path / "plots" / "solution.svg")


def test_profile_preset_emits_coefficient_plot(tmp_path):
    cfg = preset_config("test13").override(nx=50, nt=200)
    run(cfg, str(tmp_path))
    assert os.path.exists(tmp_path / "plots" / "coefficient.svg")


def test_acceptance_helper():
    cfg = preset_config("test14")
    checked, ok, _ = acceptance(cfg, cfg.truth, 0.0)
    assert checked and ok
    checked, ok, _ = acceptance(cfg, (5.0, 3.0, 1.0), 0.0)
    assert not ok
    checked, ok, _ = acceptance(preset_config("test1"), (1.7002,), 0.0)
    assert checked and not ok
    assert acceptance(preset_config("custom"), (1.0,), 0.0)[0] is False


def test_empty_suite_succeeds(tmp_path):
    ok, rows = run_suite([], str(tmp_path))
    assert ok and rows == []
    assert main(["suite", "--out", str(tmp_path / "s"), "--nx", "50", "--nt", "200", "test1"]) == 1


def test_suite_records_failures_and_continues(tmp_path):
    ok, rows = run_suite(["test1", "test2"], str(tmp_path), nx=8, nt=8)
    assert len(rows) == 2 and not ok


def test_suite_ell_sweep_rows(tmp_path):
    ok, rows = run_suite(["test8"], str(tmp_path), ells=[0.9, 1.1], nx=50, nt=400)
    assert [r["ell"] for r in rows] == [0.9, 1.1]
    assert all(abs(r["params"][0] - 0.4) <= 1e-2 for r in rows)


def test_other_subcommands(tmp_path):
    assert main(["forward", "--preset", "test8", "--out", str(tmp_path / "f")] + FAST) == 0
    assert (tmp_path / "f" / "table.csv").exists()
    # coarse grid: the noiseless row misses its tolerance, so the exit status is 1
    assert main(["noise-sweep", "--preset", "test1", "--noise", "0.01", "0", "--out", str(tmp_path / "n")] + FAST) == 1
    assert main(["poincare", "--samples", "20", "--out", str(tmp_path / "p")]) == 0
    assert main(["carleman", "--out", str(tmp_path / "c")]) == 0
    assert main(["reznitskaya-check", "--out", str(tmp_path / "r")]) == 0
    for d in "fnpcr":
        assert (tmp_path / d / "summary.json").exists()


def test_build_problem_matches_preset_grid():
    cfg = preset_config("test9").override(ell=1.1, nx=50, nt=400)
    spec = build_problem(cfg)
    assert spec.grid.ell == 1.1 and spec.grid.nx == 50
