import csv
import json
from pathlib import Path

import numpy as np
import pytest

from homodyne_bell.cli import (
    CURVES_HEADER,
    SWEEP_HEADER,
    TALLY_HEADER,
    TRIALS_HEADER,
    cmd_run,
    cmd_sweep,
    main,
)
from homodyne_bell.config import load_config

CONFIG = """\
seed = 1234
n_trials = 4000

[source]
pd_threshold = 0.02
pd_efficiency = 0.9

[detector]
noise_sigma = 0.05

[settings.a]
theta = "pi/2"
[settings.a_prime]
theta = "pi/4"
[settings.b]
theta = "pi/2"
[settings.b_prime]
theta = "-pi/2"
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_tally_and_summary(config_file, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--trials"]) == 0
    rows = read_csv(out / "tally.csv")
    assert tuple(rows[0]) == TALLY_HEADER
    assert [r[0] for r in rows[1:]] == ["ab", "ab'", "a'b", "a'b'"]
    assert sum(int(r[1]) for r in rows[1:]) == 4000
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) >= {"chsh_fair", "chsh_postselected", "seed", "config", "created"}
    assert summary["chsh_fair"]["s"] <= 2 + 5 * summary["chsh_fair"]["s_err"]
    trials = read_csv(out / "trials.csv")
    assert tuple(trials[0]) == TRIALS_HEADER and len(trials) == 4001


def test_run_is_byte_identical(config_file, tmp_path):
    for name in ("x", "y"):
        assert main(["run", "--config", str(config_file), "--out", str(tmp_path / name), "--trials"]) == 0
    for f in ("tally.csv", "trials.csv"):
        assert (tmp_path / "x" / f).read_bytes() == (tmp_path / "y" / f).read_bytes()


def test_seed_flag_overrides_file(config_file, tmp_path):
    main(["run", "--config", str(config_file), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(config_file), "--out", str(tmp_path / "b"), "--seed", "99"])
    assert (tmp_path / "a" / "tally.csv").read_bytes() != (tmp_path / "b" / "tally.csv").read_bytes()
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["seed"] == 99


def test_env_override(config_file, tmp_path, monkeypatch):
    monkeypatch.setenv("HBELL_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", str(config_file)]) == 0
    assert (tmp_path / "env" / "tally.csv").exists()


def test_sweep_columns_and_single_point(config_file, tmp_path):
    cfg = load_config(config_file)
    rows = cmd_sweep(cfg, "noise_sigma", [0.05], out_dir=tmp_path)
    run = cmd_run(cfg, out_dir=tmp_path / "run")
    assert rows[0][1] == run["fair"].s and rows[0][3] == run["postselected"].s
    assert rows[0][2] == run["fair"].s_error
    assert tuple(read_csv(tmp_path / "sweep.csv")[0]) == SWEEP_HEADER


@pytest.mark.parametrize("param", ["discriminator_threshold", "noise_sigma", "sigma_omega", "path_delay"])
def test_sweep_each_parameter(config_file, tmp_path, param):
    assert main(["sweep", "--config", str(config_file), "--out", str(tmp_path), "--param", param,
                 "--linspace", "0.5", "1.5", "3"]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 4
    assert [float(r[0]) for r in rows[1:]] == [0.5, 1.0, 1.5]


def test_sweep_empty_grid_is_usage_error(config_file, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--config", str(config_file), "--out", str(tmp_path), "--param", "noise_sigma"])
    assert exc.value.code == 2


def test_curves(config_file, tmp_path):
    assert main(["curves", "--config", str(config_file), "--out", str(tmp_path), "--theta-a", "pi/2",
                 "--theta-b-start=-pi/2", "--theta-b-end", "pi/2", "--n", "3"]) == 0
    rows = read_csv(tmp_path / "curves.csv")
    assert tuple(rows[0]) == CURVES_HEADER
    assert float(rows[1][2]) < 0.01 and abs(float(rows[3][2]) - 0.5) < 0.03
    assert rows[2][-1] == "nan"
    vis = dict(read_csv(tmp_path / "visibility.csv")[1:])
    assert float(vis["p_pp"]) > 0.95


def test_scan(config_file, tmp_path):
    assert main(["scan", "--config", str(config_file), "--out", str(tmp_path), "--n-steps", "50",
                 "--channel", "b"]) == 0
    rows = read_csv(tmp_path / "scan.csv")
    assert rows[0] == ["theta", "v_diff", "label", "residual", "alpha"]
    assert len(rows) == 51
    assert {float(r[2]) for r in rows[1:]} <= {0.0, np.pi}


def test_hist(config_file, tmp_path):
    assert main(["hist", "--config", str(config_file), "--out", str(tmp_path), "--bins", "12"]) == 0
    bins = read_csv(tmp_path / "hist.csv")
    assert bins[0] == ["bin_lo", "bin_hi", "count"] and len(bins) == 13
    stats = dict(read_csv(tmp_path / "hist_stats.csv")[1:])
    assert int(stats["n"]) == sum(int(r[2]) for r in bins[1:])
    assert 0 <= float(stats["tail_fraction"]) <= 1


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(CONFIG + "[source]\n")  # duplicate table
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text(CONFIG.replace("pd_efficiency = 0.9", "pd_efficiency = 0.9\ntap_reflectance = 1.2"))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 2


def test_invalid_sweep_value_exit_2(config_file, tmp_path):
    assert main(["sweep", "--config", str(config_file), "--out", str(tmp_path), "--param", "sigma_omega",
                 "--grid", "-1"]) == 2


def test_runtime_errors_exit_3(config_file, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    assert main(["hist", "--config", str(config_file), "--out", str(blocker / "sub")]) == 3
