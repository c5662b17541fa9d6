import pytest

from pibrake.config import DEFAULT_FRACTIONS, RunConfig, load_run_config
from pibrake.dimensions import FORCE


def test_defaults_without_file():
    cfg = load_run_config(None)
    assert cfg.source == "kinematic"
    assert cfg.scheme == "pi"
    assert set(cfg.vehicles) == {"small", "long", "large"}
    assert cfg.gbt.n_rounds >= 1
    assert cfg.fractions == DEFAULT_FRACTIONS
    assert cfg.data_dir == cfg.out_dir / "data"


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "nope.conf")


def test_full_file_round_trip(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text(
        """
[run]
source = surrogate
scheme = pi-aug
seed = 11
out = results

[gbt]
rounds = 42
lr = 0.2
depth = 5
min_samples_leaf = 3
subsample = 0.9

[vehicles]
one = 0.5, 20, 30

[curve]
fractions = 0.1, 0.5
repeats = 3

[compare]
target = one
output = theta

[grid.kinematic]
v_i = 0.5, 2.0, 4

[grid.surrogate]
mu = 0.3, 0.6
v_i = 1.0, 2.0, 3

[variables]
F = M L T^-2
"""
    )
    cfg = load_run_config(path)
    assert cfg.source == "surrogate"
    assert cfg.scheme == "pi-aug"
    assert cfg.seed == 11
    assert str(cfg.out_dir) == "results"
    assert cfg.gbt.n_rounds == 42
    assert cfg.gbt.learning_rate == 0.2
    assert cfg.gbt.max_depth == 5
    assert cfg.gbt.subsample == 0.9
    assert list(cfg.vehicles) == ["one"]
    assert cfg.vehicles["one"].wheelbase_l == 0.5
    assert cfg.fractions == (0.1, 0.5)
    assert cfg.repeats == 3
    assert cfg.target_vehicle == "one"
    assert cfg.target_output == "theta"
    assert cfg.kinematic_grid["v_i"] == (0.5, 2.0, 4)
    assert cfg.kinematic_grid["a_g"] == RunConfig().kinematic_grid["a_g"]  # untouched default
    assert cfg.surrogate_grid["mu"] == (0.3, 0.6)
    assert cfg.variables[0].name == "F"
    assert cfg.variables[0].dimension == FORCE


def test_bad_vehicle_line(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("[vehicles]\nbad = 1.0, 2.0\n")
    with pytest.raises(ValueError, match="l, Nf, Nr"):
        load_run_config(path)
