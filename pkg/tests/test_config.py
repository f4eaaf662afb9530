import pytest

from w2alink.config import ConfigError, ExperimentConfig, load_config, parse_config, resolve_config_path


def test_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.simulation.n_trials == 200_000


def test_parse_sections_and_lists():
    cfg = parse_config("""
[geometry]
z_w = 30
theta_fov = 10   # inline comment
[simulation]
n_trials = 2e5
seed = 7
[analysis]
wind_grid = 6, 10, 14
h_th = none
[h_th_table]
10/5 = 1e-9
30/10 = 2e-12
[environment]
freeze_r_ref = yes
""")
    assert cfg.geometry.z_w == 30.0 and cfg.geometry.theta_FoV == 10.0
    assert cfg.simulation.n_trials == 200_000 and cfg.simulation.seed == 7
    assert cfg.analysis.wind_grid == (6.0, 10.0, 14.0)
    assert cfg.analysis.h_th is None
    assert cfg.analysis.threshold_for(10, 5) == 1e-9
    assert cfg.analysis.threshold_for(30.0, 10.0) == 2e-12
    assert cfg.analysis.threshold_for(10, 10) is None
    assert cfg.environment.freeze_r_ref is True


@pytest.mark.parametrize("text, line, fragment", [
    ("[geometry]\nz_w = 10\nbogus = 1\n", 3, "unknown key"),
    ("[geometry]\nz_w = 10\n\n[nonsense]\na = 1\n", 4, "unknown section"),
    ("[geometry]\nz_w = -1\n", 2, "z_w"),
    ("[simulation]\nseed = 1\nn_trials = 10\n", 3, "n_trials"),
    ("[simulation]\nn_trials = 2.5e3x\n", 2, "n_trials"),
    ("[simulation]\nn_trials = 1500.5\n", 2, "integer"),
    ("[environment]\nwind_speed = -3\n", 2, "wind_speed"),
    ("[h_th_table]\n10-5 = 1e-9\n", 2, "h_th_table"),
    ("[environment]\nfreeze_r_ref = maybe\n", 2, "boolean"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "bad.cfg")
    assert err.value.line == line
    assert str(err.value).startswith(f"bad.cfg:{line}:")
    assert fragment in str(err.value)


def test_duplicate_key_is_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("[geometry]\nz_w = 1\nz_w = 2\n")
    assert err.value.line == 3


@pytest.mark.parametrize("name", ["fig2", "fig3", "fig6", "fig6.cfg"])
def test_presets_resolve(name):
    cfg = load_config(name)
    assert cfg.environment.water.absorption == 0.0088
    assert cfg.simulation.seed == 20260101
    assert resolve_config_path(name).name.startswith(name.split(".")[0])


def test_fig6_grid():
    a = load_config("fig6").analysis
    assert a.wind_grid == (6.0, 10.0, 14.0) and a.theta_fov_grid == (10.0, 30.0, 60.0)
    assert a.z_w_grid == (10.0, 30.0) and a.z_a_grid == (5.0, 10.0)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


def test_overrides_are_validated():
    cfg = ExperimentConfig().with_overrides(seed=3, trials=5000, workers=2)
    assert (cfg.simulation.seed, cfg.simulation.n_trials, cfg.simulation.workers) == (3, 5000, 2)
    for kwargs in ({"trials": 10}, {"workers": 0}, {"seed": -1}):
        with pytest.raises(ConfigError) as err:
            ExperimentConfig().with_overrides(**kwargs)
        assert str(err.value).startswith("command line")


def test_echo_omits_workers():
    echo = ExperimentConfig().with_overrides(workers=8).echo()
    assert "workers" not in echo["simulation"]
    assert echo == ExperimentConfig().echo()
