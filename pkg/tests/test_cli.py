import csv
import json

import pytest

from w2alink.cli import main

SMALL = """
[geometry]
z_w = 10
z_a = 5
theta_fov = 60
[environment]
wind_speed = 10
[simulation]
n_trials = 20000
seed = 5
[analysis]
h_th = 1e-5
wind_grid = 10
z_w_grid = 10
z_a_grid = 5
theta_fov_grid = 60
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return str(p)


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_simulate_writes_outputs_and_echoes_config(small_cfg, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", small_cfg, "--out", str(out), "--trials", "5e3"]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["config"]["simulation"] == {"n_trials": 5000, "seed": 5}
    assert doc["n_trials"] == 5000
    text = (out / "hist_theta_A.csv").read_text()
    assert text.startswith("# {")
    rows = read_csv(out / "hist_theta_A.csv")
    assert list(rows[0]) == ["lo_deg", "hi_deg", "count_1", "density_per_deg"]
    assert "np.float64" not in text
    assert sum(int(r["count_1"]) for r in rows) == 5000 - doc["counts"]["tir"]


def test_simulate_is_byte_identical_across_workers(small_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", small_cfg, "--out", str(a), "--workers", "1"]) == 0
    assert main(["simulate", "--config", small_cfg, "--out", str(b), "--workers", "3"]) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[geometry]\nz_w = -10\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert f"{bad}:2:" in capsys.readouterr().err
    assert main(["simulate", "--trials", "10", "--out", str(tmp_path)]) == 2


def test_bad_integer_flag_is_rejected():
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--trials", "2.5"])
    assert err.value.code == 2


def test_fit_aoa_single_wind_notice(small_cfg, tmp_path, capsys):
    assert main(["fit-aoa", "--config", small_cfg, "--out", str(tmp_path)]) == 0
    assert "notice: regression skipped" in capsys.readouterr().err
    rows = read_csv(tmp_path / "fit_aoa.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    assert abs(float(rows[0]["k_fit_1"]) - 1.6) < 0.3


def test_fit_bmm_outputs(small_cfg, tmp_path):
    assert main(["fit-bmm", "--config", small_cfg, "--out", str(tmp_path), "--trials", "1000"]) == 0
    doc = json.loads((tmp_path / "bmm.json").read_text())
    rec = doc["mixtures"][0]
    assert rec["n_samples"] > 0 and 0 <= rec["w1"] <= 1
    rows = read_csv(tmp_path / "bmm.csv")
    assert rows[0]["wind_speed_mps"] == "10.0" and rows[0]["converged"] in ("0", "1")


def test_outage_curve_row_and_validity(small_cfg, tmp_path):
    assert main(["outage-curve", "--config", small_cfg, "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "outage_curve.csv")
    assert row["valid"] == "1"
    p_int, p_out = float(row["p_int_1"]), float(row["p_out_closed_1"])
    assert float(row["p_tir_1"]) <= p_int <= p_out <= 1.0
    high = tmp_path / "high.cfg"
    high.write_text(SMALL.replace("h_th = 1e-5", "h_th = 1.0"))
    assert main(["outage-curve", "--config", str(high), "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "outage_curve.csv")
    assert row["valid"] == "0" and float(row["p_out_closed_1"]) == 1.0


def test_outage_curve_requires_threshold(small_cfg, tmp_path):
    none = tmp_path / "none.cfg"
    none.write_text(SMALL.replace("h_th = 1e-5", "h_th = none"))
    assert main(["outage-curve", "--config", str(none), "--out", str(tmp_path)]) == 2


def test_pathloss(tmp_path):
    assert main(["pathloss", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "pathloss.csv")
    assert rows and all(0 < float(v) <= 1 for r in rows for k, v in r.items() if k.startswith("h_L"))


def test_validate_passes_on_small_grid(small_cfg, tmp_path, capsys):
    assert main(["validate", "--config", small_cfg, "--out", str(tmp_path)]) == 0
    assert "checks passed" in capsys.readouterr().out
    doc = json.loads((tmp_path / "validate.json").read_text())
    assert doc["passed"] and doc["n_failed"] == 0


def test_validate_zero_tolerance_fails(small_cfg, tmp_path):
    assert main(["validate", "--config", small_cfg, "--out", str(tmp_path), "--tolerance-scale", "0"]) == 1


def test_validate_with_mixture_record(small_cfg, tmp_path, capsys):
    assert main(["fit-bmm", "--config", small_cfg, "--out", str(tmp_path)]) == 0
    good = tmp_path / "bmm.json"
    assert main(["validate", "--config", small_cfg, "--out", str(tmp_path), "--mixture", str(good)]) == 0
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text(good.read_text()[:200])
    capsys.readouterr()
    assert main(["validate", "--config", small_cfg, "--out", str(tmp_path), "--mixture", str(corrupt)]) == 1
    assert "FAIL mixture_record" in capsys.readouterr().err
