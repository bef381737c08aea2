import json

import pytest

from gasvacuum import acceptance, cli
from gasvacuum.cli import ConfigError, RunConfig, main, parse_config

SMALL = {"horizon": 20, "n_cells": 48, "sample_count": 12}


def write_cfg(tmp_path, data, name="cfg.json"):
    f = tmp_path / name
    f.write_text(json.dumps(data))
    return str(f)


def test_empty_config_defaults():
    cfg = parse_config("")
    assert (cfg.gamma, cfg.mass, cfg.n_cells, cfg.epsilon, cfg.horizon) == (2.0, 1.0, 200, 1e-3, 1000.0)
    assert cfg == RunConfig()


def test_gamma_bound_named():
    with pytest.raises(ConfigError, match=r"gamma.*> 1"):
        parse_config('{"gamma": 0.9}')


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config('{"gamma": 2, "gamma": 3}')


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="gama"):
        parse_config('{"gama": 2}')


@pytest.mark.parametrize(
    "text,field",
    [
        ('{"mass": 0}', "mass"),
        ('{"n_cells": 16}', "n_cells"),
        ('{"cfl": 0.95}', "cfl"),
        ('{"horizon": 0.5}', "horizon"),
        ('{"n_cells": 64.5}', "n_cells"),
        ('{"gamma": "two"}', "gamma"),
        ('{"grading": "dyadic"}', "grading"),
        ('[1, 2]', "object"),
        ('{"gamma": ', "malformed"),
    ],
)
def test_invalid_configs(text, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(text)


def test_config_roundtrip():
    cfg = parse_config('{"gamma": 3, "shape": [1, -0.5], "fit_window": [5, 50]}')
    assert parse_config(json.dumps(cfg.to_dict())) == cfg


def test_bad_config_exit_code(tmp_path):
    assert main(["barenblatt", "--config", write_cfg(tmp_path, {"gamma": 0.9})]) == cli.EXIT_CONFIG
    assert main(["barenblatt", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_barenblatt_and_corrector_outputs(tmp_path):
    out = tmp_path / "o"
    cfg = write_cfg(tmp_path, {"horizon": 200})
    assert main(["barenblatt", "--config", cfg, "--out", str(out)]) == 0
    assert main(["corrector", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "barenblatt.csv").read_text().splitlines()[0] == "r,t,rho,u"
    assert (out / "corrector.csv").read_text().splitlines()[0] == "t,h,h_t,eta_r_tilde"
    report = json.loads((out / "report.json").read_text())
    assert report["barenblatt"]["B"] == 0.05
    assert report["corrector"]["decay"]["tail_stable"] is True
    assert json.loads((out / "config.json").read_text())["horizon"] == 200.0


def test_simulate_then_rates(tmp_path):
    out = tmp_path / "o"
    cfg = write_cfg(tmp_path, SMALL)
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    for name in ("trajectory.csv", "energy.csv", "corrector.csv", "report.json", "config.json"):
        assert (out / name).exists()
    header = (out / "energy.csv").read_text().splitlines()[0].split(",")
    assert header[:5] == ["t", "E_0", "E_1", "E_2", "E_total"]
    assert header[-3:] == ["slope_min", "slope_max", "R"]
    assert main(["rates", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert "simulate" in report and "rates" in report
    assert report["rates"]["boundary_radius"]["theory_exponent"] == pytest.approx(0.2)


def test_simulate_zero_perturbation(tmp_path):
    out = tmp_path / "z"
    assert main(["simulate", "--config", write_cfg(tmp_path, SMALL | {"epsilon": 0}), "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["simulate"]["sup_zeta"] < 1e-10


def test_rates_without_trajectory(tmp_path, capsys):
    assert main(["rates", "--out", str(tmp_path / "nothing")]) != 0
    assert "simulate" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, SMALL | {"epsilon": 1.0})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == cli.EXIT_NUMERICAL


def test_determinism(tmp_path):
    cfg = write_cfg(tmp_path, SMALL)
    for d in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("trajectory.csv", "energy.csv", "corrector.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_independent_of_jobs(tmp_path):
    cfg = write_cfg(tmp_path, {"horizon": 10, "n_cells": 40, "sample_count": 8, "sweep": {"gamma": [1.5, 3.0]}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s1"), "--jobs", "1"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s2"), "--jobs", "2"]) == 0
    runs = [json.loads((tmp_path / d / "report.json").read_text())["sweep"]["runs"] for d in ("s1", "s2")]
    assert [r["gamma"] for r in runs[0]] == [1.5, 3.0]
    assert runs[0] == runs[1]
    for i in ("000", "001"):
        a = (tmp_path / "s1" / f"run_{i}" / "trajectory.csv").read_bytes()
        assert a == (tmp_path / "s2" / f"run_{i}" / "trajectory.csv").read_bytes()


def test_sweep_requires_grid(tmp_path):
    assert main(["sweep", "--config", write_cfg(tmp_path, SMALL), "--out", str(tmp_path / "s")]) == cli.EXIT_CONFIG
    bad = write_cfg(tmp_path, SMALL | {"sweep": {"output_dir": ["x"]}})
    assert main(["sweep", "--config", bad]) == cli.EXIT_CONFIG


def _fake(passed):
    return [acceptance.CriterionResult(1, "fake", passed, {"x": 1.0}, "none")]


@pytest.mark.parametrize("passed,code", [(True, 0), (False, 3)])
def test_selftest_status_and_summary(tmp_path, monkeypatch, capsys, passed, code):
    seen = {}

    def fake_run(seed=0, numbers=None):
        seen["seed"] = seed
        return _fake(passed)

    monkeypatch.setattr(acceptance, "run_acceptance", fake_run)
    assert main(["selftest", "--out", str(tmp_path), "--seed", "11"]) == code
    assert seen["seed"] == 11
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary == {"passed": int(passed), "total": 1, "failed": [] if passed else [1]}
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["selftest"]["criteria"][0]["passed"] is passed
