"""End-to-end command-line runs through subprocesses on a coarse grid."""

import json
import os
import subprocess
import sys

import pytest
import yaml

# default dynamics dt is kept: the zero-kick stability verdict compares
# pure splitting error against an absolute bar calibrated for dt = 1e-3
_COARSE = {
    "grid": {"r_max": 120.0, "n": 1024},
    "dynamics": {"dt": 1.0e-3, "record_every": 250},
}


def run_cli(*args, env_extra=None, timeout=300):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "normwave.cli", *args],
        capture_output=True, text=True, env=env, timeout=timeout)


@pytest.fixture(scope="module")
def coarse_cfg(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "coarse.yaml"
    p.write_text(yaml.safe_dump(_COARSE))
    return str(p)


@pytest.fixture(scope="module")
def shot_dir(coarse_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("shot")
    res = run_cli("-c", coarse_cfg, "-o", str(out), "shoot", "0.1")
    assert res.returncode == 0, res.stderr
    return out


@pytest.fixture(scope="module")
def thresholds_dir(coarse_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("th")
    res = run_cli("-c", coarse_cfg, "-o", str(out), "thresholds")
    assert res.returncode == 0, res.stderr
    return out


class TestUsage:
    def test_help(self):
        res = run_cli("--help")
        assert res.returncode == 0
        for cmd in ("check", "ground", "local", "thresholds", "shoot",
                    "mpass", "evolve", "stability"):
            assert cmd in res.stdout

    def test_version(self):
        res = run_cli("--version")
        assert res.returncode == 0
        assert "0.1.0" in res.stdout

    def test_malformed_yaml_rejected(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("model: kind: cubic\n")
        res = run_cli("-c", str(bad), "-o", str(tmp_path / "out"), "check")
        assert res.returncode == 2

    def test_unknown_config_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump({"grd": {"n": 512}}))
        res = run_cli("-c", str(bad), "-o", str(tmp_path / "out"), "check")
        assert res.returncode == 2
        assert "unknown config key" in res.stderr

    def test_unknown_model_kind_rejected(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump({"model": {"kind": "septic"}}))
        res = run_cli("-c", str(bad), "-o", str(tmp_path / "out"), "check")
        assert res.returncode == 2

    def test_shoot_argument_conflicts(self, coarse_cfg, tmp_path):
        out = str(tmp_path / "out")
        both = run_cli("-c", coarse_cfg, "-o", out, "shoot", "0.1",
                       "--sweep", "0.05", "0.2", "4")
        neither = run_cli("-c", coarse_cfg, "-o", out, "shoot")
        nodal_sweep = run_cli("-c", coarse_cfg, "-o", out, "shoot",
                              "--sweep", "0.05", "0.2", "4", "--nodes", "1")
        assert both.returncode == 2
        assert neither.returncode == 2
        assert nodal_sweep.returncode == 2


class TestCheck:
    def test_default_model_report(self, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-o", str(out), "check")
        assert res.returncode == 0, res.stderr
        doc = json.loads((out / "check_report.json").read_text())
        assert set(doc["flags"]) == {
            "vanishing_slope_at_zero", "growth_admissible",
            "F_positive_somewhere", "F_supercritical_at_zero",
            "ar_inequality", "mass_zero_threshold",
            "mass_positive_threshold", "ground_state_comparison"}
        for name in ("vanishing_slope_at_zero", "growth_admissible",
                     "F_positive_somewhere", "F_supercritical_at_zero",
                     "ar_inequality"):
            assert doc["flags"][name] == "holds"
        manifest = json.loads((out / "check_manifest.json").read_text())
        assert set(manifest["artifacts"]) == set(os.listdir(out))

    def test_required_condition_failure_exits_3(self, tmp_path):
        cfg = tmp_path / "planar.yaml"
        cfg.write_text(yaml.safe_dump({"model": {"dimension": 2}}))
        res = run_cli("-c", str(cfg), "-o", str(tmp_path / "out"),
                      "check", "--require", "f4")
        assert res.returncode == 3
        assert "hypothesis failure" in res.stderr

    def test_unknown_condition_code_rejected(self, tmp_path):
        res = run_cli("-o", str(tmp_path / "out"), "check", "--require", "zz")
        assert res.returncode == 2


class TestShoot:
    def test_single_shot_report(self, shot_dir):
        doc = json.loads((shot_dir / "shoot_report.json").read_text())
        assert doc["omega"] == 0.1
        assert doc["node_count"] == 0
        assert doc["u0"] == pytest.approx(0.91885213, rel=1e-2)
        assert doc["mass"] == pytest.approx(622.43261, rel=1e-2)
        assert doc["field_csv"] == "shoot_field.csv"
        assert (shot_dir / "shoot_field.csv").exists()

    def test_manifest_lists_every_file(self, shot_dir):
        manifest = json.loads((shot_dir / "shoot_manifest.json").read_text())
        assert set(manifest["artifacts"]) == set(os.listdir(shot_dir))
        assert manifest["command"] == "shoot"
        assert manifest["wall_time_s"] > 0.0
        assert len(manifest["config_hash"]) == 64

    def test_no_bracket_exits_5(self, coarse_cfg, tmp_path):
        res = run_cli("-c", coarse_cfg, "-o", str(tmp_path / "out"),
                      "shoot", "0.25")
        assert res.returncode == 5
        assert "no bracket" in res.stderr

    def test_nodal_shot(self, coarse_cfg, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-c", coarse_cfg, "-o", str(out),
                      "shoot", "0.05", "--nodes", "1")
        assert res.returncode == 0, res.stderr
        doc = json.loads((out / "shoot_report.json").read_text())
        assert doc["node_count"] == 1
        assert doc["mass"] == pytest.approx(3929.885, rel=5e-2)

    def test_sweep_artifacts(self, coarse_cfg, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-c", coarse_cfg, "-o", str(out),
                      "shoot", "--sweep", "0.05", "0.20", "4")
        assert res.returncode == 0, res.stderr
        assert "3/4" in res.stdout
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("# normwave-sweep v1")
        assert lines[1] == "omega,u0,mass,energy,action,nodes"
        assert len(lines) == 2 + 4
        present = lines[2].split(",")
        assert len(present) == 6 and all(present)
        absent = lines[-1].split(",")
        assert len(absent) == 6
        assert float(absent[0]) == pytest.approx(0.20)
        assert absent[1:] == [""] * 5
        svg = (out / "sweep.svg").read_text()
        assert svg.startswith("<?xml")

    def test_parallel_sweep(self, coarse_cfg, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-j", "2", "-c", coarse_cfg, "-o", str(out),
                      "shoot", "--sweep", "0.05", "0.15", "5")
        assert res.returncode == 0, res.stderr
        assert "5/5" in res.stdout


class TestDeterminism:
    def test_identical_configs_identical_payloads(self, coarse_cfg, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            res = run_cli("-c", coarse_cfg, "-o", str(out), "shoot", "0.1")
            assert res.returncode == 0, res.stderr
        for name in ("shoot_config.yaml", "shoot_field.csv",
                     "shoot_report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestOutputResolution:
    def test_env_variable_honored(self, tmp_path):
        env_dir = tmp_path / "from_env"
        res = run_cli("check", env_extra={"NORMWAVE_OUT": str(env_dir)})
        assert res.returncode == 0, res.stderr
        assert (env_dir / "check_manifest.json").exists()

    def test_flag_overrides_env_variable(self, tmp_path):
        env_dir = tmp_path / "ignored"
        flag_dir = tmp_path / "chosen"
        res = run_cli("-o", str(flag_dir), "check",
                      env_extra={"NORMWAVE_OUT": str(env_dir)})
        assert res.returncode == 0, res.stderr
        assert (flag_dir / "check_manifest.json").exists()
        assert not env_dir.exists()


class TestFlowCommands:
    def test_ground_vanishes_below_threshold(self, coarse_cfg, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-c", coarse_cfg, "-o", str(out), "ground", "150")
        assert res.returncode == 0, res.stderr
        doc = json.loads((out / "ground_report.json").read_text())
        assert doc["classification"] == "Vanished"

    def test_thresholds_artifacts(self, thresholds_dir):
        doc = json.loads((thresholds_dir / "thresholds.json").read_text())
        assert 200.0 < doc["mstar"] < 280.0
        assert doc["mstarstar"] < doc["mstar"]
        assert 0.05 < doc["rho_hat"] < 0.5
        assert (thresholds_dir / doc["reference_csv"]).exists()
        manifest = json.loads(
            (thresholds_dir / "thresholds_manifest.json").read_text())
        assert set(manifest["artifacts"]) == set(os.listdir(thresholds_dir))

    def test_local_reuses_thresholds_file(self, coarse_cfg, thresholds_dir,
                                          tmp_path):
        doc = json.loads((thresholds_dir / "thresholds.json").read_text())
        mass = 0.5 * (doc["mstar"] + doc["mstarstar"])
        out = tmp_path / "out"
        res = run_cli("-c", coarse_cfg, "-o", str(out), "local", str(mass),
                      "--thresholds", str(thresholds_dir / "thresholds.json"))
        assert res.returncode == 0, res.stderr
        rep = json.loads((out / "local_report.json").read_text())
        assert rep["classification"] == "ConvergedCritical"
        assert rep["functionals"]["energy"] > 0.0
        assert rep["multiplier"] > 0.0
        assert rep["thresholds"]["mstar"] == doc["mstar"]

    def test_mpass_below_local_threshold_exits_5(self, coarse_cfg,
                                                 thresholds_dir, tmp_path):
        res = run_cli("-c", coarse_cfg, "-o", str(tmp_path / "out"),
                      "mpass", "216.4",
                      "--thresholds", str(thresholds_dir / "thresholds.json"))
        assert res.returncode == 5
        assert "no admissible terminal state" in res.stderr


class TestDynamicsCommands:
    def test_evolve(self, coarse_cfg, shot_dir, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-c", coarse_cfg, "-o", str(out), "evolve",
                      str(shot_dir / "shoot_field.csv"), "0.5")
        assert res.returncode == 0, res.stderr
        doc = json.loads((out / "evolve_report.json").read_text())
        assert doc["records"] >= 2
        assert doc["mass_drift_rel"] <= 1e-9
        traj = (out / "evolve_trajectory.csv").read_text().splitlines()
        assert traj[0] == "t,mass,energy"
        final = (out / "evolve_final.csv").read_text().splitlines()
        assert final[0].startswith("# normwave-cfield v1")
        assert final[1] == "r,re,im"

    def test_stability(self, coarse_cfg, shot_dir, tmp_path):
        out = tmp_path / "out"
        res = run_cli("-c", coarse_cfg, "-o", str(out), "stability",
                      str(shot_dir / "shoot_field.csv"), "0.0", "0.5")
        assert res.returncode == 0, res.stderr
        doc = json.loads((out / "stability_report.json").read_text())
        assert doc["verdict"] == "StaysClose"
        assert doc["omega_recovered"] == pytest.approx(0.1, abs=1e-6)
        assert doc["max_distance"] <= 1e-6
        dist = (out / "stability_distance.csv").read_text().splitlines()
        assert dist[0] == "t,distance"
