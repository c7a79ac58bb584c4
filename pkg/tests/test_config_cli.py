import csv
import json
import math

import pytest

from risrelay.cli import git_blob_sha1, main
from risrelay.config import load_config, scenario_configs, training_settings
from risrelay.errors import ConfigError


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


SMALL_SWEEP = {"sweep": {"snr_db": {"start": -34.0, "stop": -22.0, "step": 4.0},
                         "max_trials": 60000, "block_size": 10000}}


class TestConfig:
    def test_defaults(self, default_cfg):
        assert default_cfg["training"]["relay"]["samples"] == 400000
        assert default_cfg["training"]["relay"]["steps"] == 600
        assert default_cfg["training"]["detector"]["samples"] == 50000
        assert default_cfg["training"]["detector"]["steps"] == 400
        s = training_settings(default_cfg, "relay", 0).train
        assert (s.batch_size, s.learning_rate, s.validation_split) == (256, 0.003, 0.1)

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="sweep.max_trails"):
            load_config(_write(tmp_path, {"sweep": {"max_trails": 10}}))
        with pytest.raises(ConfigError, match="unknown config key: bogus"):
            load_config(_write(tmp_path, {"bogus": 1}))

    def test_bad_values_named(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, {"channels": {"scenario": 5}}))
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, {"presets": {"x": [{"Nn": 3}]}}))

    def test_override_merges(self, tmp_path):
        cfg = load_config(_write(tmp_path, {"sweep": {"N": 16}}))
        assert cfg["sweep"]["N"] == 16
        assert cfg["sweep"]["scheme"] == "RS"

    def test_fig2a_expands(self, default_cfg):
        configs = scenario_configs(default_cfg, "fig2a")
        assert len(configs) == 6
        assert {(c.N, c.scheme) for c in configs} == {(n, s) for n in (8, 16, 32) for s in ("RS", "MRC")}
        assert all(c.K == 2 and c.m == 3.0 and c.scenario == 1 for c in configs)

    def test_fig3_scenario2(self, default_cfg):
        configs = scenario_configs(default_cfg, "fig3")
        assert all(c.scenario == 2 and c.relay_K == 1 and c.sd_spec.K == 2 for c in configs)

    def test_pipelines_multiply(self, default_cfg):
        configs = scenario_configs(default_cfg, "fig2b", pipelines=["analytic:ml", "dnn:dnn"])
        assert len(configs) == 8
        assert {(c.phase_mode, c.detector_mode) for c in configs} == {("analytic", "ml"), ("dnn", "dnn")}

    def test_unknown_preset(self, default_cfg):
        with pytest.raises(ConfigError):
            scenario_configs(default_cfg, "fig9")


class TestCli:
    def test_validate_default_passes(self, capsys):
        assert main(["validate-channels"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and out.count("PASS") == 6

    def test_validate_injected_omega(self, capsys):
        assert main(["validate-channels", "--inject-omega", "1.3", "--samples", "200000"]) == 1
        err = capsys.readouterr().err
        assert "nakagami E[h^2] m=3,omega=1" in err

    def test_validate_k4(self, capsys):
        assert main(["validate-channels", "--K", "4", "--samples", "1000"]) != 0
        assert "unsupported depth" in capsys.readouterr().err

    def test_smoke_all_zero(self, tmp_path):
        assert main(["--out", str(tmp_path), "simulate", "--preset", "smoke"]) == 0
        with open(tmp_path / "smoke.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 2 * 3
        assert {r["scenario"] for r in rows} == {"1", "2"}
        assert all(float(r["ber"]) == 0.0 for r in rows)
        manifest = json.loads((tmp_path / "smoke.manifest.json").read_text())
        assert manifest["results"]["git_blob_sha1"] == git_blob_sha1((tmp_path / "smoke.csv").read_bytes())
        assert manifest["seed"] == 0

    def test_simulate_reproducible_and_report(self, tmp_path):
        cfg = _write(tmp_path, SMALL_SWEEP)
        for d in ("a", "b"):
            assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d),
                         "--threads", "2"]) == 0
        a = (tmp_path / "a" / "sweep.csv").read_bytes()
        assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
        rep = tmp_path / "rep"
        csv_a = str(tmp_path / "a" / "sweep.csv")
        assert main(["report", csv_a, csv_a, "--out", str(rep), "--target", "1e-2", "--target", "1e-3"]) == 0
        with open(rep / "gaps.csv") as fh:
            gaps = list(csv.DictReader(fh))
        assert len(gaps) == 2 and all(float(g["gap_db"]) == 0.0 for g in gaps)
        curve_files = sorted(p.name for p in (rep / "curves").iterdir())
        assert len(curve_files) == 2
        assert (rep / "curves" / curve_files[0]).read_text().splitlines()[0] == "snr_db,ber"

    def test_report_unreachable(self, tmp_path):
        main(["--out", str(tmp_path), "simulate", "--preset", "smoke"])
        assert main(["report", str(tmp_path / "smoke.csv"), "--out", str(tmp_path / "r")]) == 1

    def test_missing_model_exit(self, tmp_path, capsys):
        rc = main(["simulate", "--out", str(tmp_path), "--preset", "smoke", "--pipelines", "dnn:ml"])
        assert rc == 2
        assert "relay" in capsys.readouterr().err

    def test_bad_config_exit(self, tmp_path):
        assert main(["--config", str(_write(tmp_path, {"nope": 1})), "validate-channels"]) == 2

    def test_io_error_exit(self, tmp_path):
        assert main(["simulate", "--preset", "smoke", "--detector-model", str(tmp_path / "none.rcnn"),
                     "--out", str(tmp_path)]) == 3
        bad = tmp_path / "bad.rcnn"
        bad.write_bytes(b"RCNN\x01\x00garbage-garbage")
        assert main(["simulate", "--preset", "smoke", "--relay-model", str(bad),
                     "--out", str(tmp_path)]) == 3

    def test_train_byte_identical(self, tmp_path, capsys):
        for d in ("a", "b"):
            assert main(["train", "--target", "relay", "--samples", "3000", "--steps", "5",
                         "--seed", "7", "--out", str(tmp_path / d)]) == 0
        name = "relay_s1_K2_m3_seed7.rcnn"
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert "final train loss" in capsys.readouterr().out
        manifest = json.loads((tmp_path / "a" / "train_relay.manifest.json").read_text())
        assert len(next(iter(manifest["models"].values()))) == 64

    def test_train_detector_then_simulate(self, tmp_path):
        model = tmp_path / "det.rcnn"
        assert main(["train", "--target", "detector", "--samples", "3000", "--steps", "5",
                     "--output", str(model), "--out", str(tmp_path)]) == 0
        cfg = _write(tmp_path, {"sweep": {"snr_db": [-30.0], "max_trials": 2000, "block_size": 1000}})
        assert main(["simulate", "--config", str(cfg), "--pipelines", "analytic:dnn",
                     "--detector-model", str(model), "--out", str(tmp_path / "s")]) == 0
        with open(tmp_path / "s" / "sweep.csv") as fh:
            row = next(csv.DictReader(fh))
        assert row["detector_mode"] == "dnn" and int(row["trials"]) == 2000
        assert math.isfinite(float(row["ber"]))

    def test_env_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RCS_THREADS", "3")
        cfg = _write(tmp_path, SMALL_SWEEP)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "e")]) == 0
        monkeypatch.delenv("RCS_THREADS")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "f")]) == 0
        assert (tmp_path / "e" / "sweep.csv").read_bytes() == (tmp_path / "f" / "sweep.csv").read_bytes()
