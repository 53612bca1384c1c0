"""Configuration round-trips, hypothesis gating and CLI behavior."""

import json

import pytest

from hypolattice.cli import main
from hypolattice.config import (
    SHIPPED_CONFIGS,
    SUITE_NAMES,
    ExperimentConfig,
    load_config,
)
from hypolattice.errors import HypothesisViolation, InvalidInputError
from hypolattice.suites import CLAIMS, suite_seed


class TestConfig:
    def test_json_round_trip_preserves_hash(self):
        config = load_config("heisenberg_smoke")
        clone = ExperimentConfig.from_json(config.to_json())
        assert clone == config
        assert clone.hash() == config.hash()

    def test_shipped_hash_pinned(self):
        # regression pin: any change to the shipped config must be deliberate
        assert load_config("heisenberg_smoke").hash() == (
            "ffa133455324ca3bf65a62d7d89a3e4fc0714fab2cd8540f2b966fd7220b7013"
        )

    def test_hash_sensitive_to_every_field(self):
        base = ExperimentConfig()
        assert ExperimentConfig(seed=1).hash() != base.hash()
        assert ExperimentConfig(lam=2.0).hash() != base.hash()

    def test_unknown_field_rejected(self):
        with pytest.raises(InvalidInputError):
            ExperimentConfig.from_dict({"modle": "heisenberg"})

    def test_default_validates(self):
        assert ExperimentConfig().validate()

    def test_nonpositive_rate_names_h3(self):
        with pytest.raises(HypothesisViolation) as exc:
            ExperimentConfig(lam=0.0).validate()
        assert "H3" in str(exc.value)

    def test_linear_interaction_names_h1(self):
        cfg = ExperimentConfig(interaction={"family": "linear", "C": 1.0, "r": 1})
        with pytest.raises(HypothesisViolation) as exc:
            cfg.validate()
        assert "H1" in str(exc.value)

    def test_bad_weights_rejected(self):
        with pytest.raises(InvalidInputError):
            ExperimentConfig(weights={"delta": 1.0}).validate()

    def test_unknown_suite_rejected(self):
        with pytest.raises(InvalidInputError):
            ExperimentConfig(suites=["lyapunov", "astrology"]).validate()

    def test_bad_step_rejected(self):
        with pytest.raises(InvalidInputError):
            ExperimentConfig(integrator={"h": 0.0, "T": 1.0}).validate()

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(ExperimentConfig(seed=5).to_json())
        assert load_config(str(path)).seed == 5

    def test_suite_registry_complete(self):
        assert set(SUITE_NAMES) == set(CLAIMS)
        assert set(SHIPPED_CONFIGS["heisenberg_smoke"]["suites"]) == set(SUITE_NAMES)


class TestSuiteSeeds:
    def test_deterministic_and_distinct(self):
        a = suite_seed(7, "lyapunov")
        assert a == suite_seed(7, "lyapunov")
        assert a != suite_seed(7, "control")
        assert a != suite_seed(8, "lyapunov")
        assert 0 <= a < 2**31


class TestCli:
    def _write_config(self, tmp_path, suites, suite_params):
        cfg = ExperimentConfig(seed=123, suites=suites, suite_params=suite_params)
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        return path

    def test_list_claims(self, capsys):
        assert main(["list-claims"]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        assert len(lines) == len(SUITE_NAMES)

    def test_validate_ok(self, capsys):
        assert main(["validate", "--config", "heisenberg_smoke"]) == 0
        assert "valid:" in capsys.readouterr().out

    def test_validate_bad_config(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(ExperimentConfig(lam=-1.0).to_json())
        assert main(["validate", "--config", str(path)]) == 1
        assert "invalid" in capsys.readouterr().out

    def test_control_command(self, capsys):
        code = main(["control", "--from", "0,0,0", "--to", "1,0.5,-0.3",
                     "--t", "1.0", "--lambda", "1.0"])
        assert code == 0
        out = capsys.readouterr().out
        assert "u1'(s)" in out and "verified endpoint error" in out

    def test_simulate_command(self, tmp_path, capsys):
        code = main(["simulate", "--config", "heisenberg_smoke", "--n", "1",
                     "--T", "0.05", "--replicas", "2",
                     "--out-dir", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,s_norm_r0,s_norm_r1"
        assert len(lines) > 2

    def test_run_emits_verdicts_and_metadata(self, tmp_path, capsys):
        cfg = self._write_config(
            tmp_path, ["product_tv"], {"product_tv": {"replicas": 2000,
                                                      "pilot": 4000}}
        )
        code = main(["run", "--config", str(cfg), "--out-dir",
                     str(tmp_path / "out")])
        assert code == 0
        records = [json.loads(l) for l in
                   (tmp_path / "out" / "verdicts.jsonl").read_text().splitlines()]
        assert records
        for rec in records:
            assert rec["suite"] == "product_tv"
            assert rec["seed"] == 123
            assert len(rec["config_hash"]) == 64
        meta = json.loads((tmp_path / "out" / "metadata.json").read_text())
        assert meta["config_hash"] == records[0]["config_hash"]
        out = capsys.readouterr().out
        assert "[" in out and "done:" in out

    def test_run_worker_count_invariance(self, tmp_path, capsys):
        cfg = self._write_config(
            tmp_path,
            ["product_tv", "control"],
            {"product_tv": {"replicas": 1000, "pilot": 2000},
             "control": {"n_problems": 10}},
        )
        assert main(["run", "--config", str(cfg), "--out-dir",
                     str(tmp_path / "w1"), "--workers", "1"]) == 0
        assert main(["run", "--config", str(cfg), "--out-dir",
                     str(tmp_path / "w3"), "--workers", "3"]) == 0
        capsys.readouterr()
        assert (tmp_path / "w1" / "verdicts.jsonl").read_bytes() == (
            tmp_path / "w3" / "verdicts.jsonl"
        ).read_bytes()

    def test_seed_override(self, tmp_path, capsys):
        cfg = self._write_config(
            tmp_path, ["product_tv"], {"product_tv": {"replicas": 1000,
                                                      "pilot": 2000}}
        )
        main(["run", "--config", str(cfg), "--seed", "9",
              "--out-dir", str(tmp_path / "out")])
        capsys.readouterr()
        rec = json.loads(
            (tmp_path / "out" / "verdicts.jsonl").read_text().splitlines()[0]
        )
        assert rec["seed"] == 9
