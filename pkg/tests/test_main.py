"""Tests for the hdisc command line."""

import json
import logging

import pytest
from pydantic import ValidationError

import main as main_module
from config import Settings
from errors import ContractError

SMALL = ["--kmax", "40", "--lmax", "40", "--lstep", "0.05"]
POINTS = [[0.1, 0.2, 0.3], [-0.4, 0.1, -0.2], [0.3, -0.5, 0.1]]


class TestGenerate:
    def test_writes_point_set(self, capsys):
        assert main_module.main(["generate", "--N", "8", "--seed", "4"]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "# n=1, generator=iid, seed=4"
        assert "x1,y1,t" in lines
        assert "# N_target=8" in lines
        assert len(lines) == 11

    def test_writes_file(self, tmp_path):
        path = tmp_path / "jittered.csv"
        code = main_module.main(["generate", "--N", "32", "--generator", "jittered", "--n", "2",
                                 "--out", str(path)])
        assert code == 0
        assert path.read_text(encoding="utf-8").startswith("# n=2, generator=jittered")


class TestDiscrepancy:
    def test_spectral_estimate(self, points_file, tmp_path):
        out = tmp_path / "estimate.json"
        assert main_module.main(["discrepancy", points_file(POINTS), *SMALL,
                                 "--out", str(out)]) == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["method"] == "spectral"
        assert payload["value"] > 0
        assert payload["config"]["k_max"] == 40
        assert "points" not in payload["config"]
        assert "audit" in payload["config"] and "audit" not in payload

    def test_rerun_is_byte_identical(self, points_file, tmp_path):
        path = points_file(POINTS)
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        main_module.main(["discrepancy", path, *SMALL, "--out", str(first)])
        main_module.main(["discrepancy", path, *SMALL, "--workers", "2", "--out", str(second)])
        assert first.read_bytes() == second.read_bytes()

    def test_empty_set(self, points_file, capsys):
        path = points_file([])
        assert main_module.main(["discrepancy", path, *SMALL]) == 1
        assert main_module.main(["discrepancy", path, *SMALL, "--test-mode"]) == 0
        assert json.loads(capsys.readouterr().out)["value"] == 0.0

    def test_audit_needs_full_discrepancy(self, points_file):
        path = points_file(POINTS)
        assert main_module.main(["discrepancy", path, *SMALL, "--audit", "--test-mode"]) == 1

    def test_missing_file(self, tmp_path):
        assert main_module.main(["discrepancy", str(tmp_path / "absent.csv"), *SMALL]) == 1

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,y1,t\n0,0,0\n", encoding="utf-8")
        assert main_module.main(["discrepancy", str(path), *SMALL]) == 1


class TestConfiguration:
    def test_unknown_key(self, points_file, tmp_path, caplog):
        config = tmp_path / "run.cfg"
        config.write_text("kmax=40\nbogus=1\n", encoding="utf-8")
        with caplog.at_level(logging.ERROR):
            code = main_module.main(["discrepancy", points_file(POINTS), "--config", str(config)])
        assert code == 1
        assert "bogus" in caplog.text

    def test_missing_config_file(self, points_file, tmp_path):
        assert main_module.main(["discrepancy", points_file(POINTS), "--config",
                                 str(tmp_path / "absent.cfg")]) == 1

    def test_file_aliases_and_comments(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("# spectral grid\nkmax = 40\nlstep=0.05  # coarse\ntest-mode=true\n",
                          encoding="utf-8")
        assert main_module.read_config_file(str(config)) == {
            "k_max": "40", "lambda_step": "0.05", "test_mode": "true"}

    def test_line_without_value(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("kmax\n", encoding="utf-8")
        with pytest.raises(ContractError):
            main_module.read_config_file(str(config))

    def test_flags_override_file(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("kmax=40\nsamples=5000\n", encoding="utf-8")
        args = main_module.build_parser().parse_args(
            ["scaling", "--config", str(config), "--kmax", "30", "--Ns", "8,16,32,64"])
        cfg = main_module.resolve_config(args)
        assert (cfg.k_max, cfg.samples, cfg.Ns) == (30, 5000, [8, 16, 32, 64])
        assert cfg.lambda_max == main_module.settings.lambda_max

    def test_s_values_must_lie_in_unit_interval(self):
        with pytest.raises(ValidationError):
            main_module.RunConfig(command="kernel", k_max=1, lambda_max=1.0, lambda_step=1.0,
                                  samples=1000, reps=3, s_values="0.2,1.5")

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("HDISC_WORKERS", "3")
        monkeypatch.setenv("HDISC_K_MAX", "64")
        fresh = Settings()
        assert (fresh.workers, fresh.k_max) == (3, 64)

    def test_bad_flag_exits_with_config_code(self):
        with pytest.raises(SystemExit) as info:
            main_module.main(["discrepancy", "--kmax", "many", "points.csv"])
        assert info.value.code == 1

    def test_unknown_suite(self):
        with pytest.raises(SystemExit) as info:
            main_module.main(["validate", "--suite", "nope"])
        assert info.value.code == 1


class TestOtherCommands:
    def test_validate_single_suite(self, capsys):
        assert main_module.main(["validate", "--suite", "phi_k"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["pass"] is True
        assert [s["suite"] for s in payload["suites"]] == ["phi_k"]

    def test_scaling_with_two_sizes_is_a_reduced_fit(self, capsys):
        code = main_module.main(["scaling", "--Ns", "16,32", "--reps", "1", "--samples", "2000",
                                 "--kmax", "30", "--lmax", "30", "--lstep", "0.1"])
        assert code != 1
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 5
        assert lines[-2] == "slope,slope_stderr"

    def test_scaling_needs_two_sizes(self):
        assert main_module.main(["scaling", "--Ns", "16"]) == 1

    def test_iterm(self, capsys):
        assert main_module.main(["iterm", "--s", "0.2", "--s-lambda", "6"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "s,Lambda,i_term,scaled"
        assert "# band=1.0" in lines
        assert "# pass=True" in lines
