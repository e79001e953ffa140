"""Tests for the validation suites."""

import pytest

from errors import ContractError
from validation import SUITES, SuiteResult, fw_errors, run_suites


class TestSuites:
    @pytest.mark.parametrize("name", ["chihat_closed_form", "phi_k", "cutoff"])
    def test_passes(self, name):
        (result,) = run_suites([name])
        assert result.suite == name
        assert result.passed
        assert result.metric <= result.tolerance

    def test_unknown_suite(self):
        with pytest.raises(ContractError):
            run_suites(["plancherel", "nope"])

    def test_result_dict(self):
        result = SuiteResult("phi_k", True, 1e-9, 1e-6)
        assert result.as_dict() == {"suite": "phi_k", "pass": True, "metric": 1e-9,
                                    "tolerance": 1e-6}

    def test_registry(self):
        assert set(SUITES) == {"plancherel", "chihat_closed_form", "phi_k", "fw_scaling",
                               "cutoff"}

    def test_fw_index_form(self):
        with pytest.raises(ContractError):
            fw_errors([51])

    def test_fw_errors_are_small(self):
        errors = fw_errors([402], points=50)
        assert errors.shape == (1,)
        assert errors.max() < 0.05

    @pytest.mark.slow
    def test_plancherel(self):
        (result,) = run_suites(["plancherel"], n=1, k_max=200, lambda_max=200.0,
                               lambda_step=0.02)
        assert result.passed

    @pytest.mark.slow
    def test_fw_scaling(self):
        (result,) = run_suites(["fw_scaling"])
        assert result.passed
        assert -1.25 <= result.metric <= -0.75
