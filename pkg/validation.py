"""Validation suites run by ``hdisc validate``.

Each suite returns a SuiteResult whose metric is compared against a fixed
tolerance; the suites that exercise the n = 1 special-function identities
ignore the requested dimension.
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats

from errors import ContractError
from gft import box_table, chihat_box, plancherel_energy, special_hermite_check
from heatkernel import build_cutoff
from hgroup import GroupContext
from quadrature import hybrid_grid
from specfun import NuIndex, fw_approx_batch, laguerre_Lambda_table

logger = logging.getLogger(__name__)

FW_NUS = (50, 102, 202, 402)
FW_SLOPE_RANGE = (-1.25, -0.75)


class SuiteResult(NamedTuple):
    suite: str
    passed: bool
    metric: float
    tolerance: float

    def as_dict(self) -> dict:
        return {"suite": self.suite, "pass": self.passed, "metric": self.metric,
                "tolerance": self.tolerance}


def plancherel_suite(n: int = 1, k_max: int = 200, lambda_max: float = 200.0,
                     lambda_step: float = 0.02) -> SuiteResult:
    """Spectral energy of chi_B against |B_1|, relative."""
    table = box_table(hybrid_grid(lambda_max, lambda_step), k_max, n)
    volume = GroupContext(n).unit_box_volume
    error = abs(plancherel_energy(table).energy - volume) / volume
    return SuiteResult("plancherel", error <= 5e-3, error, 5e-3)


def chihat_closed_form_suite(**_) -> SuiteResult:
    """chi^_B(lambda, 0) for n = 1 against (4 sin(lambda) / lambda^2)(1 - e^{-lambda/4})."""
    lams = np.linspace(0.5, 50.0, 100)
    exact = 4 * np.sin(lams) / lams**2 * (1 - np.exp(-lams / 4))
    values = np.array([chihat_box(float(lam), 0, 1, tol=1e-12) for lam in lams])
    error = float(np.max(np.abs(values - exact)))
    return SuiteResult("chihat_closed_form", error <= 1e-8, error, 1e-8)


def phi_k_suite(**_) -> SuiteResult:
    """Matrix coefficients of the Schroedinger representation against phi_k (n = 1)."""
    error = 0.0
    for k in (0, 1, 2):
        for lam in (0.5, 1.0, 2.0):
            for z in (0.3 + 0.2j, -0.7 + 0.1j, 1.1 - 0.5j):
                lhs, rhs = special_hermite_check(lam, k, z)
                error = max(error, abs(lhs - rhs))
    return SuiteResult("phi_k", error <= 1e-6, error, 1e-6)


def fw_errors(nus: Sequence[int] = FW_NUS, t_range=(0.05, 0.4), points: int = 200) -> np.ndarray:
    """sup over the Bessel range of |Lambda_k - FW| / amplitude, per nu (n = 1)."""
    errors = []
    for nu in nus:
        if (nu - 2) % 4:
            raise ContractError(f"nu = {nu} is not of the form 4k + 2")
        idx = NuIndex((nu - 2) // 4, 1)
        x = nu * np.linspace(t_range[0], t_range[1], points)
        exact = laguerre_Lambda_table(idx.k, 0.0, x)[idx.k]
        approx = fw_approx_batch(idx, x)
        errors.append(float(np.max(np.abs(exact - approx.value) / approx.amplitude)))
    return np.array(errors)


def fw_scaling_suite(**_) -> SuiteResult:
    errors = fw_errors()
    slope = float(stats.linregress(np.log(FW_NUS), np.log(errors)).slope)
    lo, hi = FW_SLOPE_RANGE
    logger.info("FW relative errors %s, slope %.3f", np.array2string(errors, precision=3), slope)
    return SuiteResult("fw_scaling", lo <= slope <= hi, slope, hi)


def cutoff_suite(**_) -> SuiteResult:
    """Support, bound and positivity of the cutoff pair, and the L2 norm of Psi."""
    cutoff = build_cutoff()
    outside = abs(float(cutoff.F_hat_eval(1.001)))
    excess = float(np.max(cutoff.F_hat_eval(np.linspace(-1.0, 1.0, 201)))) - 1.0
    negative = -min(0.0, min(cutoff.F_eval(t) for t in np.linspace(-50.0, 50.0, 1000)))
    norm = abs(cutoff.psi_norm_check - math.sqrt(2 * math.pi))
    metric = max(outside, excess, negative, norm)
    return SuiteResult("cutoff", metric <= 1e-9, metric, 1e-9)


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "plancherel": plancherel_suite,
    "chihat_closed_form": chihat_closed_form_suite,
    "phi_k": phi_k_suite,
    "fw_scaling": fw_scaling_suite,
    "cutoff": cutoff_suite,
}


def run_suites(names: Optional[Sequence[str]] = None, **options) -> List[SuiteResult]:
    names = list(SUITES) if not names else list(names)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ContractError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    results = []
    for name in names:
        result = SUITES[name](**options)
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, "Suite %s: %s (metric %.3e, tolerance %.3e)", name,
                   "pass" if result.passed else "FAIL", result.metric, result.tolerance)
        results.append(result)
    return results
