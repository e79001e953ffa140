"""Pointwise regimes of chi^_B, averaged lower envelopes and the I-term."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from errors import ContractError, DomainError
from gft import box_chihat_grid, chihat_box_dilated
from quadrature import hybrid_grid, integrate_panels
from specfun import (
    NuIndex,
    airy_IAi,
    bracket,
    bessel_J,
    eta_0,
    fn_A,
    fn_Theta,
    fn_Theta_prime,
)

logger = logging.getLogger(__name__)

SMALL_NU = 50
# Fixed log grid for the I-term, so feasible sets are nested in Lambda.
I_TERM_LOWER = 1e-4
I_TERM_PER_DECADE = 40


class RegimeId(str, Enum):
    BESSEL_MAIN = "BesselMain"
    AIRY_TRANSITION = "AiryTransition"
    OSCILLATORY_PLATEAU = "OscillatoryPlateau"
    FAR_TAIL = "FarTail"


def regime_of(lam: float, nu: int) -> RegimeId:
    if lam <= nu:
        return RegimeId.BESSEL_MAIN
    if lam <= 2 * (nu + nu ** (1.0 / 3.0)):
        return RegimeId.AIRY_TRANSITION
    if lam <= 3 * nu:
        return RegimeId.OSCILLATORY_PLATEAU
    return RegimeId.FAR_TAIL


@dataclass(frozen=True)
class FLambdaRegion:
    Lambda: float

    def __post_init__(self):
        if not self.Lambda > 0:
            raise ContractError(f"Lambda must be positive, got {self.Lambda}")

    def contains(self, lam, nu) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return (bracket(lam * np.asarray(nu)) <= self.Lambda) & (np.abs(lam) <= 1.0) & (lam != 0)


class Asymptotic(NamedTuple):
    value: float
    regime: RegimeId


def chihat_asymptotic(lam: float, idx: NuIndex) -> Asymptotic:
    """Main term of the matching regime with unit constants."""
    if not lam > 0:
        raise DomainError(f"chihat_asymptotic needs lambda > 0, got {lam}")
    n, nu, k = idx.n, idx.nu, idx.k
    sign = -1.0 if k % 2 else 1.0
    regime = regime_of(lam, nu)
    t = lam / (2 * nu)
    weight = idx.r_k**2 * nu ** (n - 1)

    if regime is RegimeId.BESSEL_MAIN:
        A = float(fn_A(t))
        omega = weight * (lam / nu) ** -0.25 * math.sqrt(A) * (1 - t) ** -0.75
        value = (math.sin(lam) / lam) * float(bessel_J(n, nu * A)) / (lam * nu) ** (0.5 * n) * omega
    elif regime is RegimeId.AIRY_TRANSITION:
        iai, _ = airy_IAi(nu ** (2.0 / 3.0) * float(fn_Theta(t)))
        omega = (weight * 2.0 ** (1.5 - n) * t ** (0.5 * n - 1) * float(eta_0(t, n))
                 / float(fn_Theta_prime(t)))
        value = sign * (math.sin(lam) / lam) * (lam * nu) ** (-0.5 * n) * float(iai) * omega
    elif regime is RegimeId.OSCILLATORY_PLATEAU:
        value = sign * math.sin(lam) / lam ** (n + 1)
    else:
        value = sign * math.sin(lam) / lam ** (n + 1) * 2.0 ** (0.5 * (3 * n + 1))
    return Asymptotic(value, regime)


# --- averaged squares ---------------------------------------------------------------


def avg_square(lam: float, idx: NuIndex, *, method: str = "rho", tol: float = 1e-10) -> float:
    """int_0^1 |chi^_{B_rho}(lambda, k)|^2 d rho.

    ``method="rho"`` integrates the dilation formula in rho; ``method="u"``
    substitutes u = rho^2 lambda and uses the cumulative chi^_B path.
    """
    if not lam > 0:
        raise DomainError(f"avg_square needs lambda > 0, got {lam}")
    n, k = idx.n, idx.k
    Q = 2 * n + 2

    if method == "rho":
        def integrand(rho: np.ndarray) -> np.ndarray:
            return np.array([chihat_box_dilated(r, lam, k, n, tol=1e-13) ** 2 for r in rho])

        scale = integrand(np.linspace(0.05, 1.0, 20))
        result = integrate_panels(integrand, 0.0, 1.0, tol=tol * max(float(scale.max()), 1e-300))
        return float(result.value)

    if method == "u":
        def integrand(u: np.ndarray) -> np.ndarray:
            chi = box_chihat_grid(u, k, n, max_width=0.002)[:, k]
            return u ** (Q - 0.5) * chi * chi

        peak = lam ** (Q + 0.5)
        result = integrate_panels(integrand, 0.0, lam, tol=tol * peak)
        return float(0.5 * lam ** (-Q - 0.5) * result.value)

    raise ContractError(f"unknown avg_square method {method!r}")


def avg_square_table(lams: Sequence[float], k_max: int, n: int, *, step: float = 0.02,
                     lower: float = 1e-6, per_decade: int = 20, order: int = 8) -> np.ndarray:
    """avg_square for all k <= k_max at every lambda; shape (len(lams), k_max+1).

    Cumulative trapezoid in u on a hybrid grid that contains every lambda.
    """
    lams = np.asarray(lams, dtype=float)
    if lams.size == 0:
        return np.zeros((0, k_max + 1))
    if np.any(lams <= 0):
        raise DomainError("avg_square_table needs positive lambdas")
    Q = 2 * n + 2
    u = np.union1d(hybrid_grid(float(lams.max()), step, lower=lower, per_decade=per_decade), lams)
    u = np.concatenate([[0.0], u])
    chi = box_chihat_grid(u, k_max, n, order=order, max_width=0.5 * step)
    cumulative = integrate.cumulative_trapezoid(u[:, None] ** (Q - 0.5) * chi * chi, u,
                                                axis=0, initial=0.0)
    rows = np.searchsorted(u, lams)
    return 0.5 * lams[:, None] ** (-Q - 0.5) * cumulative[rows]


# --- envelopes ---------------------------------------------------------------------


def envelope_lower(lam: float, idx: NuIndex) -> float:
    if not lam > 0:
        raise DomainError(f"envelope_lower needs lambda > 0, got {lam}")
    n, nu = idx.n, idx.nu
    Q = 2 * n + 2
    if lam <= nu:
        return float(bracket(lam * nu) ** (-0.5 * Q + 0.5) * bracket(lam) ** -2)
    if lam <= 2 * (nu + nu ** (1.0 / 3.0)):
        # bracket is even, so a negative argument past 2 nu is its magnitude
        shifted = nu ** (2.0 / 3.0) * (1 - lam / (2 * nu))
        return float(lam ** (-Q - 2.0 / 3.0) * bracket(shifted) ** -0.5)
    return float(lam ** (-Q - 1) * (lam - 2 * nu))


class EnvelopeRow(NamedTuple):
    nu: int
    k: int
    lam: float
    avg_square: float
    envelope: float
    ratio: float


@dataclass
class EnvelopeReport:
    c_min: float
    rows: list
    c_min_by_nu: dict


def verify_envelope(indices: Iterable[NuIndex], lams: Sequence[float], *,
                    allow_small: bool = False, step: float = 0.02) -> EnvelopeReport:
    """Minimum of avg_square / envelope_lower over indices x grid."""
    indices = list(indices)
    lams = np.asarray(lams, dtype=float)
    if not indices or lams.size == 0:
        raise ContractError("verify_envelope needs at least one index and one lambda")
    small = [idx.nu for idx in indices if idx.nu < SMALL_NU]
    if small and not allow_small:
        raise ContractError(f"envelope bounds need nu >= {SMALL_NU}, got {small}")

    rows = []
    by_nu = {}
    for n in sorted({idx.n for idx in indices}):
        group = [idx for idx in indices if idx.n == n]
        table = avg_square_table(lams, max(idx.k for idx in group), n, step=step)
        for idx in group:
            ratios = []
            for lam, value in zip(lams, table[:, idx.k]):
                env = envelope_lower(float(lam), idx)
                ratios.append(value / env)
                rows.append(EnvelopeRow(idx.nu, idx.k, float(lam), float(value), env, value / env))
            by_nu[idx.nu] = float(min(ratios))
            logger.info("Envelope nu=%d (k=%d): c_min=%.4g", idx.nu, idx.k, by_nu[idx.nu])
    return EnvelopeReport(min(by_nu.values()), rows, by_nu)


def log_grid(lower: float, upper: float, count: int) -> np.ndarray:
    return np.logspace(math.log10(lower), math.log10(upper), count)


# --- I-term ------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _i_term_grid() -> np.ndarray:
    decades = -math.log10(I_TERM_LOWER)
    grid = np.logspace(math.log10(I_TERM_LOWER), 0.0, int(I_TERM_PER_DECADE * decades) + 1)
    grid.setflags(write=False)
    return grid


def i_term(Lambda: float, s: float, n: int) -> float:
    """Grid minimum of e^{nu lambda s / 2} avg_square(lambda, k) over F_Lambda,
    for 2n <= nu <= 2 Lambda."""
    Q = 2 * n + 2
    if not 0 < s < 1:
        raise ContractError(f"s must lie in (0, 1), got {s}")
    if s * Lambda <= Q - 1:
        raise ContractError(f"i_term needs s * Lambda > Q - 1 = {Q - 1}, got {s * Lambda:g}")
    region = FLambdaRegion(Lambda)
    lams = _i_term_grid()
    k_max = int(math.floor((2 * Lambda - 2 * n) / 4))
    if k_max < 0:
        raise ContractError(f"no frequency index with nu <= 2 Lambda = {2 * Lambda:g}")

    ks = np.arange(k_max + 1)
    nus = 4 * ks + 2 * n
    feasible = region.contains(lams[:, None], nus[None, :])
    if not feasible.any():
        raise ContractError(f"F_Lambda is empty on the grid for Lambda = {Lambda:g}")
    used = feasible.any(axis=1)
    table = avg_square_table(lams[used], k_max, n, step=0.002)
    weighted = np.exp(0.5 * nus[None, :] * lams[used, None] * s) * table
    value = float(np.min(np.where(feasible[used], weighted, np.inf)))
    logger.debug("i_term Lambda=%g s=%g over %d cells: %.4g", Lambda, s, int(feasible.sum()), value)
    return value


class ITermRow(NamedTuple):
    s: float
    Lambda: float
    i_term: float
    scaled: float


def i_term_table(s_values: Sequence[float], s_Lambda: float, n: int) -> list:
    """Rows (s, Lambda, i_term, i_term / s^{(Q-1)/2}) at fixed s * Lambda."""
    Q = 2 * n + 2
    rows = []
    for s in s_values:
        Lambda = s_Lambda / s
        value = i_term(Lambda, s, n)
        rows.append(ITermRow(float(s), float(Lambda), value, value / s ** (0.5 * (Q - 1))))
    return rows


def envelope_sweep(nus: Sequence[int], n: int = 1, *, points: int = 60, lower: float = 0.01,
                   upper_factor: float = 8.0) -> EnvelopeReport:
    """verify_envelope per nu on its own log grid in (lower, upper_factor * nu]."""
    rows = []
    by_nu = {}
    for nu in nus:
        if (nu - 2 * n) % 4 or nu < 2 * n:
            raise ContractError(f"nu = {nu} is not of the form 4k + 2n for n = {n}")
        idx = NuIndex((nu - 2 * n) // 4, n)
        report = verify_envelope([idx], log_grid(lower, upper_factor * nu, points))
        rows.extend(report.rows)
        by_nu.update(report.c_min_by_nu)
    return EnvelopeReport(min(by_nu.values()), rows, by_nu)


def envelope_drift(report: EnvelopeReport) -> float:
    """max / min of c_min across nu."""
    values = list(report.c_min_by_nu.values())
    return max(values) / min(values) if min(values) > 0 else math.inf
