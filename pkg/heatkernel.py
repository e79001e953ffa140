"""Heat kernel q_s and the band-limited kernel K_s = F *_t q_s.

The lambda-slice of q_s is summed in closed form over k (Mehler kernel):

    q_s^lambda(r) = (|lambda| / (4 pi sinh(|lambda| s)))^n
                    exp(-(|lambda| r^2 / 4) coth(|lambda| s)),

which is even and analytic in lambda, so quadrature in lambda converges fast
and never truncates in k.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate

from errors import ContractError, QuadratureError, TruncationError
from gft import RadialProfile, SpectralTable, spectral_constant
from hgroup import HPoint
from quadrature import integrate_panels, panel_nodes
from specfun import laguerre_function_table

logger = logging.getLogger(__name__)

CUTOFF_PANELS = 32


def heat_slice(lam, r2, s: float, n: int) -> np.ndarray:
    """q_s^lambda at |z|^2 = r2; broadcasts over lam and r2."""
    a = np.abs(np.asarray(lam, dtype=float))
    r2 = np.asarray(r2, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratio = np.where(a > 0, a / np.sinh(a * s), 1.0 / s)
        coth = np.where(a > 0, a / np.tanh(a * s), 1.0 / s)
    return (ratio / (4 * math.pi)) ** n * np.exp(-0.25 * r2 * coth)


def heat_profile(s: float, n: int) -> RadialProfile:
    if not s > 0:
        raise ContractError(f"heat time must be positive, got {s}")

    def vertical_slice(r: np.ndarray, lam: float) -> np.ndarray:
        return heat_slice(lam, np.asarray(r) ** 2, s, n)

    return RadialProfile(vertical_slice, None, effective_radius=math.sqrt(170.0 * s),
                         name=f"heat({s:g})")


def heat_coefficients(s: float, lam, k_max: int, n: int) -> np.ndarray:
    """q^_s(lambda, k) = e^{-(2k+n)|lambda| s} / spectral_constant(n)."""
    a = np.abs(np.asarray(lam, dtype=float))[..., None]
    ks = np.arange(k_max + 1)
    return np.exp(-(2 * ks + n) * a * s) / spectral_constant(n)


def heat_l2_norm_sq(s: float, n: int) -> float:
    """||q_s||^2 from the Euclidean Plancherel identity in t."""
    def integrand(lam: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            ratio = lam / np.sinh(lam * s)
            coth = lam / np.tanh(lam * s)
        return (ratio / (4 * math.pi)) ** (2 * n) * (2 * math.pi / coth) ** n

    upper = 80.0 / (n * s)
    scale = s ** -(n + 1)
    value = integrate_panels(integrand, 0.0, upper, tol=1e-13 * scale).value
    return float(value / math.pi)


def heat_table(s: float, lambda_grid, k_max: int, n: int) -> SpectralTable:
    """Analytic heat coefficients; tail_bound is the reconstruction error
    majorant at any point from truncating k and lambda."""
    grid = np.asarray(lambda_grid, dtype=float)
    table = SpectralTable(n, grid, k_max, heat_coefficients(s, grid, k_max, n))
    table.tail_bound = _k_tail(s, n, k_max, 0.0, float(np.max(np.abs(grid)))) + _lambda_tail(
        s, n, float(np.max(np.abs(grid))))
    return table


# --- q_s ---------------------------------------------------------------------------


class KernelValue(NamedTuple):
    value: float
    tail_bound: float


def _summed_majorant(lam: np.ndarray, s: float, n: int) -> np.ndarray:
    return heat_slice(lam, 0.0, s, n)


def _lambda_tail(s: float, n: int, lambda_max: float) -> float:
    """(1/pi) int_{lambda_max}^inf (lambda / (4 pi sinh(lambda s)))^n."""
    value, _ = integrate.quad(lambda lam: float(_summed_majorant(np.array(lam), s, n)),
                              lambda_max, np.inf, epsabs=1e-15)
    return value / math.pi


def _k_tail(s: float, n: int, k_max: int, lo: float, hi: float) -> float:
    """(1/pi) int (lambda/2pi)^n e^{-n lambda s} sum_{k > k_max} dim(k) w^k, w = e^{-2 lambda s}."""
    dims = np.array([math.comb(k + n - 1, n - 1) for k in range(k_max + 1)], dtype=float)

    def integrand(lam: np.ndarray) -> np.ndarray:
        w = np.exp(-2 * lam * s)
        with np.errstate(divide="ignore"):
            full = np.where(lam > 0, (1 - w) ** -n, np.inf)
        partial = np.polynomial.polynomial.polyval(w, dims)
        rest = np.where(np.isfinite(full), np.maximum(full - partial, 0.0), 0.0)
        return (lam / (2 * math.pi)) ** n * np.exp(-n * lam * s) * rest

    if hi <= lo:
        return 0.0
    result = integrate_panels(integrand, lo, hi, tol=1e-12 * s ** -(n + 1), max_panels=1 << 16)
    return float(result.value) / math.pi


def _q_s_many(s: float, r2: float, ts: np.ndarray, n: int, *, tol: float) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    upper = 60.0 / (n * s)

    def integrand(lam: np.ndarray) -> np.ndarray:
        return np.cos(np.outer(ts, lam)) * heat_slice(lam, r2, s, n)[None, :]

    result = integrate_panels(integrand, 0.0, upper, min_nodes=64, tol=tol, max_panels=1 << 16)
    return np.asarray(result.value) / math.pi


def q_s_eval(s: float, p: HPoint, n: Optional[int] = None, *, k_max: Optional[int] = None,
             lambda_max: Optional[float] = None, tol: Optional[float] = None) -> KernelValue:
    """q_s(z, t) = (1/2pi) int e^{-i lambda t} sum_k e^{-(2k+n)|lambda| s} phi_k^lambda(z) d lambda.

    With ``k_max=None`` the k-sum is taken in closed form; otherwise it is
    truncated and the returned tail bound covers both the k and lambda tails.
    """
    if not s > 0:
        raise ContractError(f"heat time must be positive, got {s}")
    n = p.n if n is None else n
    if n != p.n:
        raise ContractError(f"point has dimension {p.n}, expected {n}")
    r2 = float(sum(v * v for v in p.xy))
    scale = s ** -(n + 1)

    if k_max is None:
        value = float(_q_s_many(s, r2, np.array([p.t]), n, tol=1e-12 * scale)[0])
        return KernelValue(value, 0.0)

    lambda_max = 60.0 / (n * s) if lambda_max is None else lambda_max

    def integrand(lam: np.ndarray) -> np.ndarray:
        ell = laguerre_function_table(k_max, n - 1, 0.5 * lam * r2)
        weights = np.exp(-np.outer(2 * np.arange(k_max + 1) + n, lam * s))
        return np.cos(lam * p.t) * (lam / (2 * math.pi)) ** n * np.sum(weights * ell, axis=0)

    result = integrate_panels(integrand, 0.0, lambda_max, min_nodes=64, tol=1e-12 * scale,
                              max_panels=1 << 16)
    bound = _k_tail(s, n, k_max, 0.0, lambda_max) + _lambda_tail(s, n, lambda_max)
    if tol is not None and bound > tol:
        raise TruncationError(f"q_s series truncated at k_max={k_max}", bound, tol)
    return KernelValue(float(result.value) / math.pi, bound)


def heat_total_mass(s: float, n: int = 1, *, radius: Optional[float] = None,
                    height: Optional[float] = None) -> float:
    """int q_s dz dt by Gauss-Legendre quadrature on a cylinder |z| <= radius, |t| <= height."""
    radius = 8.5 * math.sqrt(s) if radius is None else radius
    height = 12.0 * s + 0.25 * radius * radius if height is None else height
    r_nodes, r_weights = panel_nodes(np.linspace(0.0, radius, 5))
    # q_s is even in t
    t_panels = max(8, math.ceil(2.0 * height / s))
    t_nodes, t_weights = panel_nodes(np.linspace(0.0, height, t_panels + 1))
    t_weights = 2.0 * t_weights
    sphere = 2 * math.pi**n / math.gamma(n)
    total = 0.0
    for r, w in zip(r_nodes, r_weights):
        column = _q_s_many(s, r * r, t_nodes, n, tol=1e-11 * s ** -(n + 1))
        total += w * sphere * r ** (2 * n - 1) * float(column @ t_weights)
    return total


# --- cutoff --------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffPair:
    F_eval: Callable[[float], float]
    F_hat_eval: Callable[[np.ndarray], np.ndarray]
    psi_eval: Callable[[np.ndarray], np.ndarray]
    psi_norm_check: float
    # F^ tabulated on the fixed Gauss-Legendre rule of [0, 1] used by k_s_eval
    nodes: np.ndarray
    weights: np.ndarray
    fhat_nodes: np.ndarray


def _bump(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    inside = np.abs(lam) < 0.5
    gap = np.where(inside, 0.25 - lam * lam, 1.0)
    return np.where(inside, np.exp(-1.0 / gap), 0.0)


@lru_cache(maxsize=1)
def build_cutoff() -> CutoffPair:
    """Psi = c exp(-1/(1/4 - lambda^2)) on |lambda| < 1/2 with ||Psi||_2 = sqrt(2 pi),
    F^ = (1/2pi) Psi * Psi and F = psi_check^2."""
    mass, _ = integrate.quad(lambda x: float(_bump(x)) ** 2, -0.5, 0.5, epsabs=1e-15, epsrel=1e-13)
    c = math.sqrt(2 * math.pi / mass)

    def psi(lam) -> np.ndarray:
        return c * _bump(lam)

    check = integrate_panels(lambda x: psi(x) ** 2, -0.5, 0.5, tol=1e-12).value
    psi_norm_check = math.sqrt(float(check))

    def f_hat_scalar(lam: float) -> float:
        lam = abs(float(lam))
        if lam >= 1.0:
            return 0.0
        lo, hi = lam - 0.5, 0.5
        result = integrate_panels(lambda mu: psi(mu) * psi(lam - mu), lo, hi,
                                  min_nodes=64, tol=1e-13)
        return float(result.value) / (2 * math.pi)

    def F_hat_eval(lam) -> np.ndarray:
        values = np.array([f_hat_scalar(x) for x in np.atleast_1d(lam)])
        return float(values[0]) if np.ndim(lam) == 0 else values

    def psi_check(t: float) -> float:
        # (1/2pi) int Psi e^{-i lambda t} = (1/pi) int_0^{1/2} Psi cos(lambda t)
        value, error = integrate.quad(lambda x: float(psi(x)), 0.0, 0.5, weight="cos", wvar=t,
                                      epsabs=1e-12, limit=200)
        if error > 1e-8:
            raise QuadratureError("oscillatory cutoff transform", error, 1e-8)
        return value / math.pi

    def F_eval(t: float) -> float:
        return psi_check(float(t)) ** 2

    nodes, weights = panel_nodes(np.linspace(0.0, 1.0, CUTOFF_PANELS + 1))
    fhat_nodes = np.array([f_hat_scalar(x) for x in nodes])
    for array in (nodes, weights, fhat_nodes):
        array.setflags(write=False)
    logger.debug("Cutoff built: c=%.6g, ||Psi||=%.12f", c, psi_norm_check)
    return CutoffPair(F_eval, F_hat_eval, psi, psi_norm_check, nodes, weights, fhat_nodes)


def _check_s(s: float) -> None:
    if not 0 < s < 1:
        raise ContractError(f"s must lie in (0, 1), got {s}")


def k_s_hat(s: float, lam: float, k: int, n: int, cutoff: Optional[CutoffPair] = None) -> float:
    _check_s(s)
    if abs(lam) > 1:
        return 0.0
    cutoff = build_cutoff() if cutoff is None else cutoff
    return float(cutoff.F_hat_eval(lam)) * math.exp(-(2 * k + n) * abs(lam) * s)


def _k_s_many(s: float, r2: float, ts: np.ndarray, n: int, cutoff: CutoffPair) -> np.ndarray:
    lam = cutoff.nodes
    spectrum = cutoff.fhat_nodes * heat_slice(lam, r2, s, n) * cutoff.weights
    return np.cos(np.outer(np.atleast_1d(ts), lam)) @ spectrum / math.pi


def k_s_eval(s: float, p: HPoint, n: Optional[int] = None,
             cutoff: Optional[CutoffPair] = None) -> float:
    """K_s(z, t) = (1/pi) int_0^1 cos(lambda t) F^(lambda) q_s^lambda(z) d lambda."""
    _check_s(s)
    if n is not None and n != p.n:
        raise ContractError(f"point has dimension {p.n}, expected {n}")
    cutoff = build_cutoff() if cutoff is None else cutoff
    r2 = float(sum(v * v for v in p.xy))
    return float(_k_s_many(s, r2, np.array([p.t]), p.n, cutoff)[0])


def k_s_grid(s: float, r_values: Sequence[float], t_values: Sequence[float], n: int,
             cutoff: Optional[CutoffPair] = None) -> np.ndarray:
    """K_s on a (|z|, t) grid; shape (len(r_values), len(t_values))."""
    _check_s(s)
    cutoff = build_cutoff() if cutoff is None else cutoff
    ts = np.asarray(t_values, dtype=float)
    return np.array([_k_s_many(s, float(r) ** 2, ts, n, cutoff) for r in r_values])


def k_s_convolution(s: float, p: HPoint, cutoff: Optional[CutoffPair] = None) -> float:
    """K_s(z, t) = int F(t - tau) q_s(z, tau) d tau."""
    _check_s(s)
    cutoff = build_cutoff() if cutoff is None else cutoff
    n = p.n
    r2 = float(sum(v * v for v in p.xy))
    half_width = 12.0 * s + 3.0 * r2
    scale = s ** -(n + 1)

    def integrand(tau: np.ndarray) -> np.ndarray:
        q = _q_s_many(s, r2, tau, n, tol=1e-12 * scale)
        return np.array([cutoff.F_eval(p.t - x) for x in tau]) * q

    result = integrate_panels(integrand, -half_width, half_width, min_nodes=64, tol=1e-10 * scale)
    return float(result.value)


# --- fitted bounds ------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    C: float
    A: float


DEFAULT_RATES = (0.02, 0.05, 0.1, 0.15, 0.2, 0.25)


def fit_decay_bound(values: np.ndarray, base: np.ndarray, exponent: np.ndarray, *,
                    rates: Sequence[float] = DEFAULT_RATES, inflation: float = 2.0,
                    spread: float = 10.0) -> DecayFit:
    """Fit value <= C * base * exp(-A * exponent) on a coarse grid.

    A is the largest candidate rate whose required constant stays within
    ``spread`` of the smallest rate's; C is that constant times ``inflation``.
    """
    values = np.asarray(values, dtype=float)
    base = np.asarray(base, dtype=float)
    exponent = np.asarray(exponent, dtype=float)
    if values.shape != base.shape or values.shape != exponent.shape or values.size == 0:
        raise ContractError("fit_decay_bound needs matching nonempty arrays")
    rates = sorted(rates)
    constants = [float(np.max(values / (base * np.exp(-A * exponent)))) for A in rates]
    chosen = 0
    for i, C in enumerate(constants):
        if C <= spread * constants[0]:
            chosen = i
    fit = DecayFit(C=inflation * constants[chosen], A=rates[chosen])
    logger.info("Fitted decay bound C=%.4g A=%.4g", fit.C, fit.A)
    return fit


def bound_holds(fit: DecayFit, values: np.ndarray, base: np.ndarray, exponent: np.ndarray) -> bool:
    bound = fit.C * np.asarray(base) * np.exp(-fit.A * np.asarray(exponent))
    return bool(np.all(np.asarray(values) <= bound))


class KernelCheck(NamedTuple):
    s: float
    origin: float
    scaled_origin: float
    min_ratio: float
    C: float
    A: float
    bound_holds: bool

    @property
    def passed(self) -> bool:
        return self.min_ratio >= -1e-8 and self.scaled_origin > 0 and self.bound_holds


def _decay_inputs(s: float, n: int, r: np.ndarray, t: np.ndarray, decay_power: int):
    R, T = np.meshgrid(r, t, indexing="ij")
    return s**-n * (1.0 + T) ** -decay_power, R * R / s


def kernel_check(s: float, n: int = 1, *, radius: float = 2.0, height: float = 20.0,
                 points: int = 21, decay_power: int = 4,
                 cutoff: Optional[CutoffPair] = None) -> KernelCheck:
    """Positivity, K_s(0,0) s^n and K_s <= C s^{-n} e^{-(A/s)|z|^2} (1+|t|)^{-M}.

    (C, A) are fitted on a coarse (|z|, t) grid and checked on the grid of its
    midpoints. K_s is even in t, so t >= 0 suffices.
    """
    _check_s(s)
    cutoff = build_cutoff() if cutoff is None else cutoff
    r = np.linspace(0.0, radius, points)
    t = np.linspace(0.0, height, points)
    r_mid, t_mid = 0.5 * (r[1:] + r[:-1]), 0.5 * (t[1:] + t[:-1])

    coarse = k_s_grid(s, r, t, n, cutoff)
    fine = k_s_grid(s, r_mid, t_mid, n, cutoff)
    fit = fit_decay_bound(coarse, *_decay_inputs(s, n, r, t, decay_power))
    holds = bound_holds(fit, fine, *_decay_inputs(s, n, r_mid, t_mid, decay_power))

    origin = k_s_eval(s, HPoint.identity(n), n, cutoff)
    min_ratio = min(float(coarse.min()), float(fine.min())) / origin
    check = KernelCheck(s, origin, origin * s**n, min_ratio, fit.C, fit.A, holds)
    logger.info("K_s check s=%g: K(0,0) s^n=%.4g, min ratio %.2e, bound %s",
                s, check.scaled_origin, min_ratio, "holds" if holds else "FAILS")
    return check
