"""Special functions: Laguerre and Hermite families, Bessel and Airy values
with their envelopes, the maps A and Theta, and the leading-order
Frenzen-Wong approximation of the Laguerre functions.

Bessel and Airy values come from ``scipy.special``; the Laguerre and Hermite
families use their three-term recurrences, vectorized over the argument.
Laguerre functions are carried as mantissa * exp(log_scale) so that
k ~ 1e5 and large arguments neither overflow nor underflow.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterator, NamedTuple, Union

import numpy as np
from scipy import special

from errors import ContractError, DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

LN2 = math.log(2.0)
FW_THRESHOLD = 0.4
THETA_SERIES_WINDOW = 1e-4

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


def _scalar_or_array(template, value):
    return float(value) if np.ndim(template) == 0 else value


def log_r(k, delta: float):
    """log r_k^delta = 0.5 * log(k! / Gamma(k + delta + 1))."""
    k = np.asarray(k, dtype=float)
    return 0.5 * (special.gammaln(k + 1.0) - special.gammaln(k + delta + 1.0))


def bracket(x: ArrayLike) -> ArrayLike:
    """Japanese bracket (1 + x^2)^(1/2)."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class NuIndex:
    k: int
    n: int

    def __post_init__(self):
        if self.k < 0 or self.n < 1:
            raise ContractError(f"invalid index k={self.k}, n={self.n}")

    @property
    def nu(self) -> int:
        return 4 * self.k + 2 * self.n

    @property
    def log_r_k(self) -> float:
        return float(log_r(self.k, self.n - 1))

    @property
    def r_k(self) -> float:
        return math.exp(self.log_r_k)

    @property
    def dim(self) -> int:
        """Multiplicity C(k+n-1, n-1) of the k-th eigenspace."""
        return math.comb(self.k + self.n - 1, self.n - 1)


# --- Laguerre ---------------------------------------------------------------


def laguerre_L(k: int, delta: float, t: ArrayLike) -> ArrayLike:
    """Laguerre polynomial L_k^delta(t) by the three-term recurrence."""
    tt = np.asarray(t, dtype=float)
    prev = np.ones_like(tt)
    if k == 0:
        return _scalar_or_array(t, prev)
    cur = 1.0 + delta - tt
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + delta - tt) * cur - (j + delta) * prev) / (j + 1)
    return _scalar_or_array(t, cur)


def _laguerre_rows(k_max: int, delta: float, x: np.ndarray) -> Iterator[tuple]:
    """Yield (k, mantissa, log_scale) with L_k^delta(x) e^{-x/2} = mantissa * e^{log_scale}."""
    log_scale = -0.5 * x
    prev = np.ones_like(x)
    yield 0, prev, log_scale
    if k_max == 0:
        return
    cur = 1.0 + delta - x
    yield 1, cur, log_scale
    for j in range(1, k_max):
        prev, cur = cur, ((2 * j + 1 + delta - x) * cur - (j + delta) * prev) / (j + 1)
        big = np.abs(cur) > _RESCALE
        if big.any():
            factor = np.where(big, 1.0 / _RESCALE, 1.0)
            prev = prev * factor
            cur = cur * factor
            log_scale = log_scale + np.where(big, _LOG_RESCALE, 0.0)
        yield j + 1, cur, log_scale


def _compose(mantissa: np.ndarray, log_scale: np.ndarray, extra=0.0) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.sign(mantissa) * np.exp(np.log(np.abs(mantissa)) + log_scale + extra)


def _half_log_power(delta: float, x: np.ndarray) -> np.ndarray:
    """(delta/2) * log x with the convention x^0 = 1 at x = 0."""
    if delta == 0:
        return np.zeros_like(x)
    with np.errstate(divide="ignore"):
        return 0.5 * delta * np.log(x)


def _nonnegative(x: ArrayLike, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} requires finite nonnegative arguments")
    return arr


def iter_laguerre_Lambda(k_max: int, delta: float, x: np.ndarray) -> Iterator[tuple]:
    """Yield (k, Lambda_k^delta(x)) for k = 0..k_max without storing the table."""
    xx = _nonnegative(x, "iter_laguerre_Lambda")
    power = _half_log_power(delta, xx)
    for k, mantissa, log_scale in _laguerre_rows(k_max, delta, xx):
        yield k, _compose(mantissa, log_scale, float(log_r(k, delta)) + power)


def laguerre_function_table(k_max: int, delta: float, x: ArrayLike) -> np.ndarray:
    """Rows k = 0..k_max of L_k^delta(x) e^{-x/2}; shape (k_max+1,) + x.shape."""
    xx = _nonnegative(x, "laguerre_function_table")
    table = np.empty((k_max + 1,) + xx.shape)
    for k, mantissa, log_scale in _laguerre_rows(k_max, delta, xx):
        table[k] = _compose(mantissa, log_scale)
    return table


def laguerre_Lambda_table(k_max: int, delta: float, x: ArrayLike) -> np.ndarray:
    """Rows k = 0..k_max of the Laguerre functions Lambda_k^delta(x)."""
    xx = _nonnegative(x, "laguerre_Lambda_table")
    power = _half_log_power(delta, xx)
    table = np.empty((k_max + 1,) + xx.shape)
    for k, mantissa, log_scale in _laguerre_rows(k_max, delta, xx):
        table[k] = _compose(mantissa, log_scale, float(log_r(k, delta)) + power)
    return table


def laguerre_Lambda(k: int, delta: float, t: ArrayLike) -> ArrayLike:
    """Lambda_k^delta(t) = r_k^delta L_k^delta(t) e^{-t/2} t^{delta/2}."""
    tt = _nonnegative(t, "laguerre_Lambda")
    for j, mantissa, log_scale in _laguerre_rows(k, delta, tt):
        if j == k:
            extra = float(log_r(k, delta)) + _half_log_power(delta, tt)
            value = _compose(mantissa, log_scale, extra)
            return _scalar_or_array(t, value)
    raise AssertionError("unreachable")


def phi_k_radial(lam: float, k: int, n: int, r2: ArrayLike) -> ArrayLike:
    """phi_k^lambda as a function of |z|^2."""
    if lam == 0:
        raise DomainError("phi_k is undefined at lambda = 0")
    a = abs(lam)
    x = 0.5 * a * np.asarray(r2, dtype=float)
    ell = laguerre_function_table(k, n - 1, x)[k]
    return _scalar_or_array(r2, (a / (2 * math.pi)) ** n * ell)


def phi_k(lam: float, k: int, n: int, z) -> float:
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if zs.size != n:
        raise ContractError(f"z has {zs.size} components, expected n={n}")
    return float(phi_k_radial(lam, k, n, float(np.sum(np.abs(zs) ** 2))))


# --- Hermite ----------------------------------------------------------------


def hermite_table(k_max: int, x: ArrayLike) -> np.ndarray:
    """Rows k = 0..k_max of the normalized Hermite functions h_k(x)."""
    xx = np.asarray(x, dtype=float)
    table = np.empty((k_max + 1,) + xx.shape)
    table[0] = math.pi**-0.25 * np.exp(-0.5 * xx * xx)
    if k_max >= 1:
        table[1] = math.sqrt(2.0) * xx * table[0]
    for j in range(1, k_max):
        table[j + 1] = (xx * math.sqrt(2.0 / (j + 1)) * table[j]
                        - math.sqrt(j / (j + 1)) * table[j - 1])
    return table


def hermite_h(k: int, x: ArrayLike) -> ArrayLike:
    return _scalar_or_array(x, hermite_table(k, x)[k])


# --- Bessel -----------------------------------------------------------------


def bessel_J(m: float, x: ArrayLike) -> ArrayLike:
    xx = _nonnegative(x, "bessel_J")
    return _scalar_or_array(x, special.jv(m, xx))


def bessel_Y(m: float, x: ArrayLike) -> ArrayLike:
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= 0):
        raise DomainError("bessel_Y requires x > 0")
    return _scalar_or_array(x, special.yv(m, xx))


@lru_cache(maxsize=64)
def j_tilde_switch(m: int) -> float:
    """Half the first positive zero of J_m: below it J_m has no zero."""
    return float(special.jn_zeros(m, 1)[0]) / 2.0


def j_tilde(m: int, x: ArrayLike) -> ArrayLike:
    """J_m below the switch point, Hankel modulus (J_m^2 + Y_m^2)^(1/2) above."""
    xx = _nonnegative(x, "j_tilde")
    out = special.jv(m, xx)
    far = xx >= j_tilde_switch(m)
    if np.any(far):
        out = np.where(far, np.hypot(out, special.yv(m, np.where(far, xx, 1.0))), out)
    return _scalar_or_array(x, out)


# --- Airy -------------------------------------------------------------------


def airy(u: ArrayLike) -> tuple:
    """(Ai, Bi, Ai') at u."""
    ai, aip, bi, _ = special.airy(u)
    return ai, bi, aip


def ai_tilde(u: ArrayLike) -> ArrayLike:
    uu = np.asarray(u, dtype=float)
    ai, bi, _ = airy(uu)
    return _scalar_or_array(u, np.where(uu < 0, np.hypot(ai, bi), ai))


def airy_IAi(u: ArrayLike) -> tuple:
    """(IAi, IIAi): first and second integrals of Ai from -infinity.

    IAi(u) = 2/3 + int_0^u Ai, IIAi(u) = u IAi(u) - Ai'(u).
    """
    uu = np.asarray(u, dtype=float)
    apt, _, ant, _ = special.itairy(np.abs(uu))
    iai = np.where(uu >= 0, 2.0 / 3.0 + apt, 2.0 / 3.0 - ant)
    _, _, aip = airy(uu)
    iiai = uu * iai - aip
    return _scalar_or_array(u, iai), _scalar_or_array(u, iiai)


# --- A and Theta ------------------------------------------------------------


def fn_A(t: ArrayLike) -> ArrayLike:
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0) or np.any(tt >= 1):
        raise DomainError("A(t) is defined for t in [0, 1)")
    return _scalar_or_array(t, 0.5 * (np.arcsin(np.sqrt(tt)) + np.sqrt(tt - tt * tt)))


def _theta_over_shift(s: np.ndarray) -> np.ndarray:
    """Theta(1+s)/s near s = 0."""
    return (0.5 - 0.15 * s) ** (2.0 / 3.0)


def fn_Theta(t: ArrayLike) -> ArrayLike:
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise DomainError("Theta(t) is defined for t >= 0")
    s = tt - 1.0
    near = np.abs(s) < THETA_SERIES_WINDOW
    below = np.minimum(tt, 1.0)
    above = np.maximum(tt, 1.0)
    inner = -(0.75 * (np.arccos(np.sqrt(below)) - np.sqrt(below - below * below))) ** (2.0 / 3.0)
    outer = (0.75 * (np.sqrt(above * above - above) - np.arccosh(np.sqrt(above)))) ** (2.0 / 3.0)
    value = np.where(tt < 1.0, inner, outer)
    value = np.where(near, s * _theta_over_shift(s), value)
    return _scalar_or_array(t, value)


def fn_Theta_prime(t: ArrayLike) -> ArrayLike:
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0):
        raise DomainError("Theta'(t) is defined for t > 0")
    s = tt - 1.0
    near = np.abs(s) < THETA_SERIES_WINDOW
    theta = np.asarray(fn_Theta(tt))
    with np.errstate(divide="ignore", invalid="ignore"):
        general = 0.5 * np.sqrt(np.abs(s) / tt) / np.sqrt(np.abs(theta))
    base = 0.5 - 0.15 * s
    series = base ** (2.0 / 3.0) - 0.1 * s * base ** (-1.0 / 3.0)
    return _scalar_or_array(t, np.where(near, series, general))


def alpha_0(t: ArrayLike, n: int) -> ArrayLike:
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    A = np.atleast_1d(fn_A(tt))
    ratio = np.ones_like(tt)
    positive = tt > 0
    ratio[positive] = A[positive] / np.sqrt(tt[positive])
    value = (1.0 - tt) ** -0.25 * ratio ** (n - 0.5)
    return float(value[0]) if np.ndim(t) == 0 else value


def eta_0(t: ArrayLike, n: int) -> ArrayLike:
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0):
        raise DomainError("eta_0(t) is defined for t > 0")
    s = tt - 1.0
    near = np.abs(s) < THETA_SERIES_WINDOW
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.asarray(fn_Theta(tt)) / np.where(near, 1.0, s)
        quotient = np.where(near, _theta_over_shift(s), direct)
    return _scalar_or_array(t, tt ** (0.25 - 0.5 * n) * (4.0 * quotient) ** 0.25)


# --- Frenzen-Wong -----------------------------------------------------------


class FWRegime(str, Enum):
    BESSEL = "BesselRegime"
    AIRY = "AiryRegime"


@dataclass(frozen=True)
class FWResult:
    value: float
    regime: FWRegime
    envelope: float
    amplitude: float


class FWBatch(NamedTuple):
    value: np.ndarray
    envelope: np.ndarray
    amplitude: np.ndarray
    bessel: np.ndarray


def fw_approx_batch(idx: NuIndex, x: ArrayLike) -> FWBatch:
    """Leading-order uniform approximation of Lambda_k^{n-1} on an array of x."""
    xx = np.atleast_1d(_nonnegative(x, "fw_approx"))
    n, nu = idx.n, idx.nu
    t = xx / nu
    positive = xx > 0
    with np.errstate(divide="ignore"):
        log_x = np.log(np.where(positive, xx, 1.0))
    log_pref = (1 - n) * LN2 + idx.log_r_k + 0.5 * (n - 1) * log_x
    pref = np.where(positive | (n == 1), np.exp(log_pref), 0.0)

    value = np.zeros_like(xx)
    amplitude = np.zeros_like(xx)
    bessel = t <= FW_THRESHOLD

    if np.any(bessel):
        tb = t[bessel]
        A = np.asarray(fn_A(tb))
        arg = nu * A
        small_limit = (0.5 * nu) ** (n - 1) / math.factorial(n - 1)
        safe_A = np.where(A > 0, A, 1.0)
        ratio = np.where(A > 0, special.jv(n - 1, arg) / safe_A ** (n - 1), small_limit)
        modulus = np.where(A > 0, np.asarray(j_tilde(n - 1, arg)) / safe_A ** (n - 1), small_limit)
        value[bessel] = pref[bessel] * np.asarray(alpha_0(tb, n)) * ratio
        amplitude[bessel] = pref[bessel] * modulus

    airy_side = ~bessel
    if np.any(airy_side):
        ta = t[airy_side]
        arg = nu ** (2.0 / 3.0) * np.asarray(fn_Theta(ta))
        ai, _, _ = airy(arg)
        sign = -1.0 if idx.k % 2 else 1.0
        scale = pref[airy_side] * nu ** (-1.0 / 3.0)
        value[airy_side] = sign * scale * np.asarray(eta_0(ta, n)) * ai
        amplitude[airy_side] = scale * np.asarray(ai_tilde(arg))

    envelope = np.maximum(amplitude / float(nu) ** 2, np.finfo(float).tiny)
    return FWBatch(value, envelope, amplitude, bessel)


def fw_approx(idx: NuIndex, x: float) -> FWResult:
    batch = fw_approx_batch(idx, x)
    regime = FWRegime.BESSEL if batch.bessel[0] else FWRegime.AIRY
    return FWResult(float(batch.value[0]), regime, float(batch.envelope[0]),
                    float(batch.amplitude[0]))
