"""Group Fourier transform of cylindrically radial functions.

A radial function f(z, t) is described by its vertical slice
f^lambda(r) = int f(z, t) e^{i lambda t} dt, r = |z|. Its transform is
diagonal on the rescaled Hermite basis; the scalar coefficient is

    f^(lambda, k) = r_k int_0^inf f^lambda(r) (|lambda| r^2)^{(1-n)/2}
                    Lambda_k^{n-1}(|lambda| r^2 / 2) r^{2n-1} dr

and the operator eigenvalue on the k-th eigenspace is
spectral_constant(n) * f^(lambda, k).
"""

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate

from errors import ContractError, DomainError, TruncationError
from parallel import map_ordered
from quadrature import gauss_legendre, integrate_panels
from specfun import (
    hermite_h,
    iter_laguerre_Lambda,
    laguerre_function_table,
    laguerre_L,
    log_r,
)

logger = logging.getLogger(__name__)

# Beyond x = 2 nu + X_MARGIN every Laguerre function is below 1e-17.
X_MARGIN = 80.0

VerticalSlice = Callable[[np.ndarray, float], np.ndarray]

TABLE_HEADER = ("n", "k_max", "tail_bound")
TABLE_COLUMNS = ("lambda", "k", "re", "im")


def spectral_constant(n: int) -> float:
    """Eigenvalue factor (2 pi)^n 2^{(1-n)/2} linking f^(lambda, k) to the
    operator f^(lambda) restricted to the k-th eigenspace."""
    return (2 * math.pi) ** n * 2.0 ** (0.5 * (1 - n))


def dims(k_max: int, n: int) -> np.ndarray:
    """Eigenspace dimensions C(k+n-1, n-1) for k = 0..k_max."""
    return np.array([math.comb(k + n - 1, n - 1) for k in range(k_max + 1)], dtype=float)


@dataclass(frozen=True)
class RadialProfile:
    vertical_slice: VerticalSlice
    # None means unbounded support; effective_radius then bounds the quadrature
    radial_support: Optional[float] = None
    effective_radius: Optional[float] = None
    name: str = "profile"

    def quadrature_radius(self) -> Optional[float]:
        return self.radial_support if self.radial_support is not None else self.effective_radius


def box_profile(rho: float = 1.0) -> RadialProfile:
    """Indicator of B_rho: f^lambda(r) = 2 sin(lambda rho^2) / lambda on r <= rho."""
    if rho <= 0:
        raise ContractError(f"box radius must be positive, got {rho}")

    def vertical_slice(r: np.ndarray, lam: float) -> np.ndarray:
        return np.where(r <= rho, 2.0 * math.sin(lam * rho * rho) / lam, 0.0)

    return RadialProfile(vertical_slice, rho, name=f"box({rho:g})")


def gaussian_profile(a: float, b: float) -> RadialProfile:
    """f(z, t) = exp(-a |z|^2 - b t^2)."""
    if a <= 0 or b <= 0:
        raise ContractError("Gaussian widths must be positive")

    def vertical_slice(r: np.ndarray, lam: float) -> np.ndarray:
        return math.sqrt(math.pi / b) * math.exp(-lam * lam / (4 * b)) * np.exp(-a * r * r)

    return RadialProfile(vertical_slice, None, effective_radius=math.sqrt(42.0 / a),
                         name=f"gaussian({a:g},{b:g})")


def gaussian_l2_norm_sq(a: float, b: float, n: int) -> float:
    return (math.pi / (2 * a)) ** n * math.sqrt(math.pi / (2 * b))


@dataclass
class SpectralTable:
    n: int
    lambda_grid: np.ndarray
    k_max: int
    values: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.n < 1 or self.k_max < 0:
            raise ContractError(f"invalid table dimensions n={self.n}, k_max={self.k_max}")
        if np.any(self.lambda_grid == 0) or np.any(np.diff(self.lambda_grid) <= 0):
            raise ContractError("lambda grid must be strictly increasing and exclude 0")
        if self.values.shape != (len(self.lambda_grid), self.k_max + 1):
            raise ContractError(
                f"values have shape {self.values.shape}, expected "
                f"{(len(self.lambda_grid), self.k_max + 1)}"
            )
        if not self.tail_bound >= 0:
            raise ContractError("tail_bound must be nonnegative")

    @classmethod
    def zeros(cls, n: int, lambda_grid: np.ndarray, k_max: int) -> "SpectralTable":
        return cls(n, lambda_grid, k_max, np.zeros((len(lambda_grid), k_max + 1), dtype=complex))

    def to_csv(self) -> str:
        """Header ``n,k_max,tail_bound`` and its row, then ``lambda,k,re,im`` rows.
        Floats are written with repr so a round trip is bit-exact."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(TABLE_HEADER)
        writer.writerow([self.n, self.k_max, repr(float(self.tail_bound))])
        writer.writerow(TABLE_COLUMNS)
        for lam, row in zip(self.lambda_grid, self.values):
            for k, value in enumerate(row):
                writer.writerow([repr(float(lam)), k,
                                 repr(float(value.real)), repr(float(value.imag))])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpectralTable":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 3 or tuple(rows[0]) != TABLE_HEADER or tuple(rows[2]) != TABLE_COLUMNS:
            raise ContractError("not a spectral table CSV")
        try:
            n, k_max, tail_bound = int(rows[1][0]), int(rows[1][1]), float(rows[1][2])
            body = [(float(lam), int(k), complex(float(re), float(im)))
                    for lam, k, re, im in rows[3:]]
        except ValueError as e:
            raise ContractError(f"malformed spectral table CSV: {e}") from e
        grid = sorted({lam for lam, _, _ in body})
        position = {lam: i for i, lam in enumerate(grid)}
        values = np.zeros((len(grid), k_max + 1), dtype=complex)
        for lam, k, value in body:
            if not 0 <= k <= k_max:
                raise ContractError(f"row index k={k} outside 0..{k_max}")
            values[position[lam], k] = value
        return cls(n, np.array(grid), k_max, values, tail_bound)


# --- coefficients -------------------------------------------------------------


def _x_limit(profile: RadialProfile, a: float, k_max: int, n: int) -> float:
    cap = 2.0 * (4 * k_max + 2 * n) + X_MARGIN
    radius = profile.quadrature_radius()
    if radius is None:
        return cap
    return min(cap, 0.5 * a * radius * radius)


def gft_radial_all(profile: RadialProfile, lam: float, k_max: int, n: int, *,
                   tol: float = 1e-9) -> np.ndarray:
    """Coefficients f^(lambda, k) for k = 0..k_max from one vector quadrature."""
    if lam == 0:
        raise DomainError("the transform coefficient is undefined at lambda = 0")
    a = abs(lam)
    x_max = _x_limit(profile, a, k_max, n)
    scale = 2.0 ** (0.5 * (n - 1)) * a ** (-n)
    ks = np.arange(k_max + 1)
    r_k = np.exp(log_r(ks, n - 1))

    def integrand(x: np.ndarray) -> np.ndarray:
        slice_values = np.asarray(profile.vertical_slice(np.sqrt(2.0 * x / a), lam), dtype=complex)
        weight = slice_values * x ** (0.5 * (n - 1))
        rows = np.empty((k_max + 1, x.size), dtype=complex)
        for k, values in iter_laguerre_Lambda(k_max, n - 1, x):
            rows[k] = values * weight
        return rows

    result = integrate_panels(integrand, 0.0, x_max, min_nodes=max(32, 8 * k_max),
                              tol=tol / scale)
    logger.debug("gft %s lambda=%g k<=%d: %d panels, error %.2e",
                 profile.name, lam, k_max, result.panels, result.error)
    return r_k * scale * np.asarray(result.value)


def gft_radial(profile: RadialProfile, lam: float, k: int, n: int, *, tol: float = 1e-9) -> complex:
    if k < 0:
        raise ContractError(f"k must be nonnegative, got {k}")
    return complex(gft_radial_all(profile, lam, k, n, tol=tol)[k])


def build_table(profile: RadialProfile, lambda_grid, k_max: int, n: int, *,
                workers: int = 1, tol: float = 1e-9,
                reference_energy: Optional[float] = None) -> SpectralTable:
    """Tabulate a profile's coefficients, one quadrature per lambda.

    With ``reference_energy`` (the spatial L^2 norm squared) the tail bound is
    the energy the truncated table fails to capture.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    rows = map_ordered(lambda lam: gft_radial_all(profile, lam, k_max, n, tol=tol), grid, workers)
    table = SpectralTable(n, grid, k_max, np.array(rows))
    if reference_energy is not None:
        table.tail_bound = max(reference_energy - plancherel_energy(table).energy, 0.0)
    else:
        logger.warning("Table for %s has no tail majorant; tail_bound left at 0", profile.name)
    return table


def gaussian_table(a: float, b: float, lambda_grid, k_max: int, n: int) -> SpectralTable:
    """Gaussian coefficients from the closed-form Laguerre integral."""
    grid = np.asarray(lambda_grid, dtype=float)
    lam = np.abs(grid)[:, None]
    p = 0.5 + 2.0 * a / lam
    ks = np.arange(k_max + 1)[None, :]
    values = (2.0 ** (0.5 * (n - 1)) * lam ** (-n) * math.sqrt(math.pi / b)
              * np.exp(-lam * lam / (4 * b)) * (1.0 - 1.0 / p) ** ks * p ** (-n))
    table = SpectralTable(n, grid, k_max, values)
    table.tail_bound = max(gaussian_l2_norm_sq(a, b, n) - plancherel_energy(table).energy, 0.0)
    return table


# --- the box -----------------------------------------------------------------


def box_limit(n: int) -> float:
    """chi^_B(lambda, k) as lambda -> 0, the same for every k."""
    return 2.0 ** (0.5 * (1 - n)) / math.factorial(n)


def _box_prefactor(u: np.ndarray, k: int, n: int) -> np.ndarray:
    r_k = math.exp(float(log_r(k, n - 1)))
    return 2.0 ** (0.5 * (n + 1)) * r_k * np.sin(u) / u ** (n + 1)


def chihat_box(lam: float, k: int, n: int, *, tol: float = 1e-9) -> float:
    """chi^_B(lambda, k) = 2^{(n+1)/2} r_k sin(lambda) lambda^{-(n+1)}
    int_0^{lambda/2} Lambda_k^{n-1}(x) x^{(n-1)/2} dx, even in lambda."""
    if lam == 0:
        raise DomainError("chihat_box is undefined at lambda = 0")
    if k < 0:
        raise ContractError(f"k must be nonnegative, got {k}")
    a = abs(lam)
    prefactor = float(_box_prefactor(np.array(a), k, n))

    def integrand(x: np.ndarray) -> np.ndarray:
        for j, values in iter_laguerre_Lambda(k, n - 1, x):
            if j == k:
                return values * x ** (0.5 * (n - 1))

    scale = max(abs(prefactor), 1e-300)
    result = integrate_panels(integrand, 0.0, 0.5 * a, min_nodes=max(32, 8 * k),
                              tol=tol / scale)
    return prefactor * float(result.value)


def chihat_box_dilated(rho: float, lam: float, k: int, n: int, *, tol: float = 1e-9) -> float:
    if not 0 < rho <= 1:
        raise ContractError(f"rho must lie in (0, 1], got {rho}")
    return rho ** (2 * n + 2) * chihat_box(rho * rho * lam, k, n, tol=tol / rho ** (2 * n + 2))


def cumulative_laguerre_integrals(x_grid: np.ndarray, k_max: int, n: int, *,
                                  order: int = 8, max_width: float = 0.01) -> np.ndarray:
    """G_k(x_i) = int_0^{x_i} Lambda_k^{n-1}(x) x^{(n-1)/2} dx for a
    nondecreasing grid of x_i >= 0; shape (k_max+1, len(x_grid))."""
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(x_grid < 0) or np.any(np.diff(x_grid) < 0):
        raise ContractError("cumulative grid must be nonnegative and nondecreasing")
    bounds = np.concatenate([[0.0], x_grid])
    widths = np.diff(bounds)
    pieces = np.maximum(1, np.ceil(widths / max_width)).astype(int)
    offsets = np.cumsum(pieces) - pieces
    step = np.repeat(widths / pieces, pieces)
    local = np.arange(pieces.sum()) - np.repeat(offsets, pieces)
    left = np.repeat(bounds[:-1], pieces) + local * step

    x0, w0 = gauss_legendre(order)
    nodes = (left + 0.5 * step)[:, None] + 0.5 * step[:, None] * x0[None, :]
    weights = 0.5 * step[:, None] * w0[None, :]
    power = nodes ** (0.5 * (n - 1))

    out = np.empty((k_max + 1, len(x_grid)))
    for k, values in iter_laguerre_Lambda(k_max, n - 1, nodes):
        panels = np.sum(values * power * weights, axis=1)
        out[k] = np.cumsum(np.add.reduceat(panels, offsets))
    return out


def box_chihat_grid(u_grid: np.ndarray, k_max: int, n: int, **kwargs) -> np.ndarray:
    """chi^_B(u, k) on a nondecreasing grid u >= 0; shape (len(u_grid), k_max+1)."""
    u = np.asarray(u_grid, dtype=float)
    G = cumulative_laguerre_integrals(0.5 * u, k_max, n, **kwargs)
    out = np.empty((len(u), k_max + 1))
    positive = u > 0
    for k in range(k_max + 1):
        out[positive, k] = _box_prefactor(u[positive], k, n) * G[k, positive]
    out[~positive, :] = box_limit(n)
    return out


def box_table(lambda_grid, k_max: int, n: int, *, rho: float = 1.0) -> SpectralTable:
    """Table of chi_{B_rho} with the exact energy deficit as tail bound."""
    grid = np.asarray(lambda_grid, dtype=float)
    if np.any(grid <= 0):
        raise ContractError("box_table takes a positive lambda grid (coefficients are even)")
    scale = rho ** (2 * n + 2)
    values = scale * box_chihat_grid(rho * rho * grid, k_max, n)
    table = SpectralTable(n, grid, k_max, values)
    volume = 2.0 * math.pi**n / math.factorial(n) * rho ** (2 * n + 2)
    table.tail_bound = max(volume - plancherel_energy(table).energy, 0.0)
    logger.info("Box table n=%d k_max=%d lambda_max=%g: energy deficit %.3e",
                n, k_max, grid[-1], table.tail_bound)
    return table


# --- energy and reconstruction ----------------------------------------------------


class PlancherelEnergy(NamedTuple):
    energy: float
    tail_bound: float


def _with_origin(grid: np.ndarray, integrand: np.ndarray, origin_value=0.0):
    """Insert lambda = 0 where the grid crosses (or starts after) zero."""
    position = int(np.searchsorted(grid, 0.0))
    return (np.insert(grid, position, 0.0),
            np.insert(integrand, position, origin_value, axis=0))


def plancherel_energy(table: SpectralTable) -> PlancherelEnergy:
    """(2 pi)^{-(n+1)} int sum_k dim(k) |c f^(lambda, k)|^2 |lambda|^n d lambda.

    A grid of positive lambdas stands for the symmetric grid: |f^|^2 is even
    for real f.
    """
    n = table.n
    c = spectral_constant(n)
    weights = dims(table.k_max, n)
    density = (np.abs(table.values) ** 2 @ weights) * np.abs(table.lambda_grid) ** n
    grid, density = _with_origin(table.lambda_grid, density)
    integral = integrate.trapezoid(density, grid)
    if table.lambda_grid[0] > 0:
        integral *= 2.0
    energy = (2 * math.pi) ** -(n + 1) * c * c * integral
    return PlancherelEnergy(float(energy), table.tail_bound)


class Reconstruction(NamedTuple):
    value: float
    imag: float
    tail_bound: float


def reconstruct(table: SpectralTable, z, t: float, *,
                tol: Optional[float] = None) -> Reconstruction:
    """f(z, t) = (c/2pi) int e^{-i t lambda} sum_k f^(lambda, k) phi_k^lambda(z) d lambda,
    trapezoidal in lambda and truncated at k_max."""
    if tol is not None and table.tail_bound > tol:
        raise TruncationError("spectral table too coarse for reconstruction", table.tail_bound, tol)
    n = table.n
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if zs.size != n:
        raise ContractError(f"z has {zs.size} components, expected n={n}")
    r2 = float(np.sum(np.abs(zs) ** 2))

    lam = table.lambda_grid
    a = np.abs(lam)
    ell = laguerre_function_table(table.k_max, n - 1, 0.5 * a * r2)
    series = np.sum(table.values * ell.T, axis=1) * (a / (2 * math.pi)) ** n
    integrand = spectral_constant(n) / (2 * math.pi) * series * np.exp(-1j * t * lam)
    grid, integrand = _with_origin(lam, integrand)
    total = integrate.trapezoid(integrand, grid)
    if lam[0] > 0:
        return Reconstruction(float(2.0 * total.real), 0.0, table.tail_bound)
    return Reconstruction(float(total.real), float(total.imag), table.tail_bound)


# --- representation-level check (n = 1) -------------------------------------------


def special_hermite_check(lam: float, k: int, z: complex, *, tol: float = 1e-11) -> tuple:
    """Compare <pi_lambda(z) Phi_k, Phi_k> (quadrature) with (2pi/|lambda|) phi_k^lambda(z)."""
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    if not 0 <= k <= 3:
        raise ContractError("special_hermite_check supports k <= 3")
    z = complex(z)
    x, y = z.real, z.imag
    a = abs(lam)
    root = math.sqrt(a)

    def scaled(xi: np.ndarray) -> np.ndarray:
        return a**0.25 * np.asarray(hermite_h(k, root * xi))

    def integrand(xi: np.ndarray) -> np.ndarray:
        return np.exp(1j * lam * (x * xi + 0.5 * x * y)) * scaled(xi + y) * scaled(xi)

    half_width = (math.sqrt(2 * k + 1) + 10.0) / root + abs(y)
    lhs = complex(integrate_panels(integrand, -half_width, half_width, min_nodes=64, tol=tol).value)
    arg = 0.5 * a * abs(z) ** 2
    rhs = float(laguerre_L(k, 0.0, arg)) * math.exp(-0.5 * arg)
    return lhs, rhs
