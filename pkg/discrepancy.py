"""Point sets, the normalized-box measure and the quadratic discrepancy

    int_0^1 int |D_N(z, t; rho)|^2 dz dt d rho,
    D_N(g; rho) = #{j : p_j in g o B_rho} - N mu(g o B_rho),

evaluated two independent ways: spatial Monte Carlo over (g, rho) and the
spectral closed form sum_k A_k(lambda) W_k(lambda) |lambda|^n.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, stats
from scipy.spatial import cKDTree

from asymptotics import avg_square_table
from errors import ContractError, DomainError, QuadratureError, TruncationError
from gft import box_chihat_grid, dims, spectral_constant
from hgroup import (
    GroupContext,
    HPoint,
    im_pairing,
    in_translated_box_arrays,
    koranyi_norm,
    koranyi_norm_arrays,
    mul_arrays,
)
from parallel import map_ordered
from quadrature import gauss_legendre, hybrid_grid
from specfun import laguerre_function_table

logger = logging.getLogger(__name__)

BLOCK = 4096
BRUTE_FORCE_MAX_N = 256
MASS_CHUNK = 2048
MASS_ORDER = 24
MIN_SAMPLES = 1000


# --- measure ---------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizedBox:
    """mu = chi_{B_1} / |B_1|."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ContractError(f"dimension n must be >= 1, got {self.n}")

    @property
    def context(self) -> GroupContext:
        return GroupContext(self.n)

    @property
    def volume(self) -> float:
        return self.context.unit_box_volume


# Radial densities would join this union.
MeasureModel = Union[NormalizedBox]


def _require_box(mu: MeasureModel) -> NormalizedBox:
    if not isinstance(mu, NormalizedBox):
        raise ContractError(f"unsupported measure model {type(mu).__name__}")
    return mu


def ball_volume(dim: int, radius=1.0):
    unit = math.pi ** (0.5 * dim) / math.gamma(0.5 * dim + 1)
    return unit * np.asarray(radius, dtype=float) ** dim


def koranyi_ball_volume(ctx: GroupContext) -> float:
    """|{|z|^4 + t^2 <= 1}| = |S^{2n-1}| * B(n/2, 3/2) / 2."""
    n = ctx.n
    sphere = 2 * math.pi**n / math.gamma(n)
    beta = math.exp(math.lgamma(0.5 * n) + math.lgamma(1.5) - math.lgamma(0.5 * n + 1.5))
    return 0.5 * sphere * beta


def _power_integral(a: np.ndarray, b: np.ndarray, r2: np.ndarray, power: int) -> np.ndarray:
    """int_a^b (r2 - x^2)^power dx for integer power >= 0."""
    total = np.zeros(np.broadcast_shapes(a.shape, b.shape, r2.shape))
    for j in range(power + 1):
        total = total + (math.comb(power, j) * (-1) ** j * r2 ** (power - j)
                         * (b ** (2 * j + 1) - a ** (2 * j + 1)) / (2 * j + 1))
    return total


def _section_volume(v: np.ndarray, d: np.ndarray, rho: np.ndarray, n: int) -> np.ndarray:
    """(2n-1)-volume of {w : |w - z_c| <= rho, |w| <= 1, <w - z_c, e2> = v}, with d = |z_c|."""
    r1 = np.maximum(rho * rho - v * v, 0.0)
    r2 = np.maximum(1.0 - v * v, 0.0)
    s1, s2 = np.sqrt(r1), np.sqrt(r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        # below u_star the rho-ball is the binding constraint
        u_star = np.where(d > 0, (1.0 - rho * rho - d * d) / np.where(d > 0, 2 * d, 1.0),
                          np.where(rho <= 1.0, np.inf, -np.inf))
    a1 = -s1
    b1 = np.clip(u_star, -s1, s1)
    a2 = np.clip(u_star + d, -s2, s2)
    b2 = s2
    first = np.where(b1 > a1, _power_integral(a1, b1, r1, n - 1), 0.0)
    second = np.where(b2 > a2, _power_integral(a2, b2, r2, n - 1), 0.0)
    return float(ball_volume(2 * n - 2)) * (first + second)


def _vertical_overlap(m: np.ndarray, h: np.ndarray) -> np.ndarray:
    return np.maximum(np.minimum(1.0, m + h) - np.maximum(-1.0, m - h), 0.0)


def _mass_chunk(centers: np.ndarray, rhos: np.ndarray, n: int, order: int) -> np.ndarray:
    """Unnormalized |(center o B_rho) cap B_1| by slab integration in v."""
    d = np.sqrt(np.sum(centers[:, :-1] ** 2, axis=1))
    tc = centers[:, -1]
    h = rhos * rhos
    V = np.minimum(rhos, 1.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        safe_d = np.where(d > 0, d, 1.0)
        # t_c + d v / 2 meets an edge of the vertical overlap at +-1 +- h
        levels = np.stack([-1.0 - h, -1.0 + h, 1.0 - h, 1.0 + h], axis=1)
        crossings = np.where(d[:, None] > 0, 2.0 * (levels - tc[:, None]) / safe_d[:, None],
                             V[:, None])
        u_star = (1.0 - h - d * d) / (2 * safe_d)
        gap = h - u_star * u_star
        kink = np.where((d > 0) & (gap >= 0), np.sqrt(np.maximum(gap, 0.0)), V)
    points = np.concatenate([-V[:, None], V[:, None], crossings, kink[:, None], -kink[:, None]],
                            axis=1)
    points = np.sort(np.clip(points, -V[:, None], V[:, None]), axis=1)

    lo, hi = points[:, :-1], points[:, 1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x0, w0 = gauss_legendre(order)
    psi = 0.5 * math.pi * x0
    # v = mid + half sin(psi) absorbs square-root endpoints
    v = mid[..., None] + half[..., None] * np.sin(psi)
    jac = half[..., None] * np.cos(psi) * 0.5 * math.pi * w0

    expand = (slice(None), None, None)
    section = _section_volume(v, d[expand], rhos[expand], n)
    overlap = _vertical_overlap(tc[expand] + 0.5 * d[expand] * v, h[expand])
    return np.sum(section * overlap * jac, axis=(1, 2))


def mu_box_mass_many(mu: MeasureModel, centers: np.ndarray, rhos: np.ndarray, *,
                     tol: float = 1e-6) -> np.ndarray:
    """mu(center_i o B_{rho_i}) for arrays of centers (M, 2n+1) and radii (M,)."""
    mu = _require_box(mu)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    rhos = np.atleast_1d(np.asarray(rhos, dtype=float))
    if centers.shape[1] != 2 * mu.n + 1 or len(rhos) != len(centers):
        raise ContractError("centers/radii do not match the measure dimension")
    out = np.empty(len(rhos))
    worst = 0.0
    for start in range(0, len(rhos), MASS_CHUNK):
        part = slice(start, start + MASS_CHUNK)
        coarse = _mass_chunk(centers[part], rhos[part], mu.n, MASS_ORDER)
        fine = _mass_chunk(centers[part], rhos[part], mu.n, 2 * MASS_ORDER)
        worst = max(worst, float(np.max(np.abs(fine - coarse), initial=0.0)) / mu.volume)
        out[part] = fine / mu.volume
    if worst > tol:
        raise QuadratureError("box mass quadrature", worst, tol)
    return np.clip(out, 0.0, 1.0)


def mu_box_mass(mu: MeasureModel, center: HPoint, rho: float, *, tol: float = 1e-6) -> float:
    if rho <= 0:
        raise ContractError(f"box radius must be positive, got {rho}")
    if center.n != _require_box(mu).n:
        raise ContractError(f"center has dimension {center.n}, measure has {mu.n}")
    return float(mu_box_mass_many(mu, center.as_array()[None, :], np.array([rho]), tol=tol)[0])


class MassEstimate(NamedTuple):
    value: float
    stderr: float


def _uniform_ball(rng: np.random.Generator, count: int, dim: int, radius) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (np.asarray(radius) * rng.random(count) ** (1.0 / dim))[:, None]


def _uniform_box(rng: np.random.Generator, count: int, n: int, rho: float = 1.0) -> np.ndarray:
    z = _uniform_ball(rng, count, 2 * n, rho)
    t = rho * rho * (2.0 * rng.random(count) - 1.0)
    return np.concatenate([z, t[:, None]], axis=1)


def mu_ball_mass(mu: MeasureModel, center: HPoint, r: float, *, samples: int = 100_000,
                 seed: int = 0) -> MassEstimate:
    """Monte Carlo mu(center o {||g|| <= r}) with its standard error."""
    mu = _require_box(mu)
    if r <= 0:
        raise ContractError(f"ball radius must be positive, got {r}")
    if koranyi_norm(center) + 2 ** 0.25 <= r:
        return MassEstimate(1.0, 0.0)
    rng = np.random.default_rng(seed)
    c = center.as_array()
    if r ** mu.context.Q < 1.0:
        # sample the enclosing translate c o B_r, which contains the ball
        p = mul_arrays(c, _uniform_box(rng, samples, mu.n, r))
        hits = (koranyi_norm_arrays(mul_arrays(-c, p)) <= r) & in_translated_box_arrays(
            np.zeros_like(c), 1.0, p)
        scale = r ** mu.context.Q
    else:
        p = _uniform_box(rng, samples, mu.n)
        hits = koranyi_norm_arrays(mul_arrays(-c, p)) <= r
        scale = 1.0
    frac = float(np.mean(hits))
    return MassEstimate(scale * frac, scale * math.sqrt(frac * (1 - frac) / samples))


# --- point sets ----------------------------------------------------------------------


@dataclass
class PointSet:
    points: np.ndarray
    generator: str = "manual"
    seed: int = 0
    n: int = 1
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2 * self.n + 1)
        if not np.all(np.isfinite(self.points)):
            raise ContractError("point coordinates must be finite")

    @property
    def N(self) -> int:
        return len(self.points)

    @classmethod
    def from_hpoints(cls, points: Sequence[HPoint], generator: str = "manual", seed: int = 0,
                     n: Optional[int] = None) -> "PointSet":
        if n is None:
            if not points:
                raise ContractError("dimension of an empty point set must be given")
            n = points[0].n
        if any(p.n != n for p in points):
            raise ContractError("points of mixed dimension")
        array = np.array([p.as_array() for p in points]).reshape(-1, 2 * n + 1)
        return cls(array, generator, seed, n)

    def hpoints(self) -> List[HPoint]:
        return [HPoint.from_array(row) for row in self.points]

    def doubled(self) -> "PointSet":
        return PointSet(np.concatenate([self.points, self.points]), self.generator, self.seed,
                        self.n, dict(self.meta))

    def to_csv(self) -> str:
        buffer = io.StringIO()
        buffer.write(f"# n={self.n}, generator={self.generator}, seed={self.seed}\n")
        for key in sorted(self.meta):
            buffer.write(f"# {key}={self.meta[key]}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(point_columns(self.n))
        for row in self.points:
            writer.writerow([repr(float(v)) for v in row])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointSet":
        header: Dict[str, str] = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                for item in line[1:].split(","):
                    if "=" in item:
                        key, value = item.split("=", 1)
                        header[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
        try:
            n = int(header.pop("n"))
            generator = header.pop("generator", "manual")
            seed = int(header.pop("seed", "0"))
        except (KeyError, ValueError) as e:
            raise ContractError(f"point set header is missing or malformed: {e}") from e
        rows = list(csv.reader(body))
        if not rows or tuple(rows[0]) != point_columns(n):
            raise ContractError(f"point set columns must be {','.join(point_columns(n))}")
        try:
            points = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
        except ValueError as e:
            raise ContractError(f"malformed point row: {e}") from e
        if points.size and points.shape[1] != 2 * n + 1:
            raise ContractError(f"rows must have {2 * n + 1} columns")
        return cls(points.reshape(-1, 2 * n + 1), generator, seed, n, header)


def point_columns(n: int) -> tuple:
    names = []
    for j in range(1, n + 1):
        names.extend((f"x{j}", f"y{j}"))
    return tuple(names) + ("t",)


def gen_iid(mu: MeasureModel, N: int, seed: int) -> PointSet:
    """N independent draws from mu."""
    mu = _require_box(mu)
    if N < 1:
        raise ContractError(f"N must be >= 1, got {N}")
    rng = np.random.default_rng(seed)
    return PointSet(_uniform_box(rng, N, mu.n), "iid", seed, mu.n, {"N_target": str(N)})


def jitter_delta(mu: NormalizedBox, N_target: int) -> float:
    return (mu.volume / N_target) ** (1.0 / mu.context.Q)


def jitter_cell_diameter(n: int, delta: float) -> float:
    """Upper bound on the Koranyi diameter of a cell
    (m delta, k delta^2) o ([0, delta)^{2n} x [0, delta^2))."""
    return delta * (4 * n * n + (n + 1) ** 2) ** 0.25


def gen_jittered(mu: MeasureModel, N_target: int, seed: int) -> PointSet:
    """One uniform draw per cell of a group-adapted grid, kept when it lands in B_1.

    Cells are left translates (m delta, k delta^2) o ([0, delta)^{2n} x [0, delta^2))
    with delta^Q = |B_1| / N_target; they tile the group, so every set A gets
    N_target * mu(A) points in expectation. The actual N is in ``meta``.
    """
    mu = _require_box(mu)
    if N_target < 1:
        raise ContractError(f"N must be >= 1, got {N_target}")
    n = mu.n
    delta = jitter_delta(mu, N_target)
    reach = int(math.ceil((1.0 + delta) / delta))
    axis = np.arange(-reach, reach)
    grid = np.stack(np.meshgrid(*([axis] * (2 * n)), indexing="ij"), axis=-1).reshape(-1, 2 * n)
    base_z = grid * delta
    # keep z-cells that meet the unit ball
    nearest = np.clip(0.0, base_z, base_z + delta)
    base_z = base_z[np.sum(nearest * nearest, axis=1) <= 1.0]

    shear = 0.5 * math.sqrt(2 * n) * delta * (1.0 + math.sqrt(2 * n) * delta)
    k_lo = int(math.floor((-1.0 - shear) / delta**2)) - 1
    k_hi = int(math.ceil((1.0 + shear) / delta**2))
    ks = np.arange(k_lo, k_hi + 1)

    cells_z = np.repeat(base_z, len(ks), axis=0)
    cells_t = np.tile(ks * delta**2, len(base_z))
    base = np.concatenate([cells_z, cells_t[:, None]], axis=1)

    rng = np.random.default_rng(seed)
    local = np.concatenate([delta * rng.random((len(base), 2 * n)),
                            delta**2 * rng.random((len(base), 1))], axis=1)
    candidates = mul_arrays(base, local)
    keep = in_translated_box_arrays(np.zeros(2 * n + 1), 1.0, candidates)
    points = candidates[keep]
    logger.info("Jittered set: target %d, %d cells, kept %d (delta=%.4g)",
                N_target, len(base), len(points), delta)
    meta = {"N_target": str(N_target), "delta": repr(delta), "cells": str(len(base))}
    return PointSet(points, "jittered", seed, n, meta)


GENERATORS: Dict[str, Callable[[MeasureModel, int, int], PointSet]] = {
    "iid": gen_iid,
    "jittered": gen_jittered,
}


# --- estimates and configuration ------------------------------------------------------


class DiscrepancyEstimate(BaseModel):
    model_config = ConfigDict(extra="forbid")

    value: float = Field(ge=0)
    stat_stderr: float = Field(ge=0)
    trunc_bound: float = Field(ge=0)
    method: str
    breakdown: Optional[List[float]] = None


class SpectralConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    k_max: int = Field(default=200, ge=0)
    lambda_max: float = Field(default=200.0, gt=0)
    lambda_step: float = Field(default=0.02, gt=0)
    lambda_lower: float = Field(default=1e-4, gt=0)
    per_decade: int = Field(default=20, gt=0)
    panel_order: int = Field(default=8, gt=0)

    def grid(self) -> np.ndarray:
        return hybrid_grid(self.lambda_max, self.lambda_step, lower=self.lambda_lower,
                           per_decade=self.per_decade)


def local_discrepancy(P: PointSet, mu: MeasureModel, center: HPoint, rho: float) -> float:
    if P.N == 0:
        return 0.0
    count = int(np.sum(in_translated_box_arrays(center.as_array(), rho, P.points)))
    return count - P.N * mu_box_mass(mu, center, rho)


# --- direct Monte Carlo ----------------------------------------------------------------


@dataclass
class MonteCarloPlan:
    """Sampled (g, rho) with their sampling weights and mu-masses.

    g is uniform in {|z| <= R + rho, |t| <= T(rho)}, T(rho) = T + rho^2 + rho (R + rho) / 2,
    outside of which D_N vanishes for points and measure inside {|z| <= R, |t| <= T}.
    """

    n: int
    centers: np.ndarray
    rhos: np.ndarray
    weights: np.ndarray
    masses: np.ndarray
    extent: tuple
    seed: int

    @property
    def size(self) -> int:
        return len(self.rhos)

    @staticmethod
    def height(rho, extent) -> np.ndarray:
        R, T = extent
        return T + rho * rho + 0.5 * rho * (R + rho)

    @classmethod
    def build(cls, mu: MeasureModel, samples: int, seed: int, *, extent=(1.0, 1.0),
              workers: int = 1) -> "MonteCarloPlan":
        mu = _require_box(mu)
        if samples < MIN_SAMPLES:
            raise ContractError(f"Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}")
        R, T = float(extent[0]), float(extent[1])
        if R < 1.0 or T < 1.0:
            raise ContractError("the sampling extent must contain B_1")
        n = mu.n
        blocks = math.ceil(samples / BLOCK)
        sizes = [BLOCK] * (blocks - 1) + [samples - BLOCK * (blocks - 1)]
        children = np.random.SeedSequence(seed).spawn(blocks)

        def draw(task):
            child, count = task
            rng = np.random.default_rng(child)
            rho = rng.random(count)
            z = _uniform_ball(rng, count, 2 * n, R + rho)
            height = cls.height(rho, (R, T))
            t = height * (2.0 * rng.random(count) - 1.0)
            centers = np.concatenate([z, t[:, None]], axis=1)
            weights = ball_volume(2 * n, R + rho) * 2.0 * height
            return centers, rho, weights, mu_box_mass_many(mu, centers, rho)

        parts = map_ordered(draw, list(zip(children, sizes)), workers)
        logger.info("Monte Carlo plan: %d samples in %d blocks (seed %d)", samples, blocks, seed)
        return cls(n, *(np.concatenate(p) for p in zip(*parts)), (R, T), seed)

    def covers(self, P: PointSet) -> bool:
        if P.N == 0:
            return True
        R, T = self.extent
        z2 = np.sum(P.points[:, :-1] ** 2, axis=1)
        return bool(np.all(z2 <= R * R * (1 + 1e-12)) and np.all(np.abs(P.points[:, -1]) <= T))


def count_members(points: np.ndarray, centers: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """#{j : points_j in centers_i o B_{rhos_i}} for every i."""
    if len(points) == 0:
        return np.zeros(len(centers), dtype=np.int64)
    if len(points) <= BRUTE_FORCE_MAX_N:
        out = np.empty(len(centers), dtype=np.int64)
        step = max(1, 2**20 // len(points))
        for start in range(0, len(centers), step):
            part = slice(start, start + step)
            inside = in_translated_box_arrays(centers[part, None, :], rhos[part, None],
                                              points[None, :, :])
            out[part] = inside.sum(axis=1)
        return out

    tree = cKDTree(points[:, :-1])
    candidates = tree.query_ball_point(centers[:, :-1], rhos, return_sorted=False)
    out = np.empty(len(centers), dtype=np.int64)
    for i, idx in enumerate(candidates):
        if not idx:
            out[i] = 0
            continue
        sub = points[idx]
        height = sub[:, -1] - centers[i, -1] - 0.5 * im_pairing(centers[i, :-1], sub[:, :-1])
        out[i] = int(np.count_nonzero(np.abs(height) <= rhos[i] * rhos[i]))
    return out


def _estimate(contributions: np.ndarray, method: str) -> DiscrepancyEstimate:
    value = float(np.mean(contributions))
    stderr = float(np.std(contributions, ddof=1) / math.sqrt(len(contributions)))
    return DiscrepancyEstimate(value=max(value, 0.0), stat_stderr=stderr, trunc_bound=0.0,
                               method=method)


def l2_direct(P: PointSet, mu: MeasureModel, *, samples: int = 100_000, seed: int = 0,
              plan: Optional[MonteCarloPlan] = None, workers: int = 1) -> DiscrepancyEstimate:
    """Monte Carlo estimate of int_0^1 int |D_N|^2 with its standard error."""
    mu = _require_box(mu)
    if P.n != mu.n:
        raise ContractError(f"point set has dimension {P.n}, measure has {mu.n}")
    if P.N == 0:
        return DiscrepancyEstimate(value=0.0, stat_stderr=0.0, trunc_bound=0.0, method="direct")
    if plan is None:
        R = max(1.0, float(np.sqrt(np.max(np.sum(P.points[:, :-1] ** 2, axis=1)))))
        T = max(1.0, float(np.max(np.abs(P.points[:, -1]))))
        plan = MonteCarloPlan.build(mu, samples, seed, extent=(R, T), workers=workers)
    elif not plan.covers(P):
        raise ContractError("point set lies outside the Monte Carlo plan's extent")
    counts = count_members(P.points, plan.centers, plan.rhos)
    D = counts - P.N * plan.masses
    return _estimate(plan.weights * D * D, "direct")


def expected_iid_l2(mu: MeasureModel, N: int, *, samples: int = 100_000, seed: int = 0,
                    plan: Optional[MonteCarloPlan] = None) -> DiscrepancyEstimate:
    """E[l2] over N iid draws from mu: N int mu(box) (1 - mu(box))."""
    mu = _require_box(mu)
    plan = MonteCarloPlan.build(mu, samples, seed) if plan is None else plan
    m = plan.masses
    return _estimate(N * plan.weights * m * (1.0 - m), "iid-expectation")


# --- spectral closed form ---------------------------------------------------------------


def _measure_eigenvalues(mu: NormalizedBox, lams: np.ndarray, k_max: int) -> np.ndarray:
    """c_n chi^_B(lambda, k) / |B_1| on an increasing positive grid; shape (K+1, L)."""
    return spectral_constant(mu.n) * box_chihat_grid(lams, k_max, mu.n).T / mu.volume


def spectral_weights(P: PointSet, mu: MeasureModel, lams, k_max: int, *,
                     include_measure: bool = True, workers: int = 1) -> np.ndarray:
    """sum_{|alpha|=k} ||sigma^(lambda) Phi_alpha||^2 on a grid; shape (len(lams), k_max+1).

    sigma = sum_j delta_{p_j} - N mu, or only the point masses when
    ``include_measure`` is false.
    """
    mu = _require_box(mu)
    n = mu.n
    lams = np.abs(np.asarray(lams, dtype=float))
    if np.any(lams == 0):
        raise DomainError("spectral weights are undefined at lambda = 0")
    order = np.argsort(lams, kind="stable")
    lam = lams[order]
    z, t = P.points[:, :-1], P.points[:, -1]
    N = P.N

    def row(j: int) -> np.ndarray:
        # pairs (j, l > j), counted twice
        acc = np.zeros((k_max + 1, len(lam)))
        for l in range(j + 1, N):
            dz = z[j] - z[l]
            theta = t[j] - t[l] - 0.5 * float(im_pairing(z[l], z[j]))
            ell = laguerre_function_table(k_max, n - 1, 0.5 * lam * float(dz @ dz))
            acc += 2.0 * np.cos(lam * theta) * ell
        return acc

    W = N * np.repeat(dims(k_max, n)[:, None], len(lam), axis=1)
    for part in map_ordered(row, range(N), workers):
        W += part

    if include_measure and N > 0:
        E = _measure_eigenvalues(mu, lam, k_max)
        cross = np.zeros_like(W)
        for j in range(N):
            ell = laguerre_function_table(k_max, n - 1, 0.5 * lam * float(z[j] @ z[j]))
            cross += np.cos(lam * t[j]) * ell
        W += -2.0 * N * E * cross + N * N * E * E * dims(k_max, n)[:, None]

    out = np.empty((len(lams), k_max + 1))
    out[order] = W.T
    return out


def spectral_weight(P: PointSet, mu: MeasureModel, lam: float, k: int, *,
                    include_measure: bool = True) -> float:
    if lam == 0:
        raise DomainError("spectral weight is undefined at lambda = 0")
    if k < 0:
        raise ContractError(f"k must be nonnegative, got {k}")
    return float(spectral_weights(P, mu, [lam], k, include_measure=include_measure)[0, k])


@lru_cache(maxsize=4)
def averaged_box_table(n: int, cfg: SpectralConfig) -> np.ndarray:
    """int_0^1 |chi^_{B_rho}(lambda, k)|^2 d rho on cfg's grid; read-only."""
    table = avg_square_table(cfg.grid(), cfg.k_max, n, step=cfg.lambda_step, order=cfg.panel_order)
    table.setflags(write=False)
    return table


def _lambda_integral(density: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """2 int_0^lambda_max along axis 0, the density vanishing at lambda = 0."""
    lam = np.concatenate([[0.0], grid])
    padded = np.concatenate([np.zeros((1,) + density.shape[1:]), density])
    return 2.0 * integrate.trapezoid(padded, lam, axis=0)


def l2_spectral(P: PointSet, mu: MeasureModel, cfg: Optional[SpectralConfig] = None, *,
                include_measure: bool = True, tol: Optional[float] = None,
                workers: int = 1) -> DiscrepancyEstimate:
    """(2pi)^{-(n+1)} c_n^2 int sum_k A_k(lambda) W_k(lambda) |lambda|^n d lambda.

    trunc_bound is 4 N^2 times the averaged box energy the truncated table
    misses, |B_1| / (Q + 1) minus what it captures.
    """
    mu = _require_box(mu)
    if P.n != mu.n:
        raise ContractError(f"point set has dimension {P.n}, measure has {mu.n}")
    cfg = SpectralConfig() if cfg is None else cfg
    n, N = mu.n, P.N
    grid = cfg.grid()
    A = averaged_box_table(n, cfg)
    power = grid[:, None] ** n
    const = (2 * math.pi) ** -(n + 1) * spectral_constant(n) ** 2

    captured = const * float(_lambda_integral((A * power) @ dims(cfg.k_max, n), grid))
    deficit = max(mu.volume / (mu.context.Q + 1) - captured, 0.0)
    trunc = 4.0 * N * N * deficit
    if tol is not None and trunc > tol:
        raise TruncationError("spectral discrepancy truncated", trunc, tol)
    if N == 0:
        return DiscrepancyEstimate(value=0.0, stat_stderr=0.0, trunc_bound=0.0, method="spectral",
                                   breakdown=[0.0] * (cfg.k_max + 1))

    W = spectral_weights(P, mu, grid, cfg.k_max, include_measure=include_measure, workers=workers)
    per_k = const * _lambda_integral(A * W * power, grid)
    value = float(np.sum(per_k))
    logger.debug("Spectral l2 N=%d: %.6g (deficit %.3e)", N, value, deficit)
    return DiscrepancyEstimate(value=max(value, 0.0), stat_stderr=0.0, trunc_bound=trunc,
                               method="spectral", breakdown=[float(x) for x in per_k])


# --- scaling -----------------------------------------------------------------------------


class ScalingRow(NamedTuple):
    generator: str
    N_target: int
    N_actual: int
    rep: int
    l2: float
    stderr: float
    trunc: float


class AuditResult(NamedTuple):
    N: int
    direct: float
    direct_stderr: float
    spectral: float
    trunc_bound: float
    agrees: bool


class RothReport(NamedTuple):
    c: float
    below: list


@dataclass
class ScalingResult:
    rows: List[ScalingRow]
    slope: float
    slope_stderr: float
    audit: Optional[AuditResult] = None
    roth: Optional[RothReport] = None
    reduced: bool = False


def agreement(spectral: DiscrepancyEstimate, direct: DiscrepancyEstimate, *,
              relative: float = 0.05) -> bool:
    gap = abs(spectral.value - direct.value)
    slack = (2.0 * (direct.stat_stderr + spectral.trunc_bound)
             + relative * max(spectral.value, direct.value))
    return gap <= slack


def roth_report(rows: Sequence[ScalingRow], *, exponent: float = 0.5,
                factor: float = 0.3) -> RothReport:
    """Least-squares c in l2 ~ c N^exponent (log scale) and the rows below factor * c N^exponent."""
    usable = [r for r in rows if r.l2 > 0 and r.N_actual > 0]
    if not usable:
        return RothReport(0.0, [])
    logs = [math.log(r.l2) - exponent * math.log(r.N_actual) for r in usable]
    c = math.exp(float(np.mean(logs)))
    below = [r for r in usable if r.l2 < factor * c * r.N_actual**exponent]
    return RothReport(c, below)


def point_set_seed(seed: int, N: int, rep: int) -> int:
    return int(np.random.SeedSequence([seed, N, rep]).generate_state(1)[0])


def scaling_study(generator: str, N_list: Sequence[int], reps: int, seed: int,
                  mu: MeasureModel, *, samples: int = 100_000,
                  spectral_cfg: Optional[SpectralConfig] = None, audit: bool = True,
                  workers: int = 1, reduced: bool = False) -> ScalingResult:
    """Mean l2 per N from the direct path (one shared plan), fitted log-log slope,
    and a spectral audit at the smallest N.

    A full fit needs 4 sizes and 3 repetitions. With ``reduced`` the fit runs on
    as few as 2 sizes and 1 repetition, and the result is flagged as reduced.
    """
    mu = _require_box(mu)
    if generator not in GENERATORS:
        raise ContractError(f"unknown generator {generator!r}; choose from {sorted(GENERATORS)}")
    N_list = sorted({int(N) for N in N_list})
    short = len(N_list) < 4 or reps < 3
    if short and not reduced:
        raise ContractError("scaling_study needs at least 4 sizes and 3 repetitions")
    if len(N_list) < 2 or reps < 1:
        raise ContractError("a reduced fit still needs 2 distinct sizes and 1 repetition")
    if short:
        logger.warning("Reduced fit on %d sizes x %d repetitions; slope stderr is unreliable",
                       len(N_list), reps)
    make = GENERATORS[generator]
    plan = MonteCarloPlan.build(mu, samples, seed, workers=workers)

    rows: List[ScalingRow] = []
    sets: Dict[int, PointSet] = {}
    for N in N_list:
        for rep in range(reps):
            P = make(mu, N, point_set_seed(seed, N, rep))
            if rep == 0:
                sets[N] = P
            est = l2_direct(P, mu, plan=plan)
            rows.append(ScalingRow(generator, N, P.N, rep, est.value, est.stat_stderr,
                                   est.trunc_bound))
        logger.info("Scaling %s N=%d: mean l2 %.4g", generator, N,
                    float(np.mean([r.l2 for r in rows if r.N_target == N])))

    x = [math.log(np.mean([r.N_actual for r in rows if r.N_target == N])) for N in N_list]
    y = [math.log(np.mean([r.l2 for r in rows if r.N_target == N])) for N in N_list]
    fit = stats.linregress(x, y)

    audit_result = None
    if audit:
        P = sets[N_list[0]]
        direct = l2_direct(P, mu, plan=plan)
        spectral = l2_spectral(P, mu, spectral_cfg, workers=workers)
        audit_result = AuditResult(P.N, direct.value, direct.stat_stderr, spectral.value,
                                   spectral.trunc_bound, agreement(spectral, direct))
        if not audit_result.agrees:
            logger.warning("Spectral audit at N=%d disagrees: direct %.4g, spectral %.4g",
                           P.N, direct.value, spectral.value)

    roth = roth_report(rows)
    if roth.below:
        logger.warning("%d rows fall below 0.3 c N^(1/2)", len(roth.below))
    return ScalingResult(rows, float(fit.slope), float(fit.stderr), audit_result, roth, short)
