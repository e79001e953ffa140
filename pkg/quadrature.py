"""Composite Gauss-Legendre panel quadrature with doubling refinement.

Integrands are vectorized callables ``fn(x) -> array`` whose last axis runs over
the nodes ``x``; leading axes (for example one row per Laguerre index k) are
integrated simultaneously and the convergence test uses the worst component.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, NamedTuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from errors import ContractError, QuadratureError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 16
MAX_PANELS = 1 << 14

Integrand = Callable[[np.ndarray], np.ndarray]


class QuadratureResult(NamedTuple):
    value: Union[float, complex, np.ndarray]
    error: float
    panels: int


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule on [-1, 1] (read-only)."""
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(edges: np.ndarray, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Flattened nodes and weights of the composite rule on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    x0, w0 = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * x0[None, :]
    w = half[:, None] * w0[None, :]
    return x.ravel(), w.ravel()


def panel_sums(fn: Integrand, edges: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Integral over each panel separately; shape (..., len(edges) - 1)."""
    x, w = panel_nodes(edges, order)
    values = np.asarray(fn(x)) * w
    return values.reshape(values.shape[:-1] + (len(edges) - 1, order)).sum(axis=-1)


def _composite(fn: Integrand, edges: np.ndarray, order: int):
    x, w = panel_nodes(edges, order)
    return np.asarray(fn(x)) @ w


def integrate_panels(
    fn: Integrand,
    a: float,
    b: float,
    *,
    min_nodes: int = 32,
    order: int = DEFAULT_ORDER,
    tol: float = 1e-9,
    max_panels: int = MAX_PANELS,
) -> QuadratureResult:
    """Integrate ``fn`` over [a, b], doubling the panel count until two
    successive composite estimates differ by at most ``tol`` (absolute)."""
    if b < a:
        raise ContractError(f"integration interval [{a}, {b}] is reversed")
    panels = max(1, math.ceil(min_nodes / order))
    previous = _composite(fn, np.linspace(a, b, panels + 1), order)
    if b == a:
        return QuadratureResult(previous, 0.0, panels)

    error = math.inf
    while panels * 2 <= max_panels:
        panels *= 2
        current = _composite(fn, np.linspace(a, b, panels + 1), order)
        error = float(np.max(np.abs(current - previous)))
        if error <= tol:
            return QuadratureResult(current, error, panels)
        previous = current

    logger.warning("Panel quadrature on [%g, %g] stopped at %d panels, error %.3e",
                   a, b, panels, error)
    raise QuadratureError(f"panel quadrature on [{a}, {b}] did not converge", error, tol)


def hybrid_grid(upper: float, step: float, *, lower: float = 1e-4,
                per_decade: int = 20) -> np.ndarray:
    """Strictly increasing positive grid: geometric on [lower, step), then
    uniform with spacing ``step`` up to ``upper`` (inclusive)."""
    if upper <= 0 or step <= 0 or lower <= 0:
        raise ContractError("grid bounds and step must be positive")
    count = int(math.floor(upper / step + 1e-9))
    uniform = step * np.arange(1, count + 1, dtype=float)
    if count == 0 or uniform[-1] < upper * (1 - 1e-12):
        uniform = np.append(uniform, upper)
    if lower >= step:
        return uniform
    decades = math.log10(step / lower)
    geometric = np.logspace(math.log10(lower), math.log10(step),
                            max(2, math.ceil(per_decade * decades) + 1))[:-1]
    return np.concatenate([geometric, uniform])
