"""Group algebra and geometry of the Heisenberg group H^n = C^n x R.

Points store z as interleaved real pairs (x1, y1, ..., xn, yn). The array
helpers take trailing axis 2n+1 in the same order with t last, which is also
the column order of point-set CSV files.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from errors import ContractError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupContext:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ContractError(f"dimension n must be >= 1, got {self.n}")

    @property
    def Q(self) -> int:
        """Homogeneous dimension."""
        return 2 * self.n + 2

    @property
    def unit_box_volume(self) -> float:
        """|B_1| = 2 pi^n / n!"""
        return 2.0 * math.pi**self.n / math.factorial(self.n)


@dataclass(frozen=True)
class HPoint:
    xy: tuple[float, ...]
    t: float = 0.0

    def __post_init__(self):
        xy = tuple(float(v) for v in self.xy)
        if len(xy) < 2 or len(xy) % 2:
            raise ContractError(f"z needs an even number (>= 2) of real coordinates, got {len(xy)}")
        if not all(math.isfinite(v) for v in xy) or not math.isfinite(self.t):
            raise ContractError("HPoint coordinates must be finite")
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_complex(cls, z: Union[complex, Sequence[complex]], t: float = 0.0) -> "HPoint":
        zs = [z] if isinstance(z, (int, float, complex)) else list(z)
        xy = []
        for zj in zs:
            zj = complex(zj)
            xy.extend((zj.real, zj.imag))
        return cls(tuple(xy), t)

    @classmethod
    def from_array(cls, coords: Sequence[float]) -> "HPoint":
        coords = [float(v) for v in coords]
        return cls(tuple(coords[:-1]), coords[-1])

    @classmethod
    def identity(cls, n: int) -> "HPoint":
        return cls((0.0,) * (2 * n), 0.0)

    @property
    def n(self) -> int:
        return len(self.xy) // 2

    @property
    def z(self) -> tuple[complex, ...]:
        return tuple(complex(self.xy[2 * j], self.xy[2 * j + 1]) for j in range(self.n))

    def as_array(self) -> np.ndarray:
        return np.array(self.xy + (self.t,), dtype=float)


def im_pairing(a_xy: np.ndarray, b_xy: np.ndarray) -> np.ndarray:
    """Im(sum_j a_j conj(b_j)) for interleaved coordinates on the last axis."""
    return np.sum(a_xy[..., 1::2] * b_xy[..., 0::2] - a_xy[..., 0::2] * b_xy[..., 1::2], axis=-1)


def mul_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ContractError("dimension mismatch in group product")
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., :-1] = a[..., :-1] + b[..., :-1]
    out[..., -1] = a[..., -1] + b[..., -1] + 0.5 * im_pairing(a[..., :-1], b[..., :-1])
    return out


def koranyi_norm_arrays(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    z2 = np.sum(a[..., :-1] ** 2, axis=-1)
    return (z2 * z2 + a[..., -1] ** 2) ** 0.25


def in_translated_box_arrays(center: np.ndarray, rho, points: np.ndarray) -> np.ndarray:
    """Membership of ``points`` in center o B_rho (closed), broadcasting over
    leading axes of all three arguments."""
    center = np.asarray(center, dtype=float)
    points = np.asarray(points, dtype=float)
    rho = np.asarray(rho, dtype=float)
    dz = points[..., :-1] - center[..., :-1]
    shear = 0.5 * im_pairing(center[..., :-1], points[..., :-1])
    height = points[..., -1] - center[..., -1] - shear
    return (np.sum(dz * dz, axis=-1) <= rho * rho) & (np.abs(height) <= rho * rho)


def _same_dimension(a: HPoint, b: HPoint) -> None:
    if a.n != b.n:
        raise ContractError(f"dimension mismatch: n={a.n} vs n={b.n}")


def group_mul(a: HPoint, b: HPoint) -> HPoint:
    _same_dimension(a, b)
    return HPoint.from_array(mul_arrays(a.as_array(), b.as_array()))


def group_inv(a: HPoint) -> HPoint:
    return HPoint(tuple(-v for v in a.xy), -a.t)


def koranyi_norm(a: HPoint) -> float:
    return float(koranyi_norm_arrays(a.as_array()))


def dilate(rho: float, a: HPoint) -> HPoint:
    if rho <= 0:
        raise ContractError(f"dilation factor must be positive, got {rho}")
    return HPoint(tuple(rho * v for v in a.xy), rho * rho * a.t)


def in_box(rho: float, p: HPoint) -> bool:
    if rho <= 0:
        raise ContractError(f"box radius must be positive, got {rho}")
    return bool(in_translated_box_arrays(np.zeros(2 * p.n + 1), rho, p.as_array()))


def in_translated_box(center: HPoint, rho: float, p: HPoint) -> bool:
    _same_dimension(center, p)
    if rho <= 0:
        raise ContractError(f"box radius must be positive, got {rho}")
    return bool(in_translated_box_arrays(center.as_array(), rho, p.as_array()))


def box_volume(rho: float, ctx: GroupContext) -> float:
    if rho <= 0:
        raise ContractError(f"box radius must be positive, got {rho}")
    return rho**ctx.Q * ctx.unit_box_volume
