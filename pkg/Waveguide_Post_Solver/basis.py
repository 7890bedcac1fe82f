"""
First-order hat functions on uniformly discretized boundary segments.

Straight segments are parameterized by x (meters), the half-cylinder arcs by the
angle phi (radians); the grids themselves are unit agnostic.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy.special import roots_legendre

from Waveguide_Post_Solver.errors import InvalidInput
from Waveguide_Post_Solver.modes import ModeParams

Phase = Literal["direct", "mirrored"]
ArrayLike = Union[float, np.ndarray]

DEFAULT_QUADRATURE_ORDER = 12


@dataclass(frozen=True)
class SegmentGrid:
    """Uniform grid t_k = t0 + k (tK - t0) / K, k = 0..K, on one boundary segment."""

    t0: float
    tK: float
    K: int
    include_first: bool = True
    include_last: bool = True

    def __post_init__(self) -> None:
        if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 1:
            raise InvalidInput(f"K must be an integer >= 1, got {self.K}", "K")
        if not self.t0 < self.tK:
            raise InvalidInput(
                f"segment start {self.t0} must precede its end {self.tK}", "t0"
            )

    @property
    def step(self) -> float:
        return (self.tK - self.t0) / self.K

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + np.arange(self.K + 1) * self.step

    @property
    def active_indices(self) -> Tuple[int, ...]:
        first = 0 if self.include_first else 1
        last = self.K if self.include_last else self.K - 1
        return tuple(range(first, last + 1))

    @property
    def count(self) -> int:
        return len(self.active_indices)

    def node(self, k: int) -> float:
        return self.t0 + k * self.step

    def mirrored(self, a: float) -> "SegmentGrid":
        """The grid reflected by t -> a - t; node k maps to node K - k."""
        return SegmentGrid(
            t0=a - self.tK,
            tK=a - self.t0,
            K=self.K,
            include_first=self.include_last,
            include_last=self.include_first,
        )

    def check_index(self, k: int) -> None:
        if isinstance(k, bool) or int(k) != k or not 0 <= k <= self.K:
            raise InvalidInput(f"hat index {k} outside 0..{self.K}", "k")


@dataclass(frozen=True)
class HatFunction:
    """The hat alpha_k of a grid; value 1 at node k, zero outside its support."""

    grid: SegmentGrid
    k: int

    def __post_init__(self) -> None:
        self.grid.check_index(self.k)

    @property
    def support(self) -> Tuple[float, float]:
        lo = self.grid.node(max(self.k - 1, 0))
        hi = self.grid.node(min(self.k + 1, self.grid.K))
        return lo, hi

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return hat_eval(self.grid, self.k, t)


def hat_eval(grid: SegmentGrid, k: int, t: ArrayLike) -> ArrayLike:
    """Value of alpha_k at ``t`` (scalar or array)."""
    grid.check_index(k)
    t_arr = np.asarray(t, dtype=float)
    tk = grid.node(k)
    step = grid.step

    value = 1.0 - np.abs(t_arr - tk) / step
    lo = tk - step if k > 0 else tk
    hi = tk + step if k < grid.K else tk
    value = np.where((t_arr >= lo) & (t_arr <= hi), value, 0.0)
    value = np.clip(value, 0.0, 1.0)

    if np.ndim(t) == 0:
        return float(value)
    return value


def _one_minus_cos(s: np.ndarray) -> np.ndarray:
    return 2.0 * np.sin(0.5 * s) ** 2


def _s_minus_sin(s: np.ndarray) -> np.ndarray:
    """s - sin(s) without cancellation for small s."""
    s2 = s * s
    series = (s * s2 / 6.0) * (
        1.0
        - s2
        / 20.0
        * (1.0 - s2 / 42.0 * (1.0 - s2 / 72.0 * (1.0 - s2 / 110.0 * (1.0 - s2 / 156.0))))
    )
    return np.where(np.abs(s) < 0.5, series, s - np.sin(s))


def sine_hat_matrix(
    grid: SegmentGrid,
    p: ArrayLike,
    phase: Phase = "direct",
    a: Optional[float] = None,
) -> np.ndarray:
    """
    Closed-form integrals of sin(p x) alpha_k(x) for every node k and wavenumber p.

    Args:
        grid: Uniform grid in x
        p: Wavenumbers in rad/m (scalar or 1-D array)
        phase: ``"direct"`` for sin(p x), ``"mirrored"`` for sin(p (a - x))
        a: Guide width, required for the mirrored kernel

    Returns:
        Real array of shape (K + 1, len(p)); row k holds the integrals of alpha_k.
    """
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr <= 0):
        raise InvalidInput("wavenumbers must be positive", "p")

    if phase == "mirrored":
        if a is None:
            raise InvalidInput("the mirrored kernel needs the guide width", "a")
        # alpha_k(x) on the grid equals alpha_{K-k}(a - x) on the reflected grid
        return sine_hat_matrix(grid.mirrored(a), p_arr, "direct")[::-1]
    if phase != "direct":
        raise InvalidInput(f"unknown kernel phase {phase!r}", "phase")

    step = grid.step
    theta = np.outer(grid.nodes, p_arr)
    s = p_arr * step
    scale = 1.0 / (p_arr * p_arr * step)
    omc = _one_minus_cos(s)
    sms = _s_minus_sin(s)

    result = np.empty_like(theta)
    result[1:-1] = 2.0 * np.sin(theta[1:-1]) * omc * scale
    # one-sided hats at the two segment ends
    result[0] = (np.cos(theta[0]) * sms + np.sin(theta[0]) * omc) * scale
    result[-1] = (-np.cos(theta[-1]) * sms + np.sin(theta[-1]) * omc) * scale
    return result


def sine_hat_integral(
    grid: SegmentGrid, k: int, p: float, phase: Phase = "direct", a: Optional[float] = None
) -> float:
    """Integral of sin(p x) alpha_k(x), or of sin(p (a - x)) alpha_k(x) when mirrored."""
    grid.check_index(k)
    return float(sine_hat_matrix(grid, p, phase, a)[k, 0])


@dataclass(frozen=True)
class ArcGeometry:
    """Half-cylinder parameterization x = xc + x_sign R sin(phi), z = z_sign R cos(phi)."""

    x_center: float
    radius: float
    x_sign: int = 1
    z_sign: int = 1

    def x(self, phi: ArrayLike) -> ArrayLike:
        return self.x_center + self.x_sign * self.radius * np.sin(phi)

    def z(self, phi: ArrayLike) -> ArrayLike:
        return self.z_sign * self.radius * np.cos(phi)

    @classmethod
    def port_one(cls, h: float, radius: float) -> "ArcGeometry":
        """Port I side, phi in [pi/2, 3pi/2]: x = h + R sin(phi), z = R cos(phi)."""
        return cls(x_center=h, radius=radius, x_sign=1, z_sign=1)

    @classmethod
    def port_two(cls, a: float, h: float, radius: float) -> "ArcGeometry":
        """Port II side, phi in [-pi/2, pi/2]: x' = a - h - R sin(phi), z' = -R cos(phi)."""
        return cls(x_center=a - h, radius=radius, x_sign=-1, z_sign=-1)


@lru_cache(maxsize=32)
def _legendre_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(order)
    return nodes, weights


def cylinder_wall_matrix(
    grid: SegmentGrid,
    p: np.ndarray,
    G: np.ndarray,
    gamma: np.ndarray,
    geometry: ArcGeometry,
    sign: int,
    order: int = DEFAULT_QUADRATURE_ORDER,
) -> np.ndarray:
    """
    Integrals of p G e^{sign gamma z(phi)} sin(p x(phi)) alpha_k(phi) over an arc.

    Each element [phi_j, phi_{j+1}] gets its own Gauss-Legendre rule of ``order`` points.

    Returns:
        Complex array of shape (K + 1, M).
    """
    if sign not in (1, -1):
        raise InvalidInput(f"sign must be +1 or -1, got {sign}", "sign")
    if order < 1:
        raise InvalidInput(f"quadrature order must be >= 1, got {order}", "order")

    p = np.atleast_1d(np.asarray(p, dtype=float))
    G = np.atleast_1d(np.asarray(G, dtype=complex))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=complex))

    xi, w = _legendre_rule(order)
    half = 0.5 * grid.step
    mids = grid.nodes[:-1] + half
    phi = mids[:, None] + half * xi[None, :]  # (K, order)

    x = geometry.x(phi)[..., None]
    z = geometry.z(phi)[..., None]
    kernel = (p * G) * np.exp(sign * gamma * z) * np.sin(p * x)  # (K, order, M)

    falling = np.einsum("q,eqm->em", half * w * 0.5 * (1.0 - xi), kernel)
    rising = np.einsum("q,eqm->em", half * w * 0.5 * (1.0 + xi), kernel)

    result = np.zeros((grid.K + 1, p.size), dtype=complex)
    result[:-1] += falling
    result[1:] += rising
    return result


def cylinder_wall_integral(
    grid: SegmentGrid,
    k: int,
    mode: ModeParams,
    geometry: ArcGeometry,
    sign: int,
    order: int = DEFAULT_QUADRATURE_ORDER,
) -> complex:
    """Single hat, single mode view of :func:`cylinder_wall_matrix`."""
    grid.check_index(k)
    block = cylinder_wall_matrix(
        grid,
        np.array([mode.p]),
        np.array([mode.G]),
        np.array([mode.gamma]),
        geometry,
        sign,
        order,
    )
    return complex(block[k, 0])
