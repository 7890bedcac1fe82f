"""
Independent reference computations: adaptive quadrature for the hat integrals
and a point-matching solver for whole junctions.

Nothing here calls the closed-form or per-element integrals of ``basis``;
integrands are evaluated pointwise from the raw field kernels.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from Waveguide_Post_Solver.basis import ArcGeometry, Phase, SegmentGrid, hat_eval
from Waveguide_Post_Solver.data_model import ScatteringMatrix
from Waveguide_Post_Solver.errors import InvalidInput, NoConvergence
from Waveguide_Post_Solver.junction import (
    DEFAULT_RCOND,
    Discretization,
    PostJunction,
    active_rows,
    least_squares_smatrix,
)
from Waveguide_Post_Solver.modes import ModeParams, mode_table

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

ORACLE_ORDER = 10
MAX_DEPTH = 40


@lru_cache(maxsize=8)
def _rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return roots_legendre(order)


def _gauss(integrand: Integrand, lo: float, hi: float, order: int) -> complex:
    x, w = _rule(order)
    half = 0.5 * (hi - lo)
    values = np.asarray(integrand(0.5 * (hi + lo) + half * x), dtype=complex)
    return complex(half * np.dot(w, values))


def _gauss_abs(integrand: Integrand, lo: float, hi: float, order: int) -> float:
    x, w = _rule(order)
    half = 0.5 * (hi - lo)
    values = np.abs(np.asarray(integrand(0.5 * (hi + lo) + half * x)))
    return float(half * np.dot(w, values))


def quadrature_oracle(
    integrand: Integrand,
    interval: Tuple[float, float],
    tol: float = 1e-13,
    breakpoints: Sequence[float] = (),
    max_depth: int = MAX_DEPTH,
    order: int = ORACLE_ORDER,
    noise: float = 0.0,
) -> complex:
    """
    Adaptive Gauss-Legendre integration by bisection.

    A panel is accepted when its ``order``-point estimate agrees with the sum
    over its two halves to within ``tol`` times the integral of |integrand|,
    shared out by panel width. Kinks of the integrand belong in ``breakpoints``.
    Panels are also accepted once the disagreement is within rounding: a few
    ulp of the panel's |integrand| integral plus ``noise`` times its width.

    Args:
        integrand: Vectorized callable, real or complex valued
        interval: Integration limits ``(lo, hi)``
        tol: Relative tolerance, at least 1e-14
        breakpoints: Interior points where the integrand is not smooth
        max_depth: Bisection limit per panel
        order: Points per Gauss-Legendre panel
        noise: Absolute error of one integrand evaluation, usually eps times
            the size of the kernel's argument

    Raises:
        NoConvergence: If a panel needs more than ``max_depth`` bisections.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not tol >= 1e-14:
        raise InvalidInput(f"tolerance must be >= 1e-14, got {tol}", "tol")
    if not lo < hi:
        raise InvalidInput(f"empty interval ({lo}, {hi})", "interval")
    if not noise >= 0.0:
        raise InvalidInput(f"noise must be >= 0, got {noise}", "noise")

    edges = [lo] + sorted(b for b in breakpoints if lo < b < hi) + [hi]
    width = hi - lo
    scale = sum(_gauss_abs(integrand, a, b, order) for a, b in zip(edges, edges[1:]))
    if scale == 0.0:
        return 0j

    eps = np.finfo(float).eps
    total = 0j
    stack: List[Tuple[float, float, complex, int]] = [
        (a, b, _gauss(integrand, a, b, order), 0) for a, b in zip(edges, edges[1:])
    ]
    while stack:
        a, b, whole, depth = stack.pop()
        mid = 0.5 * (a + b)
        left = _gauss(integrand, a, mid, order)
        right = _gauss(integrand, mid, b, order)
        allowed = tol * scale * (b - a) / width
        roundoff = 16 * eps * _gauss_abs(integrand, a, b, order) + noise * (b - a)
        if abs(left + right - whole) <= max(allowed, roundoff):
            total += left + right
            continue
        if depth >= max_depth:
            raise NoConvergence(
                f"no convergence on [{a:.6g}, {b:.6g}] after {depth} bisections",
                depth=depth,
            )
        stack.append((a, mid, left, depth + 1))
        stack.append((mid, b, right, depth + 1))
    return total


def oracle_sine_hat(
    grid: SegmentGrid,
    k: int,
    p: float,
    phase: Phase = "direct",
    a: Optional[float] = None,
    tol: float = 1e-14,
) -> float:
    """Integral of sin(p x) alpha_k(x) (or sin(p (a - x)) alpha_k(x)) by adaptive quadrature."""
    grid.check_index(k)
    if phase == "mirrored":
        if a is None:
            raise InvalidInput("the mirrored kernel needs the guide width", "a")
        shift, sign = a, -1.0
    else:
        shift, sign = 0.0, 1.0

    def integrand(x: np.ndarray) -> np.ndarray:
        return np.sin(p * (shift + sign * x)) * hat_eval(grid, k, x)

    lo = grid.node(max(k - 1, 0))
    hi = grid.node(min(k + 1, grid.K))
    # sin loses eps * |argument| near its zeros
    noise = 4 * np.finfo(float).eps * (abs(p) * (abs(shift) + abs(lo) + abs(hi)) + 1.0)
    return quadrature_oracle(integrand, (lo, hi), tol, [grid.node(k)], noise=noise).real


def oracle_cylinder_wall(
    grid: SegmentGrid,
    k: int,
    mode: ModeParams,
    geometry: ArcGeometry,
    sign: int,
    tol: float = 1e-13,
) -> complex:
    """Integral of p G e^{sign gamma z(phi)} sin(p x(phi)) alpha_k(phi) by adaptive quadrature."""
    grid.check_index(k)

    def integrand(phi: np.ndarray) -> np.ndarray:
        kernel = np.exp(sign * mode.gamma * geometry.z(phi)) * np.sin(
            mode.p * geometry.x(phi)
        )
        return mode.p * mode.G * kernel * hat_eval(grid, k, phi)

    lo = grid.node(max(k - 1, 0))
    hi = grid.node(min(k + 1, grid.K))
    phi = np.linspace(lo, hi, 65)
    peak = float(np.max(np.abs(mode.p * mode.G * np.exp(sign * mode.gamma * geometry.z(phi)))))
    argument = abs(mode.p) * float(np.max(np.abs(geometry.x(phi)))) + abs(mode.gamma) * float(
        np.max(np.abs(geometry.z(phi)))
    )
    noise = 4 * np.finfo(float).eps * peak * (argument + 1.0)
    return quadrature_oracle(integrand, (lo, hi), tol, [grid.node(k)], noise=noise)


def _midpoints(t0: float, t1: float, n: int) -> np.ndarray:
    return t0 + (np.arange(n) + 0.5) * (t1 - t0) / n


def default_collocation_points(junction: PostJunction, M: int) -> int:
    """Points per segment giving twice the projection solver's equation count."""
    plan = active_rows(junction, Discretization.default(junction, M), M)
    return math.ceil(2 * plan.rows / 6)


@dataclass(frozen=True)
class CollocationSolver:
    """
    Point-matching junction solver.

    Continuity of E_y and H_x is enforced at ``n_points`` element midpoints on
    each straight segment, and E_y = 0 at ``n_points`` midpoints on each arc.
    """

    junction: PostJunction
    n_points: int

    def __post_init__(self) -> None:
        if isinstance(self.n_points, bool) or int(self.n_points) != self.n_points:
            raise InvalidInput(f"n_points must be an integer, got {self.n_points}", "n_points")
        if self.n_points < 1:
            raise InvalidInput(f"n_points must be >= 1, got {self.n_points}", "n_points")

    @property
    def total_points(self) -> int:
        return 4 * self.n_points

    def system(self, M: int, f: float) -> Tuple[np.ndarray, np.ndarray]:
        """Pointwise system (L, R) with the same column order as the projection system."""
        if self.total_points < 2 * M:
            raise InvalidInput(
                f"{self.total_points} match points cannot determine {2 * M} unknowns",
                "n_points",
            )
        junction, n = self.junction, self.n_points
        a, h, radius = junction.wg.a, junction.h, junction.R
        p, gamma, G, Z = mode_table(junction.wg, M, f)
        pG = p * G
        eta = junction.wg.wave_impedance

        blocks_L: List[np.ndarray] = []
        blocks_R: List[np.ndarray] = []
        for x0, x1 in ((0.0, h - radius), (h + radius, a)):
            x = _midpoints(x0, x1, n)[:, None]
            e_one = pG * np.sin(p * x)
            e_two = pG * np.sin(p * (a - x))
            h_one = -eta * e_one / Z
            h_two = -eta * e_two / Z
            blocks_L += [np.hstack([-h_one, -h_two]), np.hstack([e_one, -e_two])]
            blocks_R += [np.hstack([-h_one, -h_two]), np.hstack([-e_one, e_two])]

        zero = np.zeros((n, M), dtype=complex)
        for geometry, phi0, on_left in (
            (junction.arc_one(), 0.5 * math.pi, True),
            (junction.arc_two(), -0.5 * math.pi, False),
        ):
            phi = _midpoints(phi0, phi0 + math.pi, n)[:, None]
            wall = pG * np.sin(p * geometry.x(phi))
            z = geometry.z(phi)
            outgoing = wall * np.exp(gamma * z)
            incoming = wall * np.exp(-gamma * z)
            if on_left:
                blocks_L.append(np.hstack([outgoing, zero]))
                blocks_R.append(np.hstack([-incoming, zero]))
            else:
                blocks_L.append(np.hstack([zero, outgoing]))
                blocks_R.append(np.hstack([zero, -incoming]))

        return np.vstack(blocks_L), np.vstack(blocks_R)

    def smatrix(self, M: int, f: float, rcond: float = DEFAULT_RCOND) -> ScatteringMatrix:
        L, R = self.system(M, f)
        n_prop = min(self.junction.wg.propagating_count(f), M)
        result = least_squares_smatrix(L, R, M, rcond, n_prop)
        logger.debug(
            "Collocation solve at %.9g Hz: %d points, residual %.3e",
            f,
            self.total_points,
            result.residual,
        )
        return ScatteringMatrix(
            result.S,
            frequency=f,
            n_propagating=n_prop,
            frame="local",
            residual=result.residual,
        )


def collocation_smatrix(
    junction: PostJunction, M: int, n_points: Optional[int], f: float
) -> ScatteringMatrix:
    """Local-frame S-matrix by point matching; ``n_points=None`` picks the default count."""
    if n_points is None:
        n_points = default_collocation_points(junction, M)
    return CollocationSolver(junction, n_points).smatrix(M, f)
