"""
Single-post junction: projection of the continuity conditions onto local hat
functions and the least-squares solve for the junction scattering matrix.

Port I occupies z <= 0 and is bounded by the half-cylinder x = h + R sin(phi),
z = R cos(phi), phi in [pi/2, 3pi/2]. Port II uses the rotated frame
x' = a - x, z' = -z. Both reference planes pass through the post center.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from Waveguide_Post_Solver.basis import (
    DEFAULT_QUADRATURE_ORDER,
    ArcGeometry,
    SegmentGrid,
    cylinder_wall_matrix,
    sine_hat_matrix,
)
from Waveguide_Post_Solver.data_model import ScatteringMatrix
from Waveguide_Post_Solver.errors import InvalidInput, RankDeficient, Underdetermined
from Waveguide_Post_Solver.modes import Waveguide, mode_table

logger = logging.getLogger(__name__)

DEFAULT_K_FACTOR = 1.6
DEFAULT_K_MIN = 4
DEFAULT_RCOND = 1e-12


@dataclass(frozen=True)
class PostJunction:
    """A conducting post of radius ``R`` spanning the full guide height, centered ``h`` from the x = 0 wall."""

    wg: Waveguide
    h: float
    R: float

    def __post_init__(self) -> None:
        if not (self.R > 0 and math.isfinite(self.R)):
            raise InvalidInput(f"post radius must be positive, got {self.R}", "R")
        if not self.R < self.h:
            raise InvalidInput(
                f"post (h={self.h}, R={self.R}) touches or crosses the x = 0 wall", "h"
            )
        if not self.R < self.wg.a - self.h:
            raise InvalidInput(
                f"post (h={self.h}, R={self.R}) touches or crosses the x = a wall", "h"
            )

    @classmethod
    def from_axis_offset(cls, wg: Waveguide, d: float, R: float) -> "PostJunction":
        """Post offset ``d`` from the guide axis, i.e. h = a/2 + d."""
        return cls(wg=wg, h=0.5 * wg.a + d, R=R)

    @property
    def length_down(self) -> float:
        """Length of the straight segment between the x = 0 wall and the post."""
        return self.h - self.R

    @property
    def length_up(self) -> float:
        return self.wg.a - self.h - self.R

    @property
    def arc_length(self) -> float:
        return math.pi * self.R

    def mirrored(self) -> "PostJunction":
        """The same post reflected about the guide axis (h -> a - h)."""
        return PostJunction(wg=self.wg, h=self.wg.a - self.h, R=self.R)

    def arc_one(self) -> ArcGeometry:
        return ArcGeometry.port_one(self.h, self.R)

    def arc_two(self) -> ArcGeometry:
        return ArcGeometry.port_two(self.wg.a, self.h, self.R)


@dataclass(frozen=True)
class Discretization:
    """Subinterval counts on L_d, L_u and on each half-cylinder arc."""

    K_d: int
    K_u: int
    K_c: int

    def __post_init__(self) -> None:
        for name in ("K_d", "K_u", "K_c"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise InvalidInput(f"{name} must be an integer >= 1, got {value}", name)

    @property
    def total(self) -> int:
        """K_d + K_u + K_c + 1; the mode count must stay below it."""
        return self.K_d + self.K_u + self.K_c + 1

    def check_definite(self, M: int) -> None:
        if not M < self.total:
            raise Underdetermined(
                f"M={M} violates M < K_d + K_u + K_c + 1 = {self.total}",
                rows=2 * self.total,
                unknowns=2 * M,
            )

    @classmethod
    def default(
        cls,
        junction: PostJunction,
        M: int,
        factor: float = DEFAULT_K_FACTOR,
        minimum: int = DEFAULT_K_MIN,
    ) -> "Discretization":
        """
        Size the grids for M modes.

        K_d, K_u and K_c share ceil(factor * M) - 1 subintervals in proportion to the
        lengths of L_d, L_u and one arc. Each count is rounded up on its own so that
        mirrored posts (h -> a - h) get exchanged K_d and K_u.
        """
        if M < 1:
            raise InvalidInput(f"mode count must be >= 1, got {M}", "M")
        if factor <= 1:
            raise InvalidInput(f"K factor must exceed 1, got {factor}", "factor")
        if minimum < 1:
            raise InvalidInput(f"minimum K must be >= 1, got {minimum}", "minimum")

        budget = math.ceil(factor * M) - 1
        lengths = (junction.length_down, junction.length_up, junction.arc_length)
        total_length = sum(lengths)
        K_d, K_u, K_c = (
            max(minimum, math.ceil(budget * length / total_length)) for length in lengths
        )
        disc = cls(K_d=K_d, K_u=K_u, K_c=K_c)
        disc.check_definite(M)
        return disc


class JunctionGrids(NamedTuple):
    down: SegmentGrid
    up: SegmentGrid
    arc_one: SegmentGrid
    arc_two: SegmentGrid


def junction_grids(junction: PostJunction, disc: Discretization) -> JunctionGrids:
    """Hat grids on L_d, L_u (in x) and on both arcs (in phi)."""
    a, h, R = junction.wg.a, junction.h, junction.R
    return JunctionGrids(
        down=SegmentGrid(0.0, h - R, disc.K_d, include_first=False),
        up=SegmentGrid(h + R, a, disc.K_u, include_last=False),
        arc_one=SegmentGrid(0.5 * math.pi, 1.5 * math.pi, disc.K_c),
        arc_two=SegmentGrid(-0.5 * math.pi, 0.5 * math.pi, disc.K_c),
    )


@dataclass(frozen=True)
class RowPlan:
    """Hat indices that contribute equations, per segment, for an M-mode solve."""

    down: Tuple[int, ...]
    up: Tuple[int, ...]
    arc: Tuple[int, ...]
    M: int

    @property
    def rows(self) -> int:
        return 2 * len(self.down) + 2 * len(self.up) + 2 * len(self.arc)

    @property
    def unknowns(self) -> int:
        return 2 * self.M

    @property
    def margin(self) -> int:
        return self.rows - self.unknowns


def active_rows(junction: PostJunction, disc: Discretization, M: int) -> RowPlan:
    """
    Enumerate the equations of the projection system.

    L_d uses k = 1..K_d (the hat at the x = 0 wall is dropped), L_u uses
    k = 0..K_u - 1 (the hat at x = a is dropped) and each arc uses k = 0..K_c.
    Each index gives one E and one H equation on straight segments, and one
    E equation on each of the two arcs.

    Raises:
        Underdetermined: If M >= K_d + K_u + K_c + 1.
    """
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise InvalidInput(f"mode count must be an integer >= 1, got {M}", "M")
    disc.check_definite(M)
    grids = junction_grids(junction, disc)
    return RowPlan(
        down=grids.down.active_indices,
        up=grids.up.active_indices,
        arc=grids.arc_one.active_indices,
        M=int(M),
    )


def _straight_blocks(
    grid: SegmentGrid,
    a: float,
    p: np.ndarray,
    G: np.ndarray,
    Z: np.ndarray,
    eta: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    (H^I, H^II, E^I, E^II) on one straight segment, active rows only.

    H rows are multiplied by the medium impedance ``eta`` so that both
    continuity conditions carry the same units in the least-squares fit.
    """
    rows = list(grid.active_indices)
    direct = sine_hat_matrix(grid, p)[rows]
    mirrored = sine_hat_matrix(grid, p, "mirrored", a)[rows]
    e_scale = (p * G)[None, :]
    h_scale = -(eta * p * G / Z)[None, :]
    return h_scale * direct, h_scale * mirrored, e_scale * direct, e_scale * mirrored


def assemble(
    junction: PostJunction,
    disc: Discretization,
    M: int,
    f: float,
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build the projection system L b = R a of one junction.

    Columns hold port I amplitudes (m = 1..M) followed by port II amplitudes.
    Row blocks, top to bottom: H and E on L_d, H and E on L_u, E on the port I
    arc, E on the port II arc. H rows are scaled by the medium impedance.

    Returns:
        ``(L, R)``, both complex arrays of shape (rows, 2M).

    Raises:
        Underdetermined: If the discretization is too coarse for M modes.
        CutoffSingular: If a mode m <= M is at cutoff at ``f``.
    """
    plan = active_rows(junction, disc, M)
    wg = junction.wg
    p, gamma, G, Z = mode_table(wg, M, f)
    grids = junction_grids(junction, disc)

    L = np.zeros((plan.rows, 2 * M), dtype=complex)
    R = np.zeros_like(L)
    left, right = slice(0, M), slice(M, 2 * M)

    row = 0
    for grid in (grids.down, grids.up):
        H1, H2, E1, E2 = _straight_blocks(grid, wg.a, p, G, Z, wg.wave_impedance)
        n = grid.count

        # tangential H is continuous in the common frame, and H_x' = -H_x
        h_rows = slice(row, row + n)
        L[h_rows, left], L[h_rows, right] = -H1, -H2
        R[h_rows, left], R[h_rows, right] = -H1, -H2

        e_rows = slice(row + n, row + 2 * n)
        L[e_rows, left], L[e_rows, right] = E1, -E2
        R[e_rows, left], R[e_rows, right] = -E1, E2
        row += 2 * n

    for grid, geometry, cols in (
        (grids.arc_one, junction.arc_one(), left),
        (grids.arc_two, junction.arc_two(), right),
    ):
        n = grid.count
        c_rows = slice(row, row + n)
        # outgoing waves grow as e^{+gamma z} toward the junction, incoming as e^{-gamma z}
        L[c_rows, cols] = cylinder_wall_matrix(
            grid, p, G, gamma, geometry, +1, quadrature_order
        )
        R[c_rows, cols] = -cylinder_wall_matrix(
            grid, p, G, gamma, geometry, -1, quadrature_order
        )
        row += n

    return L, R


class LeastSquaresResult(NamedTuple):
    S: np.ndarray
    rank: int
    residual: float


def least_squares_smatrix(
    L: np.ndarray,
    R: np.ndarray,
    M: int,
    rcond: float = DEFAULT_RCOND,
    n_propagating: Optional[int] = None,
) -> LeastSquaresResult:
    """
    Solve min ||L X - R|| column by column with a pivoted QR factorization.

    Columns of L are scaled to unit norm first; the rank is then judged on the
    equilibrated matrix.

    The reported residual is the largest relative column residual
    ||L x_j - r_j|| / ||r_j|| over the propagating modes of both ports, or
    over every column when ``n_propagating`` is None or 0.

    Raises:
        Underdetermined: If L has fewer rows than 2M.
        RankDeficient: If the numerical rank is below 2M.
    """
    L = np.asarray(L, dtype=complex)
    R = np.asarray(R, dtype=complex)
    if L.shape[1] != 2 * M or R.shape != L.shape:
        raise InvalidInput(
            f"expected L and R of shape (rows, {2 * M}), got {L.shape} and {R.shape}",
            "L",
        )
    if L.shape[0] < 2 * M:
        raise Underdetermined(
            f"{L.shape[0]} equations for {2 * M} unknowns", L.shape[0], 2 * M
        )

    col_norms = np.linalg.norm(L, axis=0)
    col_norms[col_norms == 0] = 1.0
    X, _, rank, _ = linalg.lstsq(
        L / col_norms, R, cond=rcond, lapack_driver="gelsy", check_finite=True
    )
    if rank < 2 * M:
        raise RankDeficient(
            f"least-squares rank {rank} below the {2 * M} unknowns; "
            "refine the discretization or reduce M",
            rank=int(rank),
            required=2 * M,
        )
    X = X / col_norms[:, None]

    residual = column_residual(L, X, R, M, n_propagating)
    return LeastSquaresResult(S=X, rank=int(rank), residual=float(residual))


def column_residual(
    L: np.ndarray,
    X: np.ndarray,
    R: np.ndarray,
    M: int,
    n_propagating: Optional[int] = None,
) -> float:
    """Largest relative residual over the propagating columns of L X = R."""
    if n_propagating:
        n = min(int(n_propagating), M)
        columns = np.r_[0:n, M : M + n]
    else:
        columns = np.arange(2 * M)
    r_norms = np.linalg.norm(R[:, columns], axis=0)
    misfit = np.linalg.norm(L @ X[:, columns] - R[:, columns], axis=0)
    keep = r_norms > 0
    if not np.any(keep):
        return 0.0
    return float(np.max(misfit[keep] / r_norms[keep]))


def row_norm_spread(L: np.ndarray) -> float:
    """Ratio of the largest to the smallest nonzero row norm of ``L``."""
    norms = np.linalg.norm(np.asarray(L), axis=1)
    norms = norms[norms > 0]
    if norms.size == 0:
        return 1.0
    return float(norms.max() / norms.min())


def solve_junction(
    junction: PostJunction,
    disc: Discretization,
    M: int,
    f: float,
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
    rcond: float = DEFAULT_RCOND,
) -> ScatteringMatrix:
    """
    Scattering matrix of one junction, in the local port frame.

    Args:
        junction: Post geometry
        disc: Hat grid sizes
        M: Modes per port
        f: Frequency in Hz
        quadrature_order: Gauss-Legendre points per arc element
        rcond: Relative cutoff for the rank decision

    Returns:
        ScatteringMatrix with ``frame="local"`` and the relative residual attached.
    """
    L, R = assemble(junction, disc, M, f, quadrature_order)
    n_prop = min(junction.wg.propagating_count(f), M)
    result = least_squares_smatrix(L, R, M, rcond, n_prop)

    logger.debug(
        "Solved junction h=%.6g R=%.6g at %.9g Hz: %dx%d, rank %d, residual %.3e",
        junction.h,
        junction.R,
        f,
        L.shape[0],
        L.shape[1],
        result.rank,
        result.residual,
        extra={"row_norm_spread": row_norm_spread(L)},
    )
    return ScatteringMatrix(
        result.S,
        frequency=f,
        n_propagating=n_prop,
        frame="local",
        residual=result.residual,
    )

