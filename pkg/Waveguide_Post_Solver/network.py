"""
Cascading of post junctions and uniform guide sections, and frequency sweeps.

Every cascade is carried out in the global port frame, where both ports of a
section refer to the common x axis. Reference planes of a junction pass
through the post center, so the spacing between two post centers is exactly
the length of the uniform section joining them.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from rich.progress import track
from scipy import linalg
from scipy.signal import find_peaks

from Waveguide_Post_Solver.basis import DEFAULT_QUADRATURE_ORDER
from Waveguide_Post_Solver.data_model import ScatteringMatrix, SweepPoint, SweepTable
from Waveguide_Post_Solver.errors import (
    CutoffSingular,
    InvalidInput,
    SingularCascade,
    SolverError,
)
from Waveguide_Post_Solver.junction import (
    DEFAULT_K_FACTOR,
    DEFAULT_K_MIN,
    DEFAULT_RCOND,
    Discretization,
    PostJunction,
    solve_junction,
)
from Waveguide_Post_Solver.modes import Waveguide, mode_table

logger = logging.getLogger(__name__)

# Feedback operators above this condition number are treated as singular.
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True)
class JunctionElement:
    junction: PostJunction


@dataclass(frozen=True)
class UniformGuide:
    """Empty guide section of ``length`` meters."""

    length: float

    def __post_init__(self) -> None:
        if not (self.length >= 0 and math.isfinite(self.length)):
            raise InvalidInput(
                f"guide length must be >= 0, got {self.length}", "length"
            )


NetworkElement = Union[JunctionElement, UniformGuide]


@dataclass(frozen=True)
class Network:
    """Ordered chain of junctions and guide sections in one waveguide."""

    wg: Waveguide
    elements: Tuple[NetworkElement, ...]

    def __post_init__(self) -> None:
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            raise InvalidInput("a network needs at least one element", "elements")

        spacing: Optional[float] = None
        previous: Optional[PostJunction] = None
        previous_index = -1
        for index, element in enumerate(elements):
            if isinstance(element, UniformGuide):
                if spacing is not None:
                    spacing += element.length
                continue
            if not isinstance(element, JunctionElement):
                raise InvalidInput(
                    f"element {index} is neither a junction nor a guide section",
                    "elements",
                )
            junction = element.junction
            if junction.wg != self.wg:
                raise InvalidInput(
                    f"element {index} uses a different waveguide than the network",
                    "elements",
                )
            if previous is not None and spacing < previous.R + junction.R:
                raise InvalidInput(
                    f"elements {previous_index} and {index} overlap: center spacing "
                    f"{spacing:.6g} m < {previous.R + junction.R:.6g} m",
                    "elements",
                )
            previous, previous_index, spacing = junction, index, 0.0

    @classmethod
    def from_posts(
        cls,
        wg: Waveguide,
        posts: Sequence[PostJunction],
        spacings: Sequence[float],
    ) -> "Network":
        """Posts joined by uniform sections; ``spacings`` are center-to-center distances."""
        if len(spacings) != max(len(posts) - 1, 0):
            raise InvalidInput(
                f"{len(posts)} posts need {len(posts) - 1} spacings, got {len(spacings)}",
                "spacings",
            )
        elements: List[NetworkElement] = []
        for index, post in enumerate(posts):
            if index:
                elements.append(UniformGuide(spacings[index - 1]))
            elements.append(JunctionElement(post))
        return cls(wg, tuple(elements))

    @property
    def junctions(self) -> List[PostJunction]:
        return [e.junction for e in self.elements if isinstance(e, JunctionElement)]

    def reversed_mirrored(self) -> "Network":
        """The structure seen from its far end: element order reversed, offsets h -> a - h."""
        elements: List[NetworkElement] = []
        for element in reversed(self.elements):
            if isinstance(element, JunctionElement):
                elements.append(JunctionElement(element.junction.mirrored()))
            else:
                elements.append(element)
        return Network(self.wg, tuple(elements))


@dataclass(frozen=True)
class DiscretizationPolicy:
    """How each junction's hat grids are sized: a fixed Discretization or the default rule."""

    factor: float = DEFAULT_K_FACTOR
    minimum: int = DEFAULT_K_MIN
    fixed: Optional[Discretization] = None

    def for_junction(self, junction: PostJunction, M: int) -> Discretization:
        if self.fixed is not None:
            self.fixed.check_definite(M)
            return self.fixed
        return Discretization.default(junction, M, self.factor, self.minimum)


def uniform_guide_smatrix(
    wg: Waveguide, length: float, M: int, f: float
) -> ScatteringMatrix:
    """Global-frame S-matrix of an empty section: no reflection, S21 = S12 = diag(e^{-gamma l})."""
    if not (length >= 0 and math.isfinite(length)):
        raise InvalidInput(f"guide length must be >= 0, got {length}", "length")
    _, gamma, _, _ = mode_table(wg, M, f)
    through = np.diag(np.exp(-gamma * length))
    zero = np.zeros((M, M), dtype=complex)
    return ScatteringMatrix.from_blocks(
        zero,
        through,
        through,
        zero,
        frequency=f,
        n_propagating=min(wg.propagating_count(f), M),
        frame="global",
    )


def cascade(left: ScatteringMatrix, right: ScatteringMatrix) -> ScatteringMatrix:
    """
    Redheffer star product of two sections, port II of ``left`` joined to port I of ``right``.

    Both operands are moved to the global frame first. The interior feedback
    operator I - A22 B11 is balanced by diagonal similarity before it is solved.

    Raises:
        InvalidInput: If the mode counts differ.
        SingularCascade: If the feedback operator is numerically singular.
    """
    if left.M != right.M:
        raise InvalidInput(
            f"cannot cascade sections with {left.M} and {right.M} modes", "M"
        )
    A, B = left.to_global(), right.to_global()
    M = A.M
    A11, A12, A21, A22 = A.blocks()
    B11, B12, B21, B22 = B.blocks()

    feedback = np.eye(M) - A22 @ B11
    balanced, (scale, _) = linalg.matrix_balance(feedback, permute=False, separate=True)
    condition = np.linalg.cond(balanced)
    if not np.isfinite(condition) or condition > SINGULAR_CONDITION:
        raise SingularCascade(
            f"interior feedback operator is singular (condition {condition:.3e})",
            condition=float(condition),
        )

    # interior right-going waves for unit excitation at either outer port
    rhs = np.hstack([A21, A22 @ B12])
    interior = scale[:, None] * linalg.solve(balanced, rhs / scale[:, None])
    from_one, from_two = interior[:, :M], interior[:, M:]

    S11 = A11 + A12 @ (B11 @ from_one)
    S12 = A12 @ B12 + A12 @ (B11 @ from_two)
    S21 = B21 @ from_one
    S22 = B22 + B21 @ from_two

    residuals = [r for r in (A.residual, B.residual) if r is not None]
    return ScatteringMatrix.from_blocks(
        S11,
        S12,
        S21,
        S22,
        frequency=A.frequency if A.frequency is not None else B.frequency,
        n_propagating=max(A.n_propagating, B.n_propagating),
        frame="global",
        residual=max(residuals) if residuals else None,
    )


def solve_network(
    net: Network,
    M: int,
    policy: Optional[DiscretizationPolicy],
    f: float,
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
    rcond: float = DEFAULT_RCOND,
) -> ScatteringMatrix:
    """
    Global-frame S-matrix of a whole network at one frequency.

    Sections are folded left to right with :func:`cascade`. Identical junctions
    are solved once per call.
    """
    policy = policy or DiscretizationPolicy()
    solved: Dict[PostJunction, ScatteringMatrix] = {}
    result: Optional[ScatteringMatrix] = None

    for element in net.elements:
        if isinstance(element, UniformGuide):
            section = uniform_guide_smatrix(net.wg, element.length, M, f)
        else:
            junction = element.junction
            if junction not in solved:
                disc = policy.for_junction(junction, M)
                solved[junction] = solve_junction(
                    junction, disc, M, f, quadrature_order, rcond
                ).to_global()
            section = solved[junction]
        result = section if result is None else cascade(result, section)

    return result.to_global()


@dataclass(frozen=True)
class SweepSettings:
    """Numerical settings shared by every point of a sweep."""

    M: int = 60
    policy: DiscretizationPolicy = field(default_factory=DiscretizationPolicy)
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER
    rcond: float = DEFAULT_RCOND


def sweep_frequencies(f_start: float, f_stop: float, n_points: int) -> np.ndarray:
    if isinstance(n_points, bool) or int(n_points) != n_points or n_points < 1:
        raise InvalidInput(f"n_points must be an integer >= 1, got {n_points}", "n_points")
    if not 0 < f_start < f_stop:
        raise InvalidInput(
            f"sweep needs 0 < f_start < f_stop, got {f_start} and {f_stop}", "f_start"
        )
    return np.linspace(f_start, f_stop, int(n_points))


def _sweep_point(net: Network, settings: SweepSettings, f: float) -> SweepPoint:
    try:
        smatrix = solve_network(
            net, settings.M, settings.policy, f, settings.quadrature_order, settings.rcond
        )
    except CutoffSingular as e:
        logger.warning("Skipping %.9g Hz: %s", f, e)
        return SweepPoint(frequency=f, status="cutoff", message=str(e))
    except SolverError as e:
        logger.error("Sweep point %.9g Hz failed: %s", f, e)
        return SweepPoint(frequency=f, status="error", message=str(e))
    return SweepPoint(frequency=f, smatrix=smatrix)


def frequency_sweep(
    net: Network,
    settings: SweepSettings,
    f_start: float,
    f_stop: float,
    n_points: int,
    workers: int = 1,
    show_progress: bool = False,
) -> SweepTable:
    """
    Solve the network at ``n_points`` equally spaced frequencies.

    Points run on a thread pool of ``workers`` threads; the table is always in
    ascending frequency order. Failed points become ``cutoff`` or ``error`` rows.
    """
    if workers < 1:
        raise InvalidInput(f"workers must be >= 1, got {workers}", "workers")
    frequencies = [float(f) for f in sweep_frequencies(f_start, f_stop, n_points)]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = executor.map(lambda f: _sweep_point(net, settings, f), frequencies)
        if show_progress:
            results = track(
                results, total=len(frequencies), description="Sweeping frequencies"
            )
        points = list(results)

    failed = sum(1 for point in points if not point.ok)
    if failed:
        logger.warning("%d of %d sweep points failed", failed, len(points))
    return SweepTable(points)


def reflection_zeros(table: SweepTable, threshold_db: float = -20.0) -> List[float]:
    """Frequencies of local minima of the fundamental |S11| in dB that lie below ``threshold_db``."""
    s11 = table.parameter("S11")
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 20.0 * np.log10(np.abs(s11))
    # failed points must not split or fake a dip
    db = np.where(np.isnan(db), np.inf, db)
    db = np.where(np.isneginf(db), -400.0, db)
    # padding lets a dip at either end of the band count as a minimum
    padded = np.concatenate(([np.inf], db, [np.inf]))
    peaks, _ = find_peaks(-padded, height=-threshold_db)
    return [float(table.frequencies[i - 1]) for i in peaks]


def two_post_structure(
    wg: Optional[Waveguide] = None,
    spacing: float = 15e-3,
    radius: float = 2e-3,
    d1: float = 3e-3,
    d2: float = 5e-3,
) -> Network:
    """Two posts of equal radius offset d1 and d2 from the axis, ``spacing`` apart."""
    wg = wg or Waveguide.preset("WR-62")
    posts = [
        PostJunction.from_axis_offset(wg, d1, radius),
        PostJunction.from_axis_offset(wg, d2, radius),
    ]
    return Network.from_posts(wg, posts, [spacing])


def _offsets(offsets: Sequence[float], alternating: bool) -> List[float]:
    if not alternating:
        return list(offsets)
    return [d if i % 2 == 0 else -d for i, d in enumerate(offsets)]


def three_post_filter(
    wg: Optional[Waveguide] = None, alternating: bool = False
) -> Network:
    """Two-pole bandpass filter: r = 2 mm, l = 14.7404 mm, offsets d1, d2, d1."""
    wg = wg or Waveguide.preset("WR-62")
    d1, d2 = 3.4475e-3, 1.5137e-3
    posts = [
        PostJunction.from_axis_offset(wg, d, 2e-3)
        for d in _offsets([d1, d2, d1], alternating)
    ]
    return Network.from_posts(wg, posts, [14.7404e-3, 14.7404e-3])


def five_post_filter(
    wg: Optional[Waveguide] = None, alternating: bool = False
) -> Network:
    """Four-pole bandpass filter: r = 2 mm, offsets d1, d2, d3, d2, d1, spacings l1, l2, l2, l1."""
    wg = wg or Waveguide.preset("WR-62")
    d1, d2, d3 = 3.9639e-3, 1.7958e-3, 1.3672e-3
    l1, l2 = 14.1461e-3, 15.9014e-3
    posts = [
        PostJunction.from_axis_offset(wg, d, 2e-3)
        for d in _offsets([d1, d2, d3, d2, d1], alternating)
    ]
    return Network.from_posts(wg, posts, [l1, l2, l2, l1])
