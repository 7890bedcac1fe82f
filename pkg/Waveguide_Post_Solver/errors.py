"""
Exception hierarchy for the waveguide post solver.

Library code raises these; only the command-line layer turns them into exit codes.
"""

from typing import List, Optional, Sequence


class SolverError(Exception):
    """Base class for every error raised by the solver."""


class InvalidInput(SolverError, ValueError):
    """Exception raised when an argument violates a documented precondition.

    Typical triggers:
    - Non-positive waveguide dimensions or frequencies
    - Mode indices below 1
    - A post that touches or crosses a side wall
    - Adjacent posts that would intersect
    """

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class CutoffSingular(SolverError):
    """Exception raised when a mode sits exactly at its cutoff frequency.

    The modal normalization G_m diverges when the propagation constant vanishes,
    so a sweep point landing on a cutoff is rejected instead of solved.
    """

    def __init__(self, message: str, mode: int, frequency: float):
        super().__init__(message)
        self.mode = mode
        self.frequency = frequency


class Underdetermined(SolverError):
    """Exception raised when the projection system has too few equations.

    The junction system is solvable only when M < K_d + K_u + K_c + 1, i.e. when the
    row count exceeds the 2M unknown outgoing amplitudes.
    """

    def __init__(self, message: str, rows: int, unknowns: int):
        super().__init__(message)
        self.rows = rows
        self.unknowns = unknowns


class RankDeficient(SolverError):
    """Exception raised when the least-squares factorization loses rank.

    Signals too few or badly placed basis functions for the requested mode count.
    """

    def __init__(self, message: str, rank: int, required: int):
        super().__init__(message)
        self.rank = rank
        self.required = required


class SingularCascade(SolverError):
    """Exception raised when the interior feedback operator of a cascade is singular.

    Happens at a trapped-mode resonance between two cascaded sections.
    """

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class NoConvergence(SolverError):
    """Exception raised when adaptive quadrature exceeds its refinement depth."""

    def __init__(self, message: str, depth: int):
        super().__init__(message)
        self.depth = depth


class ConfigParseError(SolverError):
    """Exception raised for a configuration document that is not well formed."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None,
    ):
        super().__init__(message)
        self.line = line
        self.column = column
        self.field = field


class ConfigValidationError(SolverError):
    """Exception raised when a configuration violates one or more invariants.

    All violations are collected, not just the first one found.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors: List[str] = list(errors)
        super().__init__(
            f"{len(self.errors)} configuration error(s): " + "; ".join(self.errors)
        )
