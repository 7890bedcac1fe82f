from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from Waveguide_Post_Solver.errors import InvalidInput

FRAMES = ("local", "global")


def port_signs(M: int) -> np.ndarray:
    """(-1)^(m+1) for m = 1..M; maps sin(p_m x') onto sin(p_m x) with x' = a - x."""
    return np.where(np.arange(1, M + 1) % 2 == 1, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class ScatteringMatrix:
    """
    Generalized scattering matrix of a two-port with M modes per port.

    ``S`` maps incoming amplitudes [a^I; a^II] to outgoing [b^I; b^II].
    In the ``local`` frame port II amplitudes refer to x' = a - x; in the
    ``global`` frame both ports refer to the common x axis.
    """

    S: np.ndarray
    frequency: Optional[float] = None
    n_propagating: int = 0
    frame: str = "local"
    residual: Optional[float] = None

    def __post_init__(self) -> None:
        S = np.asarray(self.S, dtype=complex)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise InvalidInput(f"S must be 2M x 2M, got shape {S.shape}", "S")
        if not np.all(np.isfinite(S)):
            raise InvalidInput("S has non-finite entries", "S")
        if self.frame not in FRAMES:
            raise InvalidInput(f"unknown port frame {self.frame!r}", "frame")
        if not 0 <= self.n_propagating <= S.shape[0] // 2:
            raise InvalidInput(
                f"n_propagating {self.n_propagating} outside 0..{S.shape[0] // 2}",
                "n_propagating",
            )
        object.__setattr__(self, "S", S)

    @classmethod
    def from_blocks(
        cls,
        S11: np.ndarray,
        S12: np.ndarray,
        S21: np.ndarray,
        S22: np.ndarray,
        **kwargs: Any,
    ) -> "ScatteringMatrix":
        return cls(np.block([[S11, S12], [S21, S22]]), **kwargs)

    @property
    def M(self) -> int:
        return self.S.shape[0] // 2

    @property
    def S11(self) -> np.ndarray:
        return self.S[: self.M, : self.M]

    @property
    def S12(self) -> np.ndarray:
        return self.S[: self.M, self.M :]

    @property
    def S21(self) -> np.ndarray:
        return self.S[self.M :, : self.M]

    @property
    def S22(self) -> np.ndarray:
        return self.S[self.M :, self.M :]

    def blocks(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.S11, self.S12, self.S21, self.S22

    def _replace(self, S: np.ndarray, **changes: Any) -> "ScatteringMatrix":
        values = {
            "frequency": self.frequency,
            "n_propagating": self.n_propagating,
            "frame": self.frame,
            "residual": self.residual,
        }
        values.update(changes)
        return ScatteringMatrix(S, **values)

    def _flip_port_two(self) -> np.ndarray:
        d = np.concatenate([np.ones(self.M), port_signs(self.M)])
        return d[:, None] * self.S * d[None, :]

    def to_global(self) -> "ScatteringMatrix":
        if self.frame == "global":
            return self
        return self._replace(self._flip_port_two(), frame="global")

    def to_local(self) -> "ScatteringMatrix":
        if self.frame == "local":
            return self
        return self._replace(self._flip_port_two(), frame="local")

    def port_swapped(self) -> "ScatteringMatrix":
        """The same two-port seen with ports I and II exchanged."""
        return self._replace(
            np.block([[self.S22, self.S21], [self.S12, self.S11]])
        )

    def propagating_block(self) -> np.ndarray:
        """The 2P x 2P sub-matrix over the propagating modes of both ports."""
        P = self.n_propagating
        idx = np.concatenate([np.arange(P), self.M + np.arange(P)])
        return self.S[np.ix_(idx, idx)]

    def energy_error(self) -> float:
        """max over propagating inputs of | sum_i |S_ij|^2 - 1 |."""
        Sp = self.propagating_block()
        if Sp.size == 0:
            return 0.0
        return float(np.max(np.abs(np.sum(np.abs(Sp) ** 2, axis=0) - 1.0)))

    def reciprocity_error(self) -> float:
        Sp = self.propagating_block()
        if Sp.size == 0:
            return 0.0
        return float(np.max(np.abs(Sp - Sp.T)))

    def max_singular_value(self) -> float:
        Sp = self.propagating_block()
        if Sp.size == 0:
            return 0.0
        return float(np.linalg.svd(Sp, compute_uv=False)[0])

    def fundamental(self) -> np.ndarray:
        """2x2 matrix [[S11, S12], [S21, S22]] of the TE10 mode."""
        M = self.M
        return self.S[np.ix_([0, M], [0, M])]

    def to_json(self) -> Dict[str, Any]:
        """JSON-serializable summary with the fundamental-mode block."""
        f = self.fundamental()
        return {
            "frequency": self.frequency,
            "modes": self.M,
            "n_propagating": self.n_propagating,
            "frame": self.frame,
            "residual": self.residual,
            "fundamental": {
                name: [float(value.real), float(value.imag)]
                for name, value in (
                    ("S11", f[0, 0]),
                    ("S12", f[0, 1]),
                    ("S21", f[1, 0]),
                    ("S22", f[1, 1]),
                )
            },
        }


@dataclass(frozen=True)
class SweepPoint:
    """One frequency of a sweep; ``smatrix`` is None unless ``status`` is ``ok``."""

    frequency: float
    smatrix: Optional[ScatteringMatrix] = None
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok" and self.smatrix is not None


@dataclass
class SweepTable:
    """Sweep results in ascending frequency order."""

    points: List[SweepPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([point.frequency for point in self.points])

    def successful(self) -> List[SweepPoint]:
        return [point for point in self.points if point.ok]

    def parameter(self, name: str) -> np.ndarray:
        """Fundamental-mode S-parameter (S11, S12, S21, S22) per point; nan where failed."""
        row, col = _PARAMETER_INDEX[name]
        values = np.full(len(self.points), np.nan + 0j)
        for i, point in enumerate(self.points):
            if point.ok:
                values[i] = point.smatrix.fundamental()[row, col]
        return values

    def failures(self) -> List[SweepPoint]:
        return [point for point in self.points if not point.ok]


_PARAMETER_INDEX = {"S11": (0, 0), "S12": (0, 1), "S21": (1, 0), "S22": (1, 1)}
PARAMETERS = tuple(_PARAMETER_INDEX)


def max_db_delta(first: SweepTable, second: SweepTable, name: str = "S21") -> float:
    """Largest |dB difference| of one parameter over the points both tables solved."""
    if len(first) != len(second):
        raise InvalidInput("sweep tables cover different frequency grids", "tables")
    a, b = np.abs(first.parameter(name)), np.abs(second.parameter(name))
    both = ~(np.isnan(a) | np.isnan(b))
    if not np.any(both):
        return float("nan")
    with np.errstate(divide="ignore"):
        delta = np.abs(20.0 * np.log10(a[both]) - 20.0 * np.log10(b[both]))
    return float(np.max(delta))


@dataclass
class ConvergenceReport:
    """Sweeps at increasing mode counts and the fundamental |S21| change between neighbours."""

    tables: Dict[int, SweepTable]
    threshold_db: float = 0.1
    deltas: List[Tuple[int, int, float]] = field(init=False)
    converged_at: Optional[int] = field(init=False)

    def __post_init__(self) -> None:
        modes = sorted(self.tables)
        self.deltas = [
            (lo, hi, max_db_delta(self.tables[lo], self.tables[hi]))
            for lo, hi in zip(modes, modes[1:])
        ]
        self.converged_at = next(
            (hi for lo, hi, delta in self.deltas if delta <= self.threshold_db), None
        )

    @property
    def modes(self) -> List[int]:
        return sorted(self.tables)

    def to_json(self) -> Dict[str, Any]:
        return {
            "modes": self.modes,
            "threshold_db": self.threshold_db,
            "deltas": [
                {
                    "from": lo,
                    "to": hi,
                    "max_delta_s21_db": delta if np.isfinite(delta) else None,
                }
                for lo, hi, delta in self.deltas
            ],
            "converged_at": self.converged_at,
            "failed_points": {
                str(M): len(self.tables[M].failures()) for M in self.modes
            },
        }
