"""
Rectangular waveguide geometry and TE_m0 modal parameters.

Time convention is e^{+jwt}; a mode travelling towards +z varies as e^{-gamma z}.
"""

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from Waveguide_Post_Solver.errors import CutoffSingular, InvalidInput

MU_0 = 4e-7 * math.pi
EPS_0 = 1.0 / (MU_0 * SPEED_OF_LIGHT**2)

# Relative tolerance on |gamma| for cutoff detection, scaled by w/c.
CUTOFF_TOLERANCE = 1e-6

# Standard rectangular guides, inner dimensions in meters.
PRESETS: Dict[str, Tuple[float, float]] = {
    "WR-42": (10.668e-3, 4.318e-3),
    "WR-51": (12.954e-3, 6.477e-3),
    "WR-62": (15.799e-3, 7.899e-3),
    "WR-75": (19.05e-3, 9.525e-3),
    "WR-90": (22.86e-3, 10.16e-3),
}


@dataclass(frozen=True)
class Waveguide:
    """Rectangular guide of width ``a`` and height ``b`` (meters) with a uniform lossless fill."""

    a: float
    b: float
    eps_r: float = 1.0
    mu_r: float = 1.0

    def __post_init__(self) -> None:
        if not (self.a > 0 and math.isfinite(self.a)):
            raise InvalidInput(f"waveguide width must be positive, got {self.a}", "a")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise InvalidInput(f"waveguide height must be positive, got {self.b}", "b")
        if not self.eps_r >= 1:
            raise InvalidInput(f"eps_r must be >= 1, got {self.eps_r}", "eps_r")
        if not self.mu_r >= 1:
            raise InvalidInput(f"mu_r must be >= 1, got {self.mu_r}", "mu_r")

    @classmethod
    def preset(cls, name: str, eps_r: float = 1.0, mu_r: float = 1.0) -> "Waveguide":
        """Build a standard guide by name, e.g. ``Waveguide.preset("WR-62")``."""
        key = name.strip().upper()
        if key not in PRESETS:
            raise InvalidInput(
                f"unknown waveguide preset {name!r}; known: {', '.join(PRESETS)}",
                "preset",
            )
        a, b = PRESETS[key]
        return cls(a=a, b=b, eps_r=eps_r, mu_r=mu_r)

    @property
    def mu(self) -> float:
        return MU_0 * self.mu_r

    @property
    def eps(self) -> float:
        return EPS_0 * self.eps_r

    @property
    def wave_impedance(self) -> float:
        """Intrinsic impedance of the fill medium in ohms."""
        return math.sqrt(self.mu / self.eps)

    def propagating_count(self, frequency: float) -> int:
        """Number of TE_m0 modes above cutoff at ``frequency``."""
        return int(math.floor(frequency / cutoff_frequency(self, 1)))


@dataclass(frozen=True)
class ModeParams:
    """Modal parameters of TE_m0 at one frequency."""

    m: int
    p: float
    gamma: complex
    G: complex
    Z: complex

    @property
    def propagating(self) -> bool:
        return self.gamma.real == 0.0


def _check_mode_index(m: int) -> None:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise InvalidInput(f"mode index must be an integer >= 1, got {m}", "m")


def _check_frequency(f: float) -> None:
    if not (f > 0 and math.isfinite(f)):
        raise InvalidInput(f"frequency must be positive, got {f}", "frequency")


def cutoff_frequency(wg: Waveguide, m: int) -> float:
    """Cutoff of TE_m0: m c / (2 a sqrt(eps_r mu_r))."""
    _check_mode_index(m)
    return m * SPEED_OF_LIGHT / (2.0 * wg.a * math.sqrt(wg.eps_r * wg.mu_r))


def mode_table(
    wg: Waveguide, M: int, f: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Modal parameters of TE_10 .. TE_M0 at frequency ``f``.

    Args:
        wg: Waveguide
        M: Number of modes
        f: Frequency in Hz

    Returns:
        Arrays ``(p, gamma, G, Z)`` of length M, index 0 holding m = 1.

    Raises:
        CutoffSingular: If any mode is within the cutoff tolerance.
        InvalidInput: For M < 1 or f <= 0.
    """
    _check_mode_index(M)
    _check_frequency(f)
    return _mode_arrays(wg, np.arange(1, M + 1), f)


def _mode_arrays(wg: Waveguide, m: np.ndarray, f: float):
    omega = 2.0 * math.pi * f
    p = m * math.pi / wg.a
    k_sq = omega * omega * wg.mu * wg.eps
    gamma = np.sqrt((p * p - k_sq).astype(complex))

    # principal root, then force Re >= 0 and Im > 0 on the imaginary axis
    flip = (gamma.real < 0) | ((gamma.real == 0) & (gamma.imag < 0))
    gamma = np.where(flip, -gamma, gamma)

    tol = CUTOFF_TOLERANCE * omega / SPEED_OF_LIGHT
    at_cutoff = np.abs(gamma) < tol
    if np.any(at_cutoff):
        bad = int(m[np.argmax(at_cutoff)])
        raise CutoffSingular(
            f"TE{bad}0 is at cutoff at {f:.9g} Hz; G diverges there",
            mode=bad,
            frequency=f,
        )

    jwmu = 1j * omega * wg.mu
    G = np.sqrt(2.0 * jwmu / (gamma * wg.a * wg.b * p * p))
    Z = jwmu / gamma
    return p, gamma, G, Z


def mode_params(wg: Waveguide, m: int, f: float) -> ModeParams:
    """Modal parameters p, gamma, G, Z of a single TE_m0 mode."""
    _check_mode_index(m)
    _check_frequency(f)
    p, gamma, G, Z = _mode_arrays(wg, np.array([int(m)]), f)
    return ModeParams(
        m=int(m),
        p=float(p[0]),
        gamma=complex(gamma[0]),
        G=complex(G[0]),
        Z=complex(Z[0]),
    )
