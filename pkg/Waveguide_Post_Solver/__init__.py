"""Mode-matching solver for rectangular waveguide junctions with conducting posts."""

from .data_model import ScatteringMatrix
from .junction import Discretization, PostJunction, solve_junction
from .modes import Waveguide, mode_params
from .network import Network, cascade, frequency_sweep, solve_network

__all__ = [
    "Discretization",
    "Network",
    "PostJunction",
    "ScatteringMatrix",
    "Waveguide",
    "cascade",
    "frequency_sweep",
    "mode_params",
    "solve_junction",
    "solve_network",
]
