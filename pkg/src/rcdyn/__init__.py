"""Exact Swendsen-Wang and single-bond dynamics for the random-cluster model."""

from .errors import CapExceededError, ConvergenceError, NotReversibleError, ParameterError
from .graph import EdgeSubset, Graph, components, make_complete, make_cycle, make_path, make_star, make_torus, parse_graph
from .models import ModelParams
from .dynamics import StochasticMatrix, dynamics_matrix, sb_matrix, sw_matrix
from .spectral import exact_mixing_time, spectral_gap

__version__ = "0.1.0"

__all__ = [
    "CapExceededError", "ConvergenceError", "NotReversibleError", "ParameterError",
    "EdgeSubset", "Graph", "components", "make_complete", "make_cycle", "make_path",
    "make_star", "make_torus", "parse_graph", "ModelParams", "StochasticMatrix",
    "dynamics_matrix", "sb_matrix", "sw_matrix", "exact_mixing_time", "spectral_gap",
]
