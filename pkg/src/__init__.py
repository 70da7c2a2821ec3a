"""
Inverse Graph Filtering Package
===============================

Polynomial filters of commuting graph shifts, Chebyshev approximation of
their inverses, centralized and vertex-level iterative solvers, and graph
Tikhonov denoising.
"""

from .denoise import SpatioTemporalSignal, denoise_signal, synth_dataset
from .distributed_sim import distribute, sim_apply_filter, sim_cipa, sim_cipa_trace
from .filter_engine import FilterSpec, IterTrace, apply_filter, cipa_solve, cpa_solve, ogda_solve
from .graph_core import Graph, Shift, build_circulant, kron_pair, sym_normalized_laplacian
from .poly_approx import Cube, MultiPoly, interpolate_reciprocal, sup_error

__all__ = [
    'Cube',
    'FilterSpec',
    'Graph',
    'IterTrace',
    'MultiPoly',
    'Shift',
    'SpatioTemporalSignal',
    'apply_filter',
    'build_circulant',
    'cipa_solve',
    'cpa_solve',
    'denoise_signal',
    'distribute',
    'interpolate_reciprocal',
    'kron_pair',
    'ogda_solve',
    'sim_apply_filter',
    'sim_cipa',
    'sim_cipa_trace',
    'sup_error',
    'sym_normalized_laplacian',
    'synth_dataset',
]
