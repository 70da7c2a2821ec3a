"""
Experiments Module
==================

Config-driven reproduction runs: approximation and iteration-error
tables, convergence rates, the distributed equivalence check, denoising
sweeps and graph generation. Every run writes CSVs, a manifest and an
optional plot script.
"""

from .artifacts import RunResult, blob_hash
from .checks import run_denoise_sweep, run_distributed_check, run_graph_gen
from .experiment_config import EXPERIMENTS, ExperimentConfig, load_config
from .tables import run_convergence, run_table1, run_table2

RUNNERS = {
    "table1": run_table1,
    "table2": run_table2,
    "convergence": run_convergence,
    "distributed-check": run_distributed_check,
    "denoise-sweep": run_denoise_sweep,
    "graph-gen": run_graph_gen,
}

__all__ = [
    'EXPERIMENTS',
    'ExperimentConfig',
    'RUNNERS',
    'RunResult',
    'blob_hash',
    'load_config',
    'run_convergence',
    'run_denoise_sweep',
    'run_distributed_check',
    'run_graph_gen',
    'run_table1',
    'run_table2',
]
