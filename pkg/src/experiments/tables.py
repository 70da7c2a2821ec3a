"""
Approximation-error table, iteration-error table and the convergence-rate
experiment for h1(t) = (9/4 - t)(3 + t) on circulant graphs.
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from src.config import DENSE_EIG_CAP
from src.filter_engine import (
    FilterSpec,
    apply_filter,
    cipa_approximant,
    cipa_solve,
    contraction_bound,
    cpa_approximant,
    cpa_solve,
    empirical_rate,
    iteration_matrix,
    ogda_solve,
    parallel_arma_solve,
    spectral_radius_dense,
)
from src.graph_core import Shift, build_circulant, spectral_interval, sym_normalized_laplacian
from src.poly_approx import APPROXIMANTS, h1_poly, sup_error

from .artifacts import RunResult, finish_run, write_csv
from .experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)

TABLE1_ROWS = {"ChebyPoly": "chebypoly", "ChebyInt": "chebyint"}


def circulant_laplacian(config: ExperimentConfig, n: int = None) -> Shift:
    """L_sym on C(n, generators), interval tightened by ``graph_interval`` when possible."""
    n = n or config.graph_n
    L = sym_normalized_laplacian(build_circulant(n, config.graph_generators))
    method = config.graph_interval
    if method == "dense-eig" and n > DENSE_EIG_CAP:
        logger.warning(f"n={n} exceeds the dense cap, keeping the analytic interval")
        method = "analytic-laplacian"
    if method != "analytic-laplacian":
        L = L.with_interval(spectral_interval(L, method))
    return L


def h1_filter(config: ExperimentConfig, n: int = None) -> FilterSpec:
    return FilterSpec((circulant_laplacian(config, n),), h1_poly())


def random_trials(n: int, trials: int, seed: int) -> np.ndarray:
    """(n, trials) block; column t is uniform on [-1, 1] from the stream (seed, trial)."""
    return np.column_stack([np.random.default_rng([seed, t]).uniform(-1.0, 1.0, n) for t in range(trials)])


def run_table1(config: ExperimentConfig) -> RunResult:
    """sup |1 - h1 C_M| on [0, 2] for the Chebyshev series and interpolant, M over POLY_DEGREES."""
    print(f"🚀 [TABLE1] Approximation errors for M={config.poly_degrees}")
    h = h1_poly()
    rows = {}
    for label, key in TABLE1_ROWS.items():
        build = APPROXIMANTS[key]
        rows[label] = [sup_error(h, build(h, h.cube, M), h.cube, config.poly_grid) for M in config.poly_degrees]
    table = pd.DataFrame.from_dict(rows, orient="index", columns=[f"M={M}" for M in config.poly_degrees])
    table.index.name = "approximant"
    out = Path(config.out)
    csv = write_csv(table, out / "table1.csv", index=True)
    print(f"✅ [TABLE1] Wrote {csv}")
    return RunResult(table, finish_run(config, out, [csv], plot_csv=csv))


def table2_errors(H: FilterSpec, X: np.ndarray, M: int, iters: int) -> pd.DataFrame:
    """Mean E(m), m = 1..iters, of CPA, CIPA, OGDA and ARMA on the trial block X."""
    Y = apply_filter(H, X)
    traces = {
        "CPA": cpa_solve(H, cpa_approximant(H, M), Y, iters, ground_truth=X, keep_iterates=False),
        "CIPA": cipa_solve(H, cipa_approximant(H, M), Y, iters, ground_truth=X, keep_iterates=False),
        "OGDA": ogda_solve(H, Y, iters, ground_truth=X, keep_iterates=False),
        "ARMA": parallel_arma_solve(H, Y, iters, ground_truth=X, keep_iterates=False),
    }
    rows = {}
    for name, trace in traces.items():
        errors = trace.mean_rel_errors()[1:]
        rows[name] = np.pad(errors, (0, iters - len(errors)), constant_values=np.nan)
    return pd.DataFrame.from_dict(rows, orient="index", columns=[f"m={m}" for m in range(1, iters + 1)])


def run_table2(config: ExperimentConfig) -> RunResult:
    """Average relative iteration errors over seeded uniform trials, zero initial guess."""
    print(f"🚀 [TABLE2] C({config.graph_n}, {config.graph_generators}), M={config.poly_degree}, "
          f"{config.trials} trials")
    H = h1_filter(config)
    X = random_trials(H.n, config.trials, config.seed)
    table = table2_errors(H, X, config.poly_degree, config.solver_iters)
    table.index.name = "algorithm"
    out = Path(config.out)
    csv = write_csv(table, out / "table2.csv", index=True)
    print(f"✅ [TABLE2] Wrote {csv}")
    return RunResult(table, finish_run(config, out, [csv], plot_csv=csv))


def convergence_for_degree(H: FilterSpec, x: np.ndarray, M: int, iters: int,
                           grid: int = None) -> Tuple[pd.DataFrame, dict]:
    """CIPA trace for one degree plus its bound, dense radius and empirical rate."""
    C = cipa_approximant(H, M)
    trace = cipa_solve(H, C, apply_filter(H, x), iters, ground_truth=x, keep_iterates=False)
    frame = trace.to_frame()
    frame.insert(0, "M", M)
    bound = contraction_bound(H, C, grid)
    rho = spectral_radius_dense(iteration_matrix(H, C)) if H.n <= DENSE_EIG_CAP else np.nan
    summary = {
        "M": M,
        "bound": bound,
        "rho": rho,
        "log_rho": np.log(rho) if rho > 0 else -np.inf,
        "empirical_rate": empirical_rate(trace),
    }
    return frame, summary


def run_convergence(config: ExperimentConfig) -> RunResult:
    """Residual decay of CIPA against the contraction bound for every degree in POLY_DEGREES."""
    print(f"🚀 [CONVERGENCE] C({config.graph_n}, {config.graph_generators}), M={config.poly_degrees}")
    H = h1_filter(config)
    x = random_trials(H.n, 1, config.seed)[:, 0]
    frames, summaries = [], []
    for M in config.poly_degrees:
        frame, summary = convergence_for_degree(H, x, M, config.solver_iters, config.poly_grid)
        frames.append(frame)
        summaries.append(summary)
        logger.info(f"[CONVERGENCE] M={M} bound={summary['bound']:.4f} rho={summary['rho']:.4f} "
                    f"rate={summary['empirical_rate']:.4f}")
    out = Path(config.out)
    trace_csv = write_csv(pd.concat(frames, ignore_index=True), out / "convergence_trace.csv")
    summary_table = pd.DataFrame(summaries)
    summary_csv = write_csv(summary_table, out / "convergence_summary.csv")
    print(f"✅ [CONVERGENCE] Wrote {trace_csv} and {summary_csv}")
    return RunResult(summary_table, finish_run(config, out, [trace_csv, summary_csv], plot_csv=trace_csv))
