"""
Denoising
=========

Tikhonov denoising of time-varying signals on a product graph
path(T) x spatial graph, solved as the inverse filtering problem
(I + g1 S1 + g2 S2) w_hat = w_noisy.

Signals are vectorized time-major: vertex (t, i) of the product graph has
index t * n + i, matching ``kron_pair(L_time, L_space)`` where
S1 = I_T (x) L_space and S2 = L_time (x) I_n.
"""

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from src.config import DENSE_EIG_CAP, SNR_CAP, SNR_FLOOR
from src.errors import (
    DivergenceError,
    InvalidInputError,
    InvalidPenaltyError,
    SizeCapError,
    UndefinedNormalizationError,
    ZeroReferenceError,
)
from src.filter_engine import FilterSpec, IterTrace, arma_solve, cipa_solve, cpa_solve, ogda_solve
from src.graph_core import (
    Graph,
    Shift,
    build_knn,
    build_path,
    kron_pair,
    spectral_interval,
    sym_normalized_laplacian,
)
from src.poly_approx import Cube, MultiPoly

logger = logging.getLogger(__name__)

PENALTY_CUBE = Cube(((0.0, 2.0), (0.0, 2.0)))
DENOISE_SOLVERS = ("cipa", "cpa", "ogda", "arma")


@dataclass(frozen=True, eq=False)
class SpatioTemporalSignal:
    """T x n x c tensor of finite values."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3:
            raise InvalidInputError(f"Expected a T x n x c tensor, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Signal has non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def vectorized(self) -> np.ndarray:
        """(T*n, c) block, one column per channel."""
        return self.values.reshape(self.T * self.n, self.channels)

    @classmethod
    def from_vectorized(cls, block, T: int, n: int) -> "SpatioTemporalSignal":
        block = np.asarray(block, dtype=float)
        return cls(block.reshape(T, n, -1))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


# ---------- filters ----------

def _check_penalties(gamma1: float, gamma2: float):
    if gamma1 < 0 or gamma2 < 0:
        raise InvalidPenaltyError(f"Penalty constants must be nonnegative, got ({gamma1}, {gamma2})")


def _check_psd(*shifts: Shift):
    for s in shifts:
        if s.interval[0] < -1e-12:
            raise InvalidInputError(f"Shift interval {s.interval} is not positive semidefinite")


def tikhonov_filterspec(gamma1: float, gamma2: float, S1: Shift, S2: Shift) -> FilterSpec:
    """H = I + g1 S1 + g2 S2 as h(t1, t2) = 1 + g1 t1 + g2 t2 on [0, 2]^2."""
    _check_penalties(gamma1, gamma2)
    _check_psd(S1, S2)
    poly = MultiPoly.from_power([[1.0, gamma2], [gamma1, 0.0]], PENALTY_CUBE)
    return FilterSpec((S1, S2), poly)


def penalty_filterspec(gamma1: float, gamma2: float, S1: Shift, S2: Shift) -> FilterSpec:
    """T = g1 S1 + g2 S2, the ARMA recursion matrix for the same problem."""
    _check_penalties(gamma1, gamma2)
    _check_psd(S1, S2)
    poly = MultiPoly.from_power([[0.0, gamma2], [gamma1, 0.0]], PENALTY_CUBE)
    return FilterSpec((S1, S2), poly)


def product_shifts(spatial: Graph, temporal: Graph, interval_method: str = "analytic-laplacian") -> Tuple[Shift, Shift]:
    """
    (S1, S2) = (I_T (x) L_space, L_time (x) I_n).

    With ``interval_method="dense-eig"`` the factor Laplacians get their
    exact spectral intervals before lifting.
    """
    L_space = sym_normalized_laplacian(spatial)
    L_time = sym_normalized_laplacian(temporal)
    if interval_method != "analytic-laplacian":
        L_space = L_space.with_interval(spectral_interval(L_space, interval_method))
        L_time = L_time.with_interval(spectral_interval(L_time, interval_method))
    return kron_pair(L_time, L_space)


# ---------- noise and metrics ----------

def add_noise(W: SpatioTemporalSignal, fraction: float = 0.2, seed=None) -> SpatioTemporalSignal:
    """
    W + lam * eta with eta i.i.d. standard Gaussian and
    lam = fraction * ||W||_F / sqrt(T n c), so E||lam eta||_F^2 = (fraction ||W||_F)^2.
    """
    if not 0 < fraction <= 1:
        raise InvalidInputError(f"Noise fraction must lie in (0, 1], got {fraction}")
    norm = W.norm()
    if norm == 0:
        raise UndefinedNormalizationError("Cannot scale noise to an all-zero signal")
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(W.values.shape)
    lam = fraction * norm / np.sqrt(W.values.size)
    return SpatioTemporalSignal(W.values + lam * eta)


def snr(w_hat, w) -> float:
    """-20 log10(||w_hat - w|| / ||w||) in dB, capped at the SNR cap."""
    w_hat, w = np.asarray(w_hat, dtype=float), np.asarray(w, dtype=float)
    ref = np.linalg.norm(w)
    if ref == 0:
        raise ZeroReferenceError("SNR against an all-zero reference signal")
    err = np.linalg.norm(w_hat - w) / ref
    if err == 0:
        return SNR_CAP
    return float(min(-20.0 * np.log10(err), SNR_CAP))


def dirichlet_energy(z, S1: Shift, S2: Shift) -> np.ndarray:
    """z^T (S1 + S2) z per channel."""
    z = z.vectorized() if isinstance(z, SpatioTemporalSignal) else np.asarray(z, dtype=float)
    z = z.reshape(S1.n, -1)
    return np.einsum("ic,ic->c", z, S1.matrix @ z + S2.matrix @ z)


def penalty_value(z, S1: Shift, S2: Shift, gamma1: float, gamma2: float) -> np.ndarray:
    """g1 z^T S1 z + g2 z^T S2 z per channel."""
    z = z.vectorized() if isinstance(z, SpatioTemporalSignal) else np.asarray(z, dtype=float)
    z = z.reshape(S1.n, -1)
    return np.einsum("ic,ic->c", z, gamma1 * (S1.matrix @ z) + gamma2 * (S2.matrix @ z))


# ---------- synthetic data ----------

def random_points(n_points: int, seed=None, dim: int = 3) -> np.ndarray:
    """Uniform point cloud in the unit cube."""
    return np.random.default_rng([seed if seed is not None else 0, 0]).uniform(size=(n_points, dim))


def _smooth_along(values: np.ndarray, L: Shift, smoothness: float, axis: int) -> np.ndarray:
    A = (sp.identity(L.n, format="csc") + smoothness * L.matrix).tocsc()
    moved = np.moveaxis(values, axis, 0)
    flat = moved.reshape(L.n, -1)
    solved = np.asarray(spsolve(A, flat)).reshape(moved.shape)
    return np.moveaxis(solved, 0, axis)


def synth_dataset(T: int = 30, n_points: int = 300, k: int = 5, smoothness: float = 10.0,
                  seed=None, channels: int = 3, order: int = 2) -> Tuple[SpatioTemporalSignal, Graph, Graph]:
    """
    Smooth 3-channel signal on path(T) x kNN(points, k).

    White noise is low-pass filtered with (I + smoothness L)^-order along
    each factor graph and rescaled back to its original Frobenius norm.

    Returns
    -------
    tuple
        (signal, spatial graph, temporal graph)
    """
    if T < 2:
        raise InvalidInputError(f"Need T >= 2 time samples, got {T}")
    if n_points <= k:
        raise InvalidInputError(f"Need more points than neighbors, got n_points={n_points}, k={k}")
    if smoothness < 0:
        raise InvalidInputError(f"Smoothness must be nonnegative, got {smoothness}")
    points = random_points(n_points, seed)
    spatial = build_knn(points, k)
    temporal = build_path(T)
    rng = np.random.default_rng([seed if seed is not None else 0, 1])
    white = rng.standard_normal((T, n_points, channels))
    values = white
    if smoothness > 0:
        L_space, L_time = sym_normalized_laplacian(spatial), sym_normalized_laplacian(temporal)
        for _ in range(order):
            values = _smooth_along(values, L_space, smoothness, axis=1)
            values = _smooth_along(values, L_time, smoothness, axis=0)
        values *= np.linalg.norm(white) / np.linalg.norm(values)
    logger.info(f"Synthesized dataset T={T} n={n_points} k={k} smoothness={smoothness} "
                f"({spatial.num_edges} spatial edges)")
    return SpatioTemporalSignal(values), spatial, temporal


# ---------- denoising ----------

def denoise_signal(noisy: SpatioTemporalSignal, S1: Shift, S2: Shift, gamma1: float, gamma2: float,
                   solver: str = "cipa", M: int = 3, m: int = 3,
                   reference: Optional[SpatioTemporalSignal] = None) -> Tuple[SpatioTemporalSignal, IterTrace]:
    """
    Solve (I + g1 S1 + g2 S2) w_hat = w_noisy for every channel.

    ``solver`` is one of cipa, cpa, ogda, arma; M is ignored by ogda and
    arma. When ``reference`` is given, the trace records E(m) against it.
    """
    if solver not in DENOISE_SOLVERS:
        raise InvalidInputError(f"Unknown solver '{solver}', expected one of {DENOISE_SOLVERS}")
    y = noisy.vectorized()
    truth = None if reference is None else reference.vectorized()
    if solver == "arma":
        trace = arma_solve(penalty_filterspec(gamma1, gamma2, S1, S2), y, m, ground_truth=truth,
                           keep_iterates=False)
    else:
        H = tikhonov_filterspec(gamma1, gamma2, S1, S2)
        if solver == "ogda":
            trace = ogda_solve(H, y, m, ground_truth=truth, keep_iterates=False)
        else:
            run = cipa_solve if solver == "cipa" else cpa_solve
            trace = run(H, M, y, m, ground_truth=truth, keep_iterates=False)
    return SpatioTemporalSignal.from_vectorized(trace.final, noisy.T, noisy.n), trace


def denoise_sweep(W: SpatioTemporalSignal, S1: Shift, S2: Shift, fractions: Sequence[float],
                  gammas: Sequence[float], solver: str = "cipa", M: int = 3, m: int = 3,
                  trials: int = 1, seed: int = 0, gammas2: Sequence[float] = None) -> pd.DataFrame:
    """
    Mean output SNR over noisy trials for every (g1, g2) grid point.

    Each trial's noise comes from the PRNG stream (seed, trial), shared
    across grid points. Divergent runs and values below the floor count
    as the floor.
    """
    gammas2 = gammas if gammas2 is None else gammas2
    rows = []
    for fraction in fractions:
        noisy = [add_noise(W, fraction, seed=[seed, trial]) for trial in range(trials)]
        input_snr = float(np.mean([snr(z.values, W.values) for z in noisy]))
        for g1, g2 in itertools.product(gammas, gammas2):
            values = []
            for z in noisy:
                try:
                    w_hat, trace = denoise_signal(z, S1, S2, g1, g2, solver, M, m)
                    value = SNR_FLOOR if trace.diverged else max(snr(w_hat.values, W.values), SNR_FLOOR)
                except DivergenceError as e:
                    logger.warning(f"[sweep] {solver} diverged at gamma=({g1}, {g2}): {e}")
                    value = SNR_FLOOR
                values.append(value)
            rows.append({
                "fraction": fraction, "γ1": g1, "γ2": g2, "solver": solver,
                "M": M if solver in ("cipa", "cpa") else np.nan, "m": m,
                "mean_snr": float(np.mean(values)), "input_snr": input_snr,
                "trials": trials, "seed": seed,
            })
        logger.info(f"[sweep] {solver} fraction={fraction}: {len(gammas) * len(gammas2)} grid points done")
    return pd.DataFrame(rows)


def arma_divergence_region(S1: Shift, S2: Shift, gammas: Sequence[float],
                           gammas2: Sequence[float] = None) -> pd.DataFrame:
    """Dense rho(g1 S1 + g2 S2) per grid point, with a flag for rho >= 1."""
    if S1.n > DENSE_EIG_CAP:
        raise SizeCapError(f"Dense spectral radius capped at n={DENSE_EIG_CAP}, got n={S1.n}")
    gammas2 = gammas if gammas2 is None else gammas2
    A1, A2 = S1.toarray(), S2.toarray()
    rows = []
    for g1, g2 in itertools.product(gammas, gammas2):
        eigs = np.linalg.eigvalsh(g1 * A1 + g2 * A2)
        rho = float(np.max(np.abs(eigs)))
        rows.append({"γ1": g1, "γ2": g2, "rho": rho, "diverges": rho >= 1.0})
    return pd.DataFrame(rows)


# ---------- text formats ----------

def save_dataset(W: SpatioTemporalSignal, path) -> Path:
    """Header `T n c`, then the T*n*c values in time-major order."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"{W.T} {W.n} {W.channels}\n")
        pd.DataFrame({"value": W.values.ravel()}).to_csv(fh, header=False, index=False, float_format="%.17g")
    return path


def load_dataset(path) -> SpatioTemporalSignal:
    path = Path(path)
    with open(path) as fh:
        T, n, c = (int(v) for v in fh.readline().split())
    df = pd.read_csv(path, sep=r"\s+", header=None, skiprows=1, float_precision="round_trip")
    values = df.to_numpy(dtype=float).ravel()
    if values.size != T * n * c:
        raise InvalidInputError(f"Dataset {path} holds {values.size} values, header says {T * n * c}")
    return SpatioTemporalSignal(values.reshape(T, n, c))


def save_points(points, path) -> Path:
    """Header `n d`, then one row of coordinates per point."""
    path = Path(path)
    pts = np.asarray(points, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"{pts.shape[0]} {pts.shape[1]}\n")
        pd.DataFrame(pts).to_csv(fh, sep=" ", header=False, index=False, float_format="%.17g")
    return path


def load_points(path) -> np.ndarray:
    path = Path(path)
    with open(path) as fh:
        n, d = (int(v) for v in fh.readline().split())
    df = pd.read_csv(path, sep=r"\s+", header=None, skiprows=1, float_precision="round_trip")
    pts = df.to_numpy(dtype=float)
    if pts.shape != (n, d):
        raise InvalidInputError(f"Point file {path} holds shape {pts.shape}, header says ({n}, {d})")
    return pts
