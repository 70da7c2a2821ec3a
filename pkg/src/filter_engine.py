"""
Filter Engine
=============

Polynomial filters H = h(S_1, ..., S_d) of commuting shifts and the
centralized iterative inverse-filtering solvers:

- CIPA / CPA: quasi-Newton iteration x <- x - C (H x - y) with C a
  Chebyshev interpolant / truncated Chebyshev series of 1/h
- OGDA: Richardson iteration with step 2 / (h_max + h_min)
- ARMA: first-order recursion for (I + T)^-1, and its parallel form for a
  univariate h with real simple roots
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.config import COMMUTE_TOL, DENSE_EIG_CAP, DIVERGENCE_FACTOR, default_sup_grid
from src.errors import (
    DimensionMismatchError,
    DivergenceError,
    IndefiniteFilterError,
    InvalidInputError,
    SizeCapError,
    UndefinedErrorError,
)
from src.graph_core import Shift, check_commute
from src.poly_approx import (
    MultiPoly,
    chebyshev_series_reciprocal,
    evaluate_grid,
    interpolate_reciprocal,
    sup_error,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FilterSpec:
    """
    A polynomial filter h(S_1, ..., S_d).

    The shifts must pairwise commute and the polynomial's cube must contain
    every shift's certified spectral interval; both are checked here.
    """

    shifts: Tuple[Shift, ...]
    poly: MultiPoly

    def __post_init__(self):
        shifts = tuple(self.shifts)
        object.__setattr__(self, "shifts", shifts)
        if len(shifts) != self.poly.dims:
            raise DimensionMismatchError(f"{len(shifts)} shifts for a {self.poly.dims}-variate polynomial")
        sizes = {s.n for s in shifts}
        if len(sizes) != 1:
            raise DimensionMismatchError(f"Shifts have different sizes {sorted(sizes)}")
        for k, s in enumerate(shifts):
            if not self.poly.cube.contains_interval(k, s.interval):
                raise InvalidInputError(
                    f"Cube interval {self.poly.cube.intervals[k]} does not contain shift interval {s.interval}")
        for a in range(len(shifts)):
            for b in range(a + 1, len(shifts)):
                if shifts[a] is not shifts[b] and not check_commute(shifts[a], shifts[b], COMMUTE_TOL):
                    raise InvalidInputError(f"Shifts {a} and {b} do not commute")

    @property
    def n(self) -> int:
        return self.shifts[0].n

    @property
    def dims(self) -> int:
        return self.poly.dims

    def with_poly(self, poly: MultiPoly) -> "FilterSpec":
        return FilterSpec(self.shifts, poly)


@dataclass
class IterTrace:
    """
    Per-iteration record of a solver run, indexed m = 0..m_final.

    For a block of signals (one per column) the residual norms and relative
    errors are stored per column.
    """

    algorithm: str
    iterates: List[np.ndarray] = field(default_factory=list)
    residual_norms: List[Union[float, np.ndarray]] = field(default_factory=list)
    rel_errors: List[Union[float, np.ndarray]] = field(default_factory=list)
    rounds: Optional[int] = None
    messages: Optional[int] = None
    diverged: bool = False
    M: Optional[int] = None
    seed: Optional[int] = None

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def iterations(self) -> int:
        return len(self.residual_norms) - 1

    def total_residuals(self) -> np.ndarray:
        return np.array([float(np.sqrt(np.sum(np.square(r)))) for r in self.residual_norms])

    def mean_rel_errors(self) -> np.ndarray:
        return np.array([float(np.mean(e)) for e in self.rel_errors])

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({"m": np.arange(len(self.residual_norms)), "residual_norm": self.total_residuals()})
        df["rel_error"] = self.mean_rel_errors() if self.rel_errors else np.nan
        return df

    def export_csv(self, path) -> Path:
        """CSV with columns m, residual_norm, rel_error behind a `# algorithm=... M=... seed=...` line."""
        path = Path(path)
        with open(path, "w") as fh:
            fh.write(f"# algorithm={self.algorithm} M={self.M} seed={self.seed}\n")
            self.to_frame().to_csv(fh, index=False, float_format="%.10g")
        return path


# ---------- filter application ----------

def _check_signal(F: FilterSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != F.n or x.ndim > 2:
        raise DimensionMismatchError(f"Signal of shape {x.shape} for a filter on {F.n} vertices")
    return x


def _rescaled_shift(F: FilterSpec, k: int, v: np.ndarray) -> np.ndarray:
    mu, nu = F.poly.cube.intervals[k]
    return (2.0 * (F.shifts[k].matrix @ v) - (nu + mu) * v) / (nu - mu)


def _clenshaw(F: FilterSpec, coeffs: np.ndarray, k: int, x: np.ndarray) -> np.ndarray:
    if k == F.dims:
        return float(coeffs) * x
    if not np.any(coeffs):
        return np.zeros_like(x)
    deg = coeffs.shape[0] - 1
    if deg == 0:
        return _clenshaw(F, coeffs[0], k + 1, x)
    b1 = _clenshaw(F, coeffs[deg], k + 1, x)
    b2 = np.zeros_like(x)
    for j in range(deg - 1, 0, -1):
        b1, b2 = _clenshaw(F, coeffs[j], k + 1, x) + 2.0 * _rescaled_shift(F, k, b1) - b2, b1
    return _clenshaw(F, coeffs[0], k + 1, x) + _rescaled_shift(F, k, b1) - b2


def apply_filter(F: FilterSpec, x) -> np.ndarray:
    """
    h(S_1, ..., S_d) x by the multivariate Clenshaw recurrence.

    The innermost variable is summed first; every recurrence step applies
    the rescaled shift (2 S_k - (nu_k + mu_k) I) / (nu_k - mu_k). ``x`` may
    be a single signal or an (n, c) block of signals.
    """
    x = _check_signal(F, x)
    return _clenshaw(F, F.poly.coeffs, 0, x)


def shift_applications(poly: MultiPoly) -> int:
    """Number of shift-vector products apply_filter performs for this polynomial."""

    def count(coeffs: np.ndarray) -> int:
        if coeffs.ndim == 0 or not np.any(coeffs):
            return 0
        deg = coeffs.shape[0] - 1
        return deg + sum(count(coeffs[j]) for j in range(deg + 1))

    return count(poly.coeffs)


def dense_matrix(F: FilterSpec) -> np.ndarray:
    """Materialize the filter as a dense matrix (oracle use, n <= dense cap)."""
    if F.n > DENSE_EIG_CAP:
        raise SizeCapError(f"Dense materialization capped at n={DENSE_EIG_CAP}, got n={F.n}")
    return apply_filter(F, np.eye(F.n))


# ---------- metrics ----------

def relative_error(x_m, x) -> float:
    """E = ||x_m - x||_2 / ||x||_2."""
    x_m, x = np.asarray(x_m, dtype=float), np.asarray(x, dtype=float)
    ref = np.linalg.norm(x)
    if ref == 0:
        raise UndefinedErrorError("Relative error against an all-zero ground truth")
    return float(np.linalg.norm(x_m - x) / ref)


def _colnorm(v: np.ndarray):
    norms = np.linalg.norm(v, axis=0)
    return float(norms) if v.ndim == 1 else norms


def _col_rel_error(x_m: np.ndarray, x: np.ndarray):
    ref = np.linalg.norm(x, axis=0)
    if np.any(ref == 0):
        raise UndefinedErrorError("Relative error against an all-zero ground truth")
    err = np.linalg.norm(x_m - x, axis=0) / ref
    return float(err) if x.ndim == 1 else err


def filter_spectral_bounds(F: FilterSpec, grid_per_dim: int = None) -> Tuple[float, float]:
    """
    (min h, max h) over the grid on the shifts' own spectral cube.

    Uses each shift's certified interval rather than the polynomial frame,
    so a tightened interval gives tighter bounds.
    """
    grid_per_dim = grid_per_dim or default_sup_grid(F.dims)
    axes = [np.linspace(s.interval[0], s.interval[1], grid_per_dim) if s.interval[1] > s.interval[0]
            else np.array([s.interval[0]]) for s in F.shifts]
    values = evaluate_grid(F.poly, axes)
    return float(values.min()), float(values.max())


def contraction_bound(H: FilterSpec, C: FilterSpec, grid_per_dim: int = None) -> float:
    """b_M = sup |1 - h C| over C's cube; bounds rho(I - C H) from above."""
    check_same_shifts(H, C)
    return sup_error(H.poly, C.poly, C.poly.cube, grid_per_dim)


def iteration_matrix(H: FilterSpec, C: FilterSpec) -> np.ndarray:
    check_same_shifts(H, C)
    return np.eye(H.n) - dense_matrix(C) @ dense_matrix(H)


def spectral_radius_dense(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def empirical_rate(trace: IterTrace, tail: int = None) -> float:
    """Least-squares slope of log residual norm against m over the trace tail."""
    res = trace.total_residuals()
    m = np.arange(len(res))
    keep = res > 0
    m, res = m[keep], res[keep]
    if tail:
        m, res = m[-tail:], res[-tail:]
    if len(res) < 2:
        raise InvalidInputError("Need at least two nonzero residuals to estimate a rate")
    return float(np.polyfit(m, np.log(res), 1)[0])


# ---------- solvers ----------

def check_same_shifts(H: FilterSpec, G: FilterSpec):
    if len(H.shifts) != len(G.shifts):
        raise DimensionMismatchError("Filters are built on different numbers of shifts")
    for a, b in zip(H.shifts, G.shifts):
        if a is not b and (a.n != b.n or (a.matrix != b.matrix).nnz):
            raise InvalidInputError("Filters do not share the same shifts")


def _start(F: FilterSpec, y, m_max: int, x0) -> Tuple[np.ndarray, np.ndarray]:
    if m_max < 1:
        raise InvalidInputError(f"m_max must be at least 1, got {m_max}")
    y = _check_signal(F, y)
    x = np.zeros_like(y) if x0 is None else np.array(x0, dtype=float).reshape(y.shape)
    return y, x


def residual_blew_up(total: float, best: float, scale: float) -> bool:
    """
    Divergence guard shared by every solver.

    ``best`` is the running minimum of the residual norm and ``scale`` the
    initial one; a residual at rounding level of ``scale`` never counts as
    blow-up, even after an exact zero.
    """
    if not np.isfinite(total):
        return True
    floor = max(best, np.finfo(float).eps * scale)
    return floor > 0 and total > DIVERGENCE_FACTOR * floor


class _Recorder:
    """Fills an IterTrace and watches for residual blow-up."""

    def __init__(self, trace: IterTrace, ground_truth, keep_iterates: bool):
        self.trace = trace
        self.truth = None if ground_truth is None else np.asarray(ground_truth, dtype=float)
        self.keep = keep_iterates
        self.best = np.inf
        self.scale = None

    def record(self, x: np.ndarray, residual: np.ndarray) -> bool:
        """Store iterate x and its residual; False once the residual has blown up."""
        t = self.trace
        if self.keep or not t.iterates:
            t.iterates.append(x.copy())
        else:
            t.iterates[-1] = x.copy()
        t.residual_norms.append(_colnorm(residual))
        if self.truth is not None:
            t.rel_errors.append(_col_rel_error(x, self.truth))
        total = float(np.linalg.norm(residual))
        if self.scale is None:
            self.scale = total
        if np.isfinite(total):
            self.best = min(self.best, total)
        return not residual_blew_up(total, self.best, self.scale)


def quasi_newton_solve(H: FilterSpec, G: FilterSpec, y, m_max: int, x0=None, ground_truth=None,
                       tol: float = None, algorithm: str = "quasi-newton",
                       keep_iterates: bool = True) -> IterTrace:
    """
    e = H x^(m-1) - y,  x^(m) = x^(m-1) - G e.

    Parameters
    ----------
    H : FilterSpec
        The filter to invert.
    G : FilterSpec
        Polynomial approximation filter of H^-1 on the same shifts.
    y : array
        Observed signal (or an (n, c) block).
    m_max : int
        Number of iterations.
    x0 : array, optional
        Initial guess, zero by default.
    ground_truth : array, optional
        When given, E(m) is recorded.
    tol : float, optional
        Stop early once ||H x - y|| <= tol * ||y||. Off by default.

    Returns
    -------
    IterTrace
        Iterates, residual norms and relative errors for m = 0..m_final.
    """
    check_same_shifts(H, G)
    y, x = _start(H, y, m_max, x0)
    trace = IterTrace(algorithm=algorithm, M=G.poly.degrees[0])
    rec = _Recorder(trace, ground_truth, keep_iterates)
    e = apply_filter(H, x) - y
    rec.record(x, e)
    y_norm = float(np.linalg.norm(y))
    for m in range(1, m_max + 1):
        x = x - apply_filter(G, e)
        e = apply_filter(H, x) - y
        if not rec.record(x, e):
            raise DivergenceError(
                f"{algorithm} residual grew by more than {DIVERGENCE_FACTOR:g} at iteration {m}")
        logger.debug(f"[{algorithm}] m={m} residual={np.linalg.norm(e):.3e}")
        if tol is not None and np.linalg.norm(e) <= tol * y_norm:
            break
    return trace


def cipa_approximant(H: FilterSpec, M: int) -> FilterSpec:
    """C_M(S_1, ..., S_d) with C_M the Chebyshev interpolant of 1/h on H's cube."""
    return H.with_poly(interpolate_reciprocal(H.poly, H.poly.cube, M))


def cpa_approximant(H: FilterSpec, M: int, K: int = None) -> FilterSpec:
    """Truncated Chebyshev series of 1/h on H's cube, applied to H's shifts."""
    return H.with_poly(chebyshev_series_reciprocal(H.poly, H.poly.cube, M, K))


def cipa_solve(H: FilterSpec, C: Union[FilterSpec, int], y, m_max: int, x0=None,
               ground_truth=None, **kwargs) -> IterTrace:
    """CIPA; ``C`` is a ready approximant or the interpolation degree M."""
    if isinstance(C, (int, np.integer)):
        C = cipa_approximant(H, int(C))
    return quasi_newton_solve(H, C, y, m_max, x0, ground_truth, algorithm="cipa", **kwargs)


def cpa_solve(H: FilterSpec, C: Union[FilterSpec, int], y, m_max: int, x0=None,
              ground_truth=None, **kwargs) -> IterTrace:
    """CPA; ``C`` is a ready approximant or the truncation degree M."""
    if isinstance(C, (int, np.integer)):
        C = cpa_approximant(H, int(C))
    return quasi_newton_solve(H, C, y, m_max, x0, ground_truth, algorithm="cpa", **kwargs)


def ogda_step(H: FilterSpec, bounds: Tuple[float, float] = None, grid_per_dim: int = None) -> float:
    h_min, h_max = bounds or filter_spectral_bounds(H, grid_per_dim)
    if h_min <= 0:
        raise IndefiniteFilterError(f"h is not positive on the spectral cube (min {h_min:.4g})")
    return 2.0 / (h_max + h_min)


def ogda_solve(H: FilterSpec, y, m_max: int, x0=None, ground_truth=None,
               bounds: Tuple[float, float] = None, grid_per_dim: int = None, **kwargs) -> IterTrace:
    """
    Gradient descent x <- x - gamma (H x - y) with gamma = 2 / (h_max + h_min).

    h_min and h_max come from the grid over the shifts' certified spectral
    cube unless ``bounds`` is given.
    """
    gamma = ogda_step(H, bounds, grid_per_dim)
    G = H.with_poly(MultiPoly.constant(gamma, H.poly.cube))
    trace = quasi_newton_solve(H, G, y, m_max, x0, ground_truth, algorithm="ogda", **kwargs)
    trace.M = None
    return trace


def arma_solve(T: FilterSpec, y, m_max: int, x0=None, ground_truth=None,
               grid_per_dim: int = None, keep_iterates: bool = True) -> IterTrace:
    """
    First-order ARMA recursion x <- y - T x for (I + T) x = y.

    Converges iff rho(T) < 1. A certified bound rho(T) >= 1 or a blown-up
    residual marks the trace as diverged instead of raising.
    """
    y, x = _start(T, y, m_max, x0)
    t_min, t_max = filter_spectral_bounds(T, grid_per_dim)
    rho = max(abs(t_min), abs(t_max))
    trace = IterTrace(algorithm="arma")
    if rho >= 1:
        trace.diverged = True
        logger.warning(f"[arma] spectral bound of T is {rho:.4f} >= 1, recursion does not converge")
    rec = _Recorder(trace, ground_truth, keep_iterates)
    rec.record(x, x + apply_filter(T, x) - y)
    for m in range(1, m_max + 1):
        x = y - apply_filter(T, x)
        if not rec.record(x, x + apply_filter(T, x) - y):
            trace.diverged = True
            logger.warning(f"[arma] residual blew up at iteration {m}")
            break
    return trace


def _power_series(H: FilterSpec) -> np.polynomial.Polynomial:
    power = H.poly.to_power()
    return np.polynomial.Polynomial(power).trim(1e-12 * np.abs(power).max())


def arma_branches(H: FilterSpec) -> List[Tuple[float, float]]:
    """
    Partial fractions 1/h(t) = sum_k c_k / (1 - psi_k t) for a univariate h
    with real simple nonzero roots p_k (psi_k = 1/p_k).
    """
    if H.dims != 1:
        raise DimensionMismatchError("Parallel ARMA needs a univariate filter")
    poly = _power_series(H)
    roots = poly.roots()
    if np.any(np.abs(roots.imag) > 1e-12):
        raise InvalidInputError(f"h has complex roots {roots}")
    roots = roots.real
    if len(set(np.round(roots, 12))) != len(roots) or np.any(roots == 0):
        raise InvalidInputError(f"h needs simple nonzero roots, got {roots}")
    deriv = poly.deriv()
    return [(-1.0 / (deriv(p) * p), 1.0 / p) for p in roots]


def parallel_arma_solve(H: FilterSpec, y, m_max: int, ground_truth=None,
                        keep_iterates: bool = True) -> IterTrace:
    """
    Parallel first-order ARMA for x = H^-1 y, zero initial state.

    Each branch runs w_k <- c_k y + psi_k S w_k and the output is sum_k w_k.
    """
    branches = arma_branches(H)
    y, x = _start(H, y, m_max, None)
    S = H.shifts[0]
    rho = max(abs(S.interval[0]), abs(S.interval[1])) * max((abs(psi) for _, psi in branches), default=0.0)
    trace = IterTrace(algorithm="arma")
    if rho >= 1:
        trace.diverged = True
        logger.warning(f"[arma] branch spectral bound {rho:.4f} >= 1, recursion does not converge")
    lead = _power_series(H).coef[-1]
    states = [np.zeros_like(y) for _ in branches]
    rec = _Recorder(trace, ground_truth, keep_iterates)
    rec.record(x, apply_filter(H, x) - y)
    for m in range(1, m_max + 1):
        states = [c * y + psi * (S.matrix @ w) for (c, psi), w in zip(branches, states)]
        x = sum(states) if branches else y / lead
        if not rec.record(x, apply_filter(H, x) - y):
            trace.diverged = True
            logger.warning(f"[arma] residual blew up at iteration {m}")
            break
    return trace

