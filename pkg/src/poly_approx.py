"""
Polynomial Approximation
========================

Multivariate polynomials stored in the tensor-product Chebyshev basis of a
cube, Chebyshev interpolation and truncated Chebyshev series of 1/h, and
grid certification of the sup-error b_M = sup |1 - h C_M| over the cube.

A "polynomial" argument ``h`` may be a :class:`MultiPoly` or a vectorized
callable ``h(t_1, ..., t_d)`` accepting broadcastable arrays.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple

import numpy as np
import scipy.fft
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import chebyshev as cheb

from src.config import SERIES_QUADRATURE, default_sup_grid
from src.errors import DimensionMismatchError, InvalidInputError, ReciprocalSingularityError

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]

# |h| below this at an interpolation node means 1/h is not representable
SINGULARITY_TOL = 1e-14
# nonvanishing certification threshold on the sup-error grid
NONVANISHING_TOL = 1e-12
# points evaluated per chunk when scanning certification grids
_CHUNK_POINTS = 1_000_000


@dataclass(frozen=True)
class Cube:
    """Product of nondegenerate intervals [mu_k, nu_k]."""

    intervals: Tuple[Interval, ...]

    def __post_init__(self):
        if len(self.intervals) < 1:
            raise InvalidInputError("Cube needs at least one dimension")
        cleaned = []
        for mu, nu in self.intervals:
            mu, nu = float(mu), float(nu)
            if not mu < nu:
                raise InvalidInputError(f"Degenerate interval [{mu}, {nu}]")
            cleaned.append((mu, nu))
        object.__setattr__(self, "intervals", tuple(cleaned))

    @classmethod
    def uniform(cls, interval: Interval, dims: int) -> "Cube":
        return cls(tuple([tuple(interval)] * dims))

    @property
    def dims(self) -> int:
        return len(self.intervals)

    def contains_interval(self, k: int, interval: Interval, tol: float = 1e-9) -> bool:
        mu, nu = self.intervals[k]
        return interval[0] >= mu - tol and interval[1] <= nu + tol

    def to_unit(self, k: int, t):
        """Map t in [mu_k, nu_k] to u in [-1, 1]."""
        mu, nu = self.intervals[k]
        return (2.0 * np.asarray(t, dtype=float) - nu - mu) / (nu - mu)


@dataclass(frozen=True, eq=False)
class MultiPoly:
    """
    Polynomial sum_n coeffs[n] T_{n_1}(u_1) ... T_{n_d}(u_d) with
    u_k = (2 t_k - nu_k - mu_k) / (nu_k - mu_k).
    """

    coeffs: np.ndarray
    cube: Cube

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim == 0:
            coeffs = coeffs.reshape((1,) * self.cube.dims)
        if coeffs.ndim != self.cube.dims:
            raise DimensionMismatchError(
                f"Coefficient tensor has {coeffs.ndim} axes for a {self.cube.dims}-dimensional cube")
        if not np.all(np.isfinite(coeffs)):
            raise InvalidInputError("Non-finite polynomial coefficient")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dims(self) -> int:
        return self.cube.dims

    @property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(s - 1 for s in self.coeffs.shape)

    @classmethod
    def constant(cls, value: float, cube: Cube) -> "MultiPoly":
        return cls(np.full((1,) * cube.dims, float(value)), cube)

    @classmethod
    def from_power(cls, power_coeffs, cube: Cube) -> "MultiPoly":
        """Build from monomial coefficients power_coeffs[l_1, ..., l_d] of t_1^l_1 ... t_d^l_d."""
        coeffs = np.array(power_coeffs, dtype=float)
        if coeffs.ndim != cube.dims:
            raise DimensionMismatchError(
                f"Power coefficient tensor has {coeffs.ndim} axes for a {cube.dims}-dimensional cube")
        for k, (mu, nu) in enumerate(cube.intervals):
            size = coeffs.shape[k]
            basis = np.column_stack([
                _fit(Polynomial.basis(l).convert(kind=Chebyshev, domain=[mu, nu]).coef, size)
                for l in range(size)
            ])
            coeffs = _apply_along(basis, coeffs, k)
        return cls(coeffs, cube)

    def to_power(self) -> np.ndarray:
        """Monomial coefficients in the original variables t."""
        coeffs = self.coeffs
        for k, (mu, nu) in enumerate(self.cube.intervals):
            size = coeffs.shape[k]
            basis = np.column_stack([
                _fit(Chebyshev.basis(n, domain=[mu, nu]).convert(kind=Polynomial).coef, size)
                for n in range(size)
            ])
            coeffs = _apply_along(basis, coeffs, k)
        return coeffs

    def __call__(self, *t):
        mesh = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in t])
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return evaluate_points(self, pts).reshape(mesh[0].shape)


def _fit(vec: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[:min(size, len(vec))] = vec[:size]
    return out


def _apply_along(matrix: np.ndarray, tensor: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)


def h1_poly() -> MultiPoly:
    """h1(t) = (9/4 - t)(3 + t) on [0, 2]."""
    return MultiPoly.from_power([27.0 / 4.0, -3.0 / 4.0, -1.0], Cube(((0.0, 2.0),)))


# ---------- evaluation ----------

def evaluate(p: MultiPoly, t: Sequence[float]) -> float:
    """Value of p at a single point t (Clenshaw per dimension)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (p.dims,):
        raise DimensionMismatchError(f"Point of shape {t.shape} for a {p.dims}-variate polynomial")
    for k, (mu, nu) in enumerate(p.cube.intervals):
        if t[k] < mu or t[k] > nu:
            logger.warning(f"Extrapolating: t[{k}]={t[k]} outside [{mu}, {nu}]")
    c = p.coeffs
    for k in range(p.dims):
        c = cheb.chebval(p.cube.to_unit(k, t[k]), c, tensor=True)
    return float(c)


def evaluate_points(p: MultiPoly, pts) -> np.ndarray:
    """Values of p at P scattered points given as a (P, d) array."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != p.dims:
        raise DimensionMismatchError(f"Points of shape {pts.shape} for a {p.dims}-variate polynomial")
    P = pts.shape[0]
    work = np.broadcast_to(p.coeffs, (P,) + p.coeffs.shape)
    for k in range(p.dims):
        vander = cheb.chebvander(p.cube.to_unit(k, pts[:, k]), p.degrees[k])
        vander = vander.reshape((P, -1) + (1,) * (work.ndim - 2))
        work = (vander * work).sum(axis=1)
    return np.asarray(work, dtype=float).reshape(P)


def evaluate_grid(p: MultiPoly, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Values of p on the tensor grid axes[0] x ... x axes[d-1]."""
    if len(axes) != p.dims:
        raise DimensionMismatchError(f"{len(axes)} grid axes for a {p.dims}-variate polynomial")
    values = p.coeffs
    for k, ax in enumerate(axes):
        vander = cheb.chebvander(p.cube.to_unit(k, ax), p.degrees[k])
        values = _apply_along(vander, values, k)
    return values


def _sample(h, axes: Sequence[np.ndarray]) -> np.ndarray:
    if isinstance(h, MultiPoly):
        return evaluate_grid(h, axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.broadcast_to(np.asarray(h(*mesh), dtype=float), mesh[0].shape)


# ---------- construction ----------

def chebyshev_nodes(M: int, interval: Interval) -> np.ndarray:
    """Rescaled Chebyshev points (nu+mu)/2 + (nu-mu)/2 cos((j+1/2) pi/(M+1)), j = 0..M."""
    if M < 0:
        raise InvalidInputError(f"Degree must be nonnegative, got {M}")
    mu, nu = float(interval[0]), float(interval[1])
    if not mu < nu:
        raise InvalidInputError(f"Degenerate interval [{mu}, {nu}]")
    j = np.arange(M + 1)
    return (nu + mu) / 2.0 + (nu - mu) / 2.0 * np.cos((j + 0.5) * np.pi / (M + 1))


def _dct_coefficients(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients from samples on the first-kind tensor grid."""
    coeffs = scipy.fft.dctn(values, type=2) / np.prod(values.shape)
    for axis in range(values.ndim):
        idx = [slice(None)] * values.ndim
        idx[axis] = 0
        coeffs[tuple(idx)] *= 0.5
    return coeffs


def _reciprocal_samples(h, cube: Cube, points_per_dim: int) -> np.ndarray:
    axes = [chebyshev_nodes(points_per_dim - 1, iv) for iv in cube.intervals]
    values = _sample(h, axes)
    worst = float(np.min(np.abs(values)))
    if worst < SINGULARITY_TOL:
        raise ReciprocalSingularityError(f"h vanishes at a Chebyshev node (|h| = {worst:.3e})")
    return 1.0 / values


def interpolate_reciprocal(h, cube: Cube, M: int) -> MultiPoly:
    """
    Chebyshev interpolant C_M of 1/h.

    C_M has degree M in every variable and equals 1/h at every rescaled
    tensor Chebyshev node t_j, ||j||_inf <= M.
    """
    if M < 0:
        raise InvalidInputError(f"Degree must be nonnegative, got {M}")
    coeffs = _dct_coefficients(_reciprocal_samples(h, cube, M + 1))
    logger.debug(f"Interpolated 1/h at degree {M} on {cube.intervals}")
    return MultiPoly(coeffs, cube)


def chebyshev_series_reciprocal(h, cube: Cube, M: int, K: int = None) -> MultiPoly:
    """
    Degree-M truncation of the tensor Chebyshev expansion of 1/h.

    Parameters
    ----------
    h : MultiPoly or callable
        Polynomial that does not vanish on the cube.
    cube : Cube
        Approximation frame.
    M : int
        Per-variable degree of the truncation.
    K : int, optional
        Gauss-Chebyshev quadrature points per dimension; raised to at
        least 4(M+1). Defaults to ``GSP_SERIES_QUADRATURE``.

    Returns
    -------
    MultiPoly
        The truncated series.
    """
    if M < 0:
        raise InvalidInputError(f"Degree must be nonnegative, got {M}")
    K = max(K or SERIES_QUADRATURE, 4 * (M + 1))
    full = _dct_coefficients(_reciprocal_samples(h, cube, K))
    coeffs = full[tuple(slice(0, M + 1) for _ in range(cube.dims))]
    return MultiPoly(np.array(coeffs), cube)


# ---------- certification ----------

def _grid_chunks(cube: Cube, grid_per_dim: int) -> Iterator[List[np.ndarray]]:
    axes = [np.linspace(mu, nu, grid_per_dim) for mu, nu in cube.intervals]
    rest = grid_per_dim ** (cube.dims - 1)
    step = max(1, _CHUNK_POINTS // rest)
    for start in range(0, grid_per_dim, step):
        yield [axes[0][start:start + step]] + axes[1:]


def _check_grid(grid_per_dim: int):
    if grid_per_dim < 2:
        raise InvalidInputError(f"Certification grid needs at least 2 points per dimension, got {grid_per_dim}")


def sup_error(h, C: MultiPoly, cube: Cube = None, grid_per_dim: int = None) -> float:
    """
    max |1 - h(t) C(t)| over a uniform tensor grid with endpoints.

    This is a grid lower bound on b_M; the default density is
    ``GSP_SUP_GRID_1D`` points for d=1 and ``GSP_SUP_GRID_2D`` for d=2.
    """
    cube = cube or C.cube
    grid_per_dim = grid_per_dim or default_sup_grid(cube.dims)
    _check_grid(grid_per_dim)
    worst = 0.0
    for axes in _grid_chunks(cube, grid_per_dim):
        err = np.abs(1.0 - _sample(h, axes) * _sample(C, axes))
        worst = max(worst, float(err.max()))
    return worst


def grid_extrema(h, cube: Cube, grid_per_dim: int = None) -> Tuple[float, float]:
    """(min h, max h) over the certification grid."""
    grid_per_dim = grid_per_dim or default_sup_grid(cube.dims)
    _check_grid(grid_per_dim)
    lo, hi = np.inf, -np.inf
    for axes in _grid_chunks(cube, grid_per_dim):
        vals = _sample(h, axes)
        lo, hi = min(lo, float(vals.min())), max(hi, float(vals.max()))
    return lo, hi


def min_abs_on_grid(h, cube: Cube, grid_per_dim: int = None) -> float:
    grid_per_dim = grid_per_dim or default_sup_grid(cube.dims)
    _check_grid(grid_per_dim)
    return min(float(np.abs(_sample(h, axes)).min()) for axes in _grid_chunks(cube, grid_per_dim))


def certify_nonvanishing(h, cube: Cube, grid_per_dim: int = None) -> float:
    """Raise unless |h| > 1e-12 on the certification grid; returns the grid minimum of |h|."""
    worst = min_abs_on_grid(h, cube, grid_per_dim)
    if worst <= NONVANISHING_TOL:
        raise ReciprocalSingularityError(f"h vanishes on the cube (grid min |h| = {worst:.3e})")
    return worst


def interpolation_residual(h, C: MultiPoly) -> float:
    """max_j |C(t_j) - 1/h(t_j)| / max_j |1/h(t_j)| over C's own interpolation nodes."""
    axes = [chebyshev_nodes(M, iv) for M, iv in zip(C.degrees, C.cube.intervals)]
    target = 1.0 / _sample(h, axes)
    return float(np.abs(evaluate_grid(C, axes) - target).max() / np.abs(target).max())


def decay_slope(errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against degree 0, 1, 2, ..."""
    errors = np.asarray(errors, dtype=float)
    return float(np.polyfit(np.arange(len(errors)), np.log(errors), 1)[0])


# ---------- text format ----------

def save_multipoly(p: MultiPoly, path) -> Path:
    """Header `d M mu_1 nu_1 ... mu_d nu_d`, then coefficients row-major, 17 significant digits."""
    path = Path(path)
    degs = set(p.degrees)
    M = str(p.degrees[0]) if len(degs) == 1 else ",".join(str(m) for m in p.degrees)
    bounds = " ".join(f"{mu:.17g} {nu:.17g}" for mu, nu in p.cube.intervals)
    lines = [f"{p.dims} {M} {bounds}"] + [f"{v:.17g}" for v in p.coeffs.ravel(order="C")]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_multipoly(path) -> MultiPoly:
    tokens = Path(path).read_text().split("\n", 1)
    header = tokens[0].split()
    d = int(header[0])
    degrees = [int(m) for m in header[1].split(",")]
    if len(degrees) == 1:
        degrees = degrees * d
    bounds = [float(x) for x in header[2:2 + 2 * d]]
    cube = Cube(tuple((bounds[2 * k], bounds[2 * k + 1]) for k in range(d)))
    values = np.array([float(x) for x in tokens[1].split()])
    return MultiPoly(values.reshape([m + 1 for m in degrees]), cube)


APPROXIMANTS = {
    "chebyint": interpolate_reciprocal,
    "chebypoly": chebyshev_series_reciprocal,
}
