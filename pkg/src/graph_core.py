"""
Graph Core
==========

Simple undirected graphs, graph shifts supported on them, certified
spectral intervals and the commutativity check for families of shifts.

Shifts are stored row-oriented (CSR) so that each vertex owns its row,
which is what the distributed simulator hands to agents.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from src.config import DENSE_EIG_CAP
from src.errors import (
    DegreeZeroError,
    DimensionMismatchError,
    InvalidGeneratorError,
    InvalidInputError,
    InvalidSizeError,
    SizeCapError,
)

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]

SPECTRAL_METHODS = ("analytic-laplacian", "gershgorin", "dense-eig")


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices 0..n-1; edges stored as (i, j) with i < j."""

    n: int
    edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSizeError(f"Graph needs at least one vertex, got n={self.n}")
        for i, j in self.edges:
            if i == j:
                raise InvalidInputError(f"Self-loop at vertex {i}")
            if not (0 <= i < j < self.n):
                raise InvalidInputError(f"Edge ({i}, {j}) is not normalized or out of range for n={self.n}")

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Tuple[int, int]]) -> "Graph":
        """Build a graph from unordered pairs, rejecting self-loops and duplicates."""
        seen = set()
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b:
                raise InvalidInputError(f"Self-loop at vertex {a}")
            edge = (min(a, b), max(a, b))
            if edge in seen:
                raise InvalidInputError(f"Duplicate edge {edge}")
            seen.add(edge)
        return cls(n=n, edges=frozenset(seen))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """0/1 adjacency matrix."""
        if not self.edges:
            return sp.csr_matrix((self.n, self.n))
        pairs = np.array(sorted(self.edges), dtype=np.int64)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel().astype(int)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def neighbors(self, i: int) -> np.ndarray:
        """Sorted neighbor indices of vertex i."""
        adj = self.adjacency
        return np.sort(adj.indices[adj.indptr[i]:adj.indptr[i + 1]])


@dataclass(frozen=True, eq=False)
class Shift:
    """
    Sparse symmetric matrix supported on a graph's diagonal and edges.

    ``interval`` is a certified enclosure [mu, nu] of the spectrum.
    ``normalized_laplacian`` marks shifts whose spectrum is known to lie
    in [0, 2] (symmetric normalized Laplacians and their Kronecker lifts).
    """

    matrix: sp.csr_matrix
    interval: Interval
    graph: Graph
    normalized_laplacian: bool = False

    def __post_init__(self):
        rows, cols = self.matrix.shape
        if rows != cols:
            raise DimensionMismatchError(f"Shift must be square, got {self.matrix.shape}")
        if rows != self.graph.n:
            raise DimensionMismatchError(f"Shift of size {rows} on a graph with {self.graph.n} vertices")
        if (self.matrix != self.matrix.T).nnz:
            raise InvalidInputError("Shift is not exactly symmetric")
        mu, nu = self.interval
        if mu > nu:
            raise InvalidInputError(f"Spectral interval [{mu}, {nu}] is reversed")
        coo = self.matrix.tocoo()
        off = coo.row < coo.col
        for i, j, v in zip(coo.row[off], coo.col[off], coo.data[off]):
            if v != 0 and (int(i), int(j)) not in self.graph.edges:
                raise InvalidInputError(f"Shift entry ({i}, {j}) is not supported on the graph")

    @classmethod
    def from_matrix(cls, matrix, graph: Optional[Graph] = None,
                    interval: Optional[Interval] = None) -> "Shift":
        """Wrap a symmetric matrix; graph defaults to its off-diagonal support, interval to Gershgorin."""
        matrix = sp.csr_matrix(matrix, dtype=float)
        matrix.eliminate_zeros()
        if graph is None:
            coo = matrix.tocoo()
            off = coo.row < coo.col
            graph = Graph(n=matrix.shape[0], edges=frozenset(zip(coo.row[off].tolist(), coo.col[off].tolist())))
        if interval is None:
            interval = _gershgorin(matrix)
        return cls(matrix=matrix, interval=interval, graph=graph)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def with_interval(self, interval: Interval) -> "Shift":
        """Same shift with a different (tighter or wider) certified interval."""
        return replace(self, interval=(float(interval[0]), float(interval[1])))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


# ---------- graph constructors ----------

def build_circulant(N: int, Q: Sequence[int]) -> Graph:
    """Circulant graph C(N, Q): edges (i, i +- q mod N) for every generator q."""
    if N < 3:
        raise InvalidSizeError(f"Circulant graph needs N >= 3, got {N}")
    generators = [int(q) for q in Q]
    if not generators:
        raise InvalidGeneratorError("Generator set Q is empty")
    if len(set(generators)) != len(generators):
        raise InvalidGeneratorError(f"Duplicate generators in {generators}")
    for q in generators:
        if q < 1 or 2 * q >= N:
            raise InvalidGeneratorError(f"Generator {q} outside [1, {N}/2)")
    edges = set()
    for q in generators:
        for i in range(N):
            j = (i + q) % N
            edges.add((min(i, j), max(i, j)))
    logger.debug(f"Built circulant C({N}, {sorted(generators)}) with {len(edges)} edges")
    return Graph(n=N, edges=frozenset(edges))


def build_path(n: int) -> Graph:
    if n < 2:
        raise InvalidSizeError(f"Path graph needs n >= 2, got {n}")
    return Graph(n=n, edges=frozenset((i, i + 1) for i in range(n - 1)))


def build_knn(points, k: int) -> Graph:
    """
    Symmetrized k-nearest-neighbor graph.

    (i, j) is an edge iff j is among the k nearest neighbors of i or vice
    versa. Distance ties go to the lower index.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = pts.shape[0]
    if m < 2:
        raise InvalidInputError(f"kNN graph needs at least 2 points, got {m}")
    if k < 1 or k >= m:
        raise InvalidInputError(f"k must lie in [1, {m - 1}], got {k}")
    dist = cdist(pts, pts)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    edges = set()
    for i in range(m):
        for j in order[i]:
            j = int(j)
            edges.add((min(i, j), max(i, j)))
    logger.debug(f"Built {k}-NN graph on {m} points with {len(edges)} edges")
    return Graph(n=m, edges=frozenset(edges))


def cartesian_product(left: Graph, right: Graph) -> Graph:
    """Cartesian product graph; vertex (a, b) is indexed a * right.n + b."""
    q = right.n
    edges = set()
    for a in range(left.n):
        for b, b2 in right.edges:
            edges.add((a * q + b, a * q + b2))
    for a, a2 in left.edges:
        for b in range(q):
            edges.add((a * q + b, a2 * q + b))
    return Graph(n=left.n * q, edges=frozenset(edges))


# ---------- shifts ----------

def sym_normalized_laplacian(g: Graph) -> Shift:
    """L_sym = I - D^(-1/2) A D^(-1/2); spectrum certified in [0, 2]."""
    deg = g.degrees
    isolated = np.flatnonzero(deg == 0)
    if isolated.size:
        raise DegreeZeroError(f"Vertices {isolated[:10].tolist()} have degree zero")
    dinv = 1.0 / np.sqrt(deg.astype(float))
    pairs = np.array(sorted(g.edges), dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(g.n)])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(g.n)])
    off = -dinv[pairs[:, 0]] * dinv[pairs[:, 1]]
    data = np.concatenate([off, off, np.ones(g.n)])
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))
    return Shift(matrix=matrix, interval=(0.0, 2.0), graph=g, normalized_laplacian=True)


def kron_pair(L_left: Shift, L_right: Shift) -> Tuple[Shift, Shift]:
    """S1 = I_p (x) L_right and S2 = L_left (x) I_q on the Cartesian product graph."""
    p, q = L_left.n, L_right.n
    product = cartesian_product(L_left.graph, L_right.graph)
    s1 = sp.kron(sp.identity(p, format="csr"), L_right.matrix, format="csr")
    s2 = sp.kron(L_left.matrix, sp.identity(q, format="csr"), format="csr")
    S1 = Shift(matrix=s1, interval=L_right.interval, graph=product,
               normalized_laplacian=L_right.normalized_laplacian)
    S2 = Shift(matrix=s2, interval=L_left.interval, graph=product,
               normalized_laplacian=L_left.normalized_laplacian)
    return S1, S2


def check_commute(S1: Shift, S2: Shift, tol: float = 0.0) -> bool:
    """True iff ||S1 S2 - S2 S1||_F <= tol."""
    if S1.n != S2.n:
        raise DimensionMismatchError(f"Shift sizes differ: {S1.n} vs {S2.n}")
    comm = (S1.matrix @ S2.matrix - S2.matrix @ S1.matrix).tocsr()
    norm = float(np.sqrt(np.sum(comm.data ** 2)))
    return norm <= tol


def _gershgorin(matrix: sp.csr_matrix) -> Interval:
    diag = matrix.diagonal()
    radii = np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radii)), float(np.max(diag + radii))


def spectral_interval(S: Shift, method: str = "gershgorin") -> Interval:
    """
    Certified enclosure of the spectrum of a symmetric shift.

    Parameters
    ----------
    S : Shift
        The shift.
    method : str
        ``analytic-laplacian`` ([0, 2], only for normalized Laplacians),
        ``gershgorin`` (union of Gershgorin discs) or ``dense-eig`` (full
        symmetric eigensolve, capped at ``GSP_DENSE_EIG_CAP`` vertices).

    Returns
    -------
    tuple
        (mu, nu) with mu <= every eigenvalue <= nu.
    """
    if method == "analytic-laplacian":
        if not S.normalized_laplacian:
            raise InvalidInputError("analytic-laplacian interval requested for a shift that is not L_sym")
        return 0.0, 2.0
    if method == "gershgorin":
        return _gershgorin(S.matrix)
    if method == "dense-eig":
        if S.n > DENSE_EIG_CAP:
            raise SizeCapError(f"dense-eig capped at n={DENSE_EIG_CAP}, got n={S.n}")
        eigs = np.linalg.eigvalsh(S.toarray())
        return float(eigs[0]), float(eigs[-1])
    raise InvalidInputError(f"Unknown spectral interval method '{method}', expected one of {SPECTRAL_METHODS}")


def circulant_laplacian_spectrum(N: int, Q: Sequence[int]) -> np.ndarray:
    """Eigenvalues 1 - mean_q cos(2 pi k q / N), k = 0..N-1, of L_sym on C(N, Q)."""
    k = np.arange(N)[:, None]
    q = np.asarray(list(Q), dtype=float)[None, :]
    return 1.0 - np.cos(2 * np.pi * k * q / N).mean(axis=1)


# ---------- text formats ----------

def read_edge_list(path, n: Optional[int] = None) -> Graph:
    """Read `i j` pairs (0-indexed, `#` comments); a leading `# n <count>` line fixes n."""
    path = Path(path)
    if n is None:
        with open(path) as fh:
            first = fh.readline().split()
        if len(first) == 3 and first[0] == "#" and first[1] == "n":
            n = int(first[2])
    try:
        df = pd.read_csv(path, sep=r"\s+", comment="#", header=None, names=["i", "j"], dtype=int)
    except pd.errors.EmptyDataError:
        df = pd.DataFrame(columns=["i", "j"], dtype=int)
    if n is None:
        if df.empty:
            raise InvalidInputError(f"Edge list {path} is empty and has no vertex count header")
        n = int(df[["i", "j"]].to_numpy().max()) + 1
    graph = Graph.from_pairs(n, df[["i", "j"]].itertuples(index=False, name=None))
    logger.info(f"Read graph with {graph.n} vertices and {graph.num_edges} edges from {path}")
    return graph


def write_edge_list(g: Graph, path) -> Path:
    path = Path(path)
    df = pd.DataFrame(sorted(g.edges), columns=["i", "j"])
    with open(path, "w") as fh:
        fh.write(f"# n {g.n}\n")
        df.to_csv(fh, sep=" ", header=False, index=False)
    return path


def export_shift(S: Shift, path) -> Path:
    """Coordinate format: header `n mu nu`, then one `i j value` line per stored entry."""
    path = Path(path)
    coo = S.matrix.tocoo()
    df = pd.DataFrame({"i": coo.row, "j": coo.col, "value": coo.data}).sort_values(["i", "j"])
    with open(path, "w") as fh:
        fh.write(f"{S.n} {S.interval[0]:.17g} {S.interval[1]:.17g}\n")
        df.to_csv(fh, sep=" ", header=False, index=False, float_format="%.17g")
    return path


def read_shift(path, graph: Optional[Graph] = None) -> Shift:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().split()
    n, mu, nu = int(header[0]), float(header[1]), float(header[2])
    df = pd.read_csv(path, sep=r"\s+", header=None, skiprows=1, names=["i", "j", "value"],
                     float_precision="round_trip")
    matrix = sp.csr_matrix((df["value"].to_numpy(), (df["i"].to_numpy(), df["j"].to_numpy())), shape=(n, n))
    return Shift.from_matrix(matrix, graph=graph, interval=(mu, nu))

