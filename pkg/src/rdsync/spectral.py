"""Sources of lambda2, the smallest nonzero mixing rate of the medium.

For continuous media on an interval or rectangle with reflecting walls the
value is the exact second Neumann eigenvalue of the negative Laplacian. For
interconnection graphs it is the second-smallest eigenvalue of the graph
Laplacian, with a quadratic-form extension for directed graphs. A discrete
1D Neumann operator is included so grid convergence toward the continuum
value can be observed directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import Mat, SymMat, sym_eigs

_DISCONNECTED_TOL = 1e-9


@dataclass(frozen=True)
class DomainSpec:
    kind: str  # "interval" | "rectangle"
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        expected = {"interval": 1, "rectangle": 2}.get(self.kind)
        if expected is None:
            raise ValueError(f"unsupported domain kind {self.kind!r}")
        if len(self.lengths) != expected:
            raise ValueError(f"{self.kind} domain needs {expected} length(s)")
        if any(not v > 0 for v in self.lengths):
            raise ValueError("domain lengths must be positive")


def domain_lambda2(d: DomainSpec) -> float:
    """Second Neumann eigenvalue: (pi/L)^2, or the min over the two axes."""
    return min((math.pi / L) ** 2 for L in d.lengths)


@dataclass(frozen=True)
class Graph:
    adjacency: Mat
    directed: bool = False

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError("adjacency weights must be finite and nonnegative")
        if np.any(np.diag(a) != 0):
            raise ValueError("self-loops are not allowed")
        if not self.directed and not np.array_equal(a, a.T):
            raise ValueError("undirected graph needs a symmetric adjacency")
        object.__setattr__(self, "adjacency", a)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]


def graph_laplacian(g: Graph) -> Mat:
    """Degree diagonal minus adjacency; rows sum to zero by construction."""
    a = g.adjacency
    return np.diag(a.sum(axis=1)) - a


def graph_lambda2(g: Graph) -> float:
    """Second-smallest Laplacian eigenvalue of an undirected graph.

    Zero means disconnected; that is reported as a warning, since the
    synchronization condition then simply fails rather than being an input
    error.
    """
    if g.directed:
        raise ValueError("use directed_algebraic_connectivity for directed graphs")
    w, _ = sym_eigs(SymMat(graph_laplacian(g)))
    lam2 = max(0.0, float(w[1]))
    if lam2 < _DISCONNECTED_TOL:
        warnings.warn("graph is disconnected; lambda2 = 0", stacklevel=2)
        return 0.0
    return lam2


def _ones_complement_basis(n: int) -> Mat:
    """Orthonormal basis of the subspace orthogonal to the all-ones vector."""
    u = np.full(n, 1.0 / math.sqrt(n))
    v = u.copy()
    v[0] -= 1.0
    h = np.eye(n) - 2.0 * np.outer(v, v) / float(v @ v)
    return h[:, 1:]


def directed_algebraic_connectivity(g: Graph) -> float:
    """Worst-case quadratic decay rate of disagreement on a directed graph.

    The minimum of y^T (L + L^T)/2 y over unit vectors y orthogonal to the
    all-ones vector, found as the smallest eigenvalue of the symmetric part
    compressed onto that subspace. Coincides with graph_lambda2 when the
    adjacency is symmetric.
    """
    lap = graph_laplacian(g)
    row_sums = lap.sum(axis=1)
    if np.any(np.abs(row_sums) > 1e-12):
        raise ValueError("Laplacian rows must sum to zero")
    sym_part = 0.5 * (lap + lap.T)
    q = _ones_complement_basis(g.n_nodes)
    w, _ = sym_eigs(SymMat(q.T @ sym_part @ q))
    lam2 = float(w[0])
    if abs(lam2) < _DISCONNECTED_TOL:
        lam2 = 0.0
    if lam2 <= 0.0:
        warnings.warn("directed graph has nonpositive algebraic connectivity",
                      stacklevel=2)
    return lam2


def neumann_laplacian_1d(L: float, m: int) -> Mat:
    """Dense m-point discrete Neumann negative Laplacian (mirror boundaries).

    Second-difference stencil on cell centers with reflecting ends; symmetric,
    positive semidefinite, and exactly annihilates constants.
    """
    if m < 2:
        raise ValueError("need at least two cells")
    h = L / m
    a = np.zeros((m, m))
    for i in range(m):
        if i > 0:
            a[i, i - 1] = -1.0
            a[i, i] += 1.0
        if i < m - 1:
            a[i, i + 1] = -1.0
            a[i, i] += 1.0
    return a / h ** 2


def discrete_neumann_lambda2(L: float, m: int) -> float:
    """Second eigenvalue of the discrete operator; tends to (pi/L)^2."""
    # LAPACK here rather than the in-house solver: grids run to hundreds of
    # cells and the dense Jacobi sweeps are cubic with Python-level loops.
    w = np.linalg.eigvalsh(neumann_laplacian_1d(L, m))
    return float(w[1])


def load_edge_list(path, directed: bool = False) -> Graph:
    """Read a graph from text: one "u v" pair per line, 0-indexed.

    Blank lines and lines starting with # are skipped. Undirected edges are
    entered symmetrically.
    """
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {s!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: node ids must be integers") from exc
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: node ids must be nonnegative")
            pairs.append((u, v))
    if not pairs:
        raise ValueError(f"{path}: no edges found")
    n = max(max(u, v) for u, v in pairs) + 1
    a = np.zeros((n, n))
    for u, v in pairs:
        if u == v:
            raise ValueError(f"{path}: self-loop at node {u}")
        a[u, v] = 1.0
        if not directed:
            a[v, u] = 1.0
    return Graph(a, directed=directed)
