"""Dense symmetric linear algebra used by every other module.

All matrices here are small (certificate dimensions, n + multipliers, rarely
above 15), so the eigensolver is a plain cyclic Jacobi iteration: deterministic,
dependency-free, and accurate to near machine precision on symmetric input.
"""

from __future__ import annotations

import numpy as np

Mat = np.ndarray

_JACOBI_TOL = 1e-13
_SYM_TOL = 1e-12


def as_mat(entries) -> Mat:
    """Validate a general real matrix: 2-D, finite entries."""
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


class SymMat:
    """Real symmetric matrix with symmetry enforced at construction.

    Mild asymmetry (below 1e-12 relative) is averaged away; anything larger is
    rejected so that drift cannot creep into constraint assembly unnoticed.
    """

    __slots__ = ("a",)

    def __init__(self, entries):
        a = as_mat(entries)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"not square: shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("dimension must be at least 1")
        scale = max(1.0, float(np.abs(a).max()))
        skew = float(np.abs(a - a.T).max())
        if skew > _SYM_TOL * scale:
            raise ValueError(f"asymmetry {skew:.3e} exceeds tolerance")
        self.a = 0.5 * (a + a.T)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __repr__(self) -> str:
        return f"SymMat(dim={self.dim})"


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi sweeps. Returns (eigenvalues ascending, eigenvectors)."""
    n = a.shape[0]
    m = a.copy()
    v = np.eye(n)
    if n == 1:
        return m[0, :1].copy(), v
    norm = np.linalg.norm(m)
    if norm == 0.0:
        return np.zeros(n), v
    for _ in range(60):  # sweeps; quadratic convergence ends this early
        # Sum the squared off-diagonal entries directly. The tempting
        # shortcut norm(m)^2 - norm(diag)^2 cancels catastrophically once
        # the off-diagonal part falls below sqrt(eps) * norm, which would
        # stop the sweeps about seven decades short of the tolerance.
        off = np.sqrt(np.sum(np.square(m - np.diag(np.diag(m)))))
        if off < _JACOBI_TOL * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rp, rq = m[p, :].copy(), m[q, :].copy()
                m[p, :] = c * rp - s * rq
                m[q, :] = s * rp + c * rq
                cp, cq = m[:, p].copy(), m[:, q].copy()
                m[:, p] = c * cp - s * cq
                m[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(m).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sym_eigs(m: SymMat) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    return _jacobi(m.a)


def spectral_norm(m) -> float:
    """Largest singular value (induced 2-norm) of a general matrix."""
    a = as_mat(m)
    g = SymMat(a.T @ a)
    w, _ = sym_eigs(g)
    return float(np.sqrt(max(0.0, w[-1])))


def min_eig_of_sym_part(m, p: SymMat) -> float:
    """Smallest eigenvalue of p@m + m.T@p.

    The quantity certifying the Lyapunov inequality at a fixed matrix m: the
    symmetrized form must be negative definite, and its extreme eigenvalues
    give the margins.
    """
    a = as_mat(m)
    if a.shape != (p.dim, p.dim):
        raise ValueError(f"dimension mismatch: m {a.shape} vs p dim {p.dim}")
    s = SymMat(p.a @ a + a.T @ p.a)
    w, _ = sym_eigs(s)
    return float(w[0])


def max_eig_of_sym_part(m, p: SymMat) -> float:
    """Largest eigenvalue of p@m + m.T@p (the binding side of strictness)."""
    a = as_mat(m)
    if a.shape != (p.dim, p.dim):
        raise ValueError(f"dimension mismatch: m {a.shape} vs p dim {p.dim}")
    s = SymMat(p.a @ a + a.T @ p.a)
    w, _ = sym_eigs(s)
    return float(w[-1])


def is_positive_definite(p: SymMat, tol: float = 0.0) -> bool:
    w, _ = sym_eigs(p)
    return bool(w[0] > tol)
