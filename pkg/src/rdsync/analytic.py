"""Closed-form certificates that bypass the semidefinite solver.

Three routes: the secant criterion deciding diagonal stability of cyclic
negative-feedback matrices, the norm condition comparing sup||J|| against
lambda2 times the smallest diffusion rate, and the explicit two-species
excitable-system certificate P = diag(1/c, c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envelope import Envelope, FhnParams, GoodwinParams, fhn_envelope
from .lmi import (Certificate, LmiProblem, certificate_check, diffusion_matrix,
                  vertex_lmis)
from .numerics import SymMat, spectral_norm


@dataclass(frozen=True)
class CyclicSpec:
    """Cyclic matrix with stable diagonal and one negative-feedback loop.

    The matrix is diag(-alphas) plus the gains betas[0..n-2] on the first
    subdiagonal and -betas[n-1] in the top-right corner.
    """

    alphas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        n = len(self.alphas)
        if n < 3:
            raise ValueError("cyclic secant criterion needs n >= 3")
        if len(self.betas) != n:
            raise ValueError("alphas and betas must have equal length")
        if any(not a > 0 for a in self.alphas):
            raise ValueError("diagonal rates must be positive")
        if any(b < 0 for b in self.betas):
            raise ValueError("gains must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.alphas)

    def matrix(self) -> np.ndarray:
        n = self.n
        m = np.diag([-a for a in self.alphas])
        for i in range(n - 1):
            m[i + 1, i] = self.betas[i]
        m[0, n - 1] = -self.betas[n - 1]
        return m


@dataclass(frozen=True)
class SecantResult:
    ratio: float
    threshold: float
    passes: bool


def secant_criterion(spec: CyclicSpec) -> SecantResult:
    """Gain-ratio test equivalent to diagonal stability of the cyclic matrix.

    Passes iff prod(betas)/prod(alphas) < sec(pi/n)^n, strictly.
    """
    ratio = math.prod(spec.betas) / math.prod(spec.alphas)
    threshold = (1.0 / math.cos(math.pi / spec.n)) ** spec.n
    return SecantResult(ratio, threshold, ratio < threshold)


def cyclic_diagonal_problem(spec: CyclicSpec) -> LmiProblem:
    """Diagonal-P Lyapunov problem for the cyclic matrix itself."""
    return vertex_lmis(Envelope(spec.matrix()), 0.0, 0.0, "diagonal")


def goodwin_secant_threshold(p: GoodwinParams = GoodwinParams(),
                             equal_diffusion: bool = True) -> float:
    """Coupling strength at which the Goodwin loop passes the secant test.

    With identical per-species coupling mu, the criterion reduces to
    b1*b2*V1/K1^2 = 4*(a1+mu)*(a2+mu)*mu; the right side is increasing in
    mu, so bisection pins the root.
    """
    if not equal_diffusion:
        raise ValueError("closed form available only for identical per-species coupling")
    lhs = p.b1 * p.b2 * p.V1 / p.K1 ** 2

    def rhs(mu: float) -> float:
        return 4.0 * (p.a1 + mu) * (p.a2 + mu) * mu

    hi = 1.0
    while rhs(hi) < lhs:
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if rhs(mid) < lhs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class OthmerResult:
    sup_norm: float
    bound: float
    passes: bool
    note: str = "operator norm taken as the induced 2-norm"


def othmer_check(env: Envelope, lam2: float, D) -> OthmerResult:
    """Norm test sup||J|| < lambda2 * min_i d_i.

    The sup over the envelope is exact: the norm is convex and the envelope
    affine in its coefficients, so the maximum sits at a hull vertex. Any
    nonzero cone generator makes the sup infinite.
    """
    n = env.n
    Dm = diffusion_matrix(D, n)
    d = np.diag(Dm)
    if np.any(Dm != np.diag(d)) or np.any(d <= 0):
        raise ValueError("norm condition needs diagonal diffusion with positive entries")
    bound = float(lam2 * d.min())
    if any(np.any(np.asarray(g) != 0) for g in env.cone_gens):
        return OthmerResult(math.inf, bound, False)
    sup = max(spectral_norm(z) for z in env.vertices())
    return OthmerResult(sup, bound, sup < bound)


class CertificateRefusal(Exception):
    """Raised when the requested closed-form certificate provably cannot exist."""


def fhn_certificate(p: FhnParams, lam2: float, D) -> Certificate:
    """Explicit certificate P = diag(1/c, c) for the excitable two-species model.

    Valid exactly when lambda2*d1 exceeds the activator gain c; the
    symmetrized form is then diagonal with entries
    2*(c*(1 - x1^2) - lambda2*d1)/c and -2*(b + c*lambda2*d2), worst at
    x1 = 0. The margin is evaluated numerically through certificate_check.
    """
    Dm = diffusion_matrix(D, 2)
    d = np.diag(Dm)
    if np.any(Dm != np.diag(d)) or np.any(d <= 0):
        raise ValueError("certificate construction needs diagonal diffusion with positive entries")
    if not lam2 * d[0] > p.c:
        raise CertificateRefusal(
            f"needs lambda2*d1 > c, got lambda2*d1 = {lam2 * d[0]:.6g} "
            f"with c = {p.c:.6g}")
    cert = Certificate("diagonal", SymMat(np.diag([1.0 / p.c, p.c])))
    problem = vertex_lmis(fhn_envelope(p), lam2, Dm, "diagonal")
    report = certificate_check(cert, problem)
    if not report.valid:
        raise CertificateRefusal(
            "strictness margin too thin at lambda2*d1 = "
            f"{lam2 * d[0]:.6g} vs c = {p.c:.6g}: " + "; ".join(report.messages))
    cert.margin = report.margin
    cert.epsilon = report.margin
    return cert
