"""Feasibility decisions for the matrix-inequality systems.

Strict feasibility is posed as margin maximization: find the largest t such
that every strict constraint, normalized by one plus the Frobenius norm of
its data matrix, clears -t. Homogeneity lets us pin P >= I; a trace cap
keeps the search bounded. A conic solver proposes a certificate, and the
result is only reported feasible after lmi.certificate_check confirms it
with the package's own eigensolver. Infeasibility is declared by margin
shortfall at optimality, not by a dual certificate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .lmi import Certificate, LmiProblem, certificate_check
from .numerics import SymMat

_SOLVERS = ("CLARABEL", "SCS")


@dataclass(frozen=True)
class SolveOptions:
    margin_tol: float = 1e-7
    scale_cap: float = 1e6  # trace(P) and each multiplier bounded by this times n
    margin_ceiling: float = 1.0
    feas_tol: float = 1e-9
    max_iters: int = 200000

    def __post_init__(self):
        if not (self.margin_tol > 0 and self.feas_tol > 0 and self.scale_cap > 0
                and self.margin_ceiling > 0 and self.max_iters > 0):
            raise ValueError("solve options must be positive")


@dataclass
class FeasibilityResult:
    status: str  # "feasible" | "infeasible" | "inconclusive"
    certificate: Certificate | None
    best_margin: float  # normalized margin (the solver's t scale)
    diagnostics: dict = field(default_factory=dict)


def _sym(expr):
    return expr + expr.T


def solve_feasibility(prob: LmiProblem, opts: SolveOptions = SolveOptions()) -> FeasibilityResult:
    """Maximize the normalized strictness margin and verify the outcome.

    The margin is capped at margin_ceiling so easy instances get interior
    optima instead of pressing P against the trace cap. Feasible status
    requires both t* >= margin_tol and an independent certificate_check
    pass; a solver claiming optimality below margin_tol yields infeasible;
    anything else is inconclusive.
    """
    spec = prob.var_spec
    n, l = spec.n, spec.n_mult
    t = cp.Variable()
    if spec.structure == "diagonal":
        p_diag = cp.Variable(n)
        p_expr = cp.diag(p_diag)
        cons = [p_diag >= 1.0, cp.sum(p_diag) <= opts.scale_cap * n]
    else:
        p_var = cp.Variable((n, n), symmetric=True)
        p_expr = p_var
        cons = [p_var - np.eye(n) >> 0, cp.trace(p_var) <= opts.scale_cap * n]
    if l:
        q_var = cp.Variable(l)
        cons += [q_var >= 0.0, q_var <= opts.scale_cap * n]
        full_expr = cp.bmat([
            [p_expr, np.zeros((n, l))],
            [np.zeros((l, n)), cp.diag(q_var)],
        ])
    else:
        q_var = None
        full_expr = p_expr
    cons.append(t <= opts.margin_ceiling)

    for c in prob.constraints:
        v = full_expr if c.on_full else p_expr
        dim = c.matrix.shape[0]
        s = _sym(v @ c.matrix)
        if c.strict:
            norm = 1.0 + float(np.linalg.norm(c.matrix))
            cons.append(s + (t * norm) * np.eye(dim) << 0)
        else:
            cons.append(s << 0)

    cvx = cp.Problem(cp.Maximize(t), cons)

    def extract() -> Certificate:
        if spec.structure == "diagonal":
            arr = np.diag(np.asarray(p_diag.value, dtype=float))
        else:
            raw = np.asarray(p_var.value, dtype=float)
            arr = 0.5 * (raw + raw.T)
        q = tuple(float(v) for v in q_var.value) if l else ()
        return Certificate(prob.structure_label, SymMat(arr), q)

    attempts = []
    for solver in _SOLVERS:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if solver == "SCS":
                    cvx.solve(solver=solver, verbose=False,
                              eps=opts.feas_tol, max_iters=opts.max_iters)
                else:
                    cvx.solve(solver=solver, verbose=False)
        except cp.error.SolverError as exc:
            attempts.append({"solver": solver, "error": str(exc)})
            continue
        t_star = None if t.value is None else float(t.value)
        attempts.append({"solver": solver, "status": cvx.status, "t_star": t_star})
        if t_star is None:
            continue
        if t_star < opts.margin_tol:
            if cvx.status == "optimal":
                return FeasibilityResult("infeasible", None, t_star,
                                         {"attempts": attempts})
            continue
        cert = extract()
        report = certificate_check(cert, prob, margin_tol=opts.margin_tol)
        attempts[-1]["verified"] = report.valid
        if report.valid:
            # Presentation rescale: homogeneity allows P (and q) to be divided
            # by lambda_min(P), pinning the certificate at unit scale. Keep it
            # only if the rescaled copy still verifies; validity was already
            # decided on the solver's own output.
            scale = report.p_min_eig
            if scale > 1.0:
                scaled = Certificate(cert.structure, SymMat(cert.P.a / scale),
                                     tuple(v / scale for v in cert.q))
                s_report = certificate_check(scaled, prob, margin_tol=opts.margin_tol)
                if s_report.valid:
                    cert, report = scaled, s_report
            cert.margin = report.margin
            cert.epsilon = report.margin
            return FeasibilityResult("feasible", cert, report.normalized_margin,
                                     {"attempts": attempts})

    best = max((a.get("t_star") for a in attempts
                if a.get("t_star") is not None), default=math.nan)
    return FeasibilityResult("inconclusive", None, best, {"attempts": attempts})


@dataclass
class ThresholdResult:
    mu_star: float
    bracket: tuple[float, float]
    lo_result: FeasibilityResult
    hi_result: FeasibilityResult
    n_solves: int


def threshold_search(builder, bracket, tol: float = 1e-4,
                     opts: SolveOptions = SolveOptions()) -> ThresholdResult:
    """Bisect a scalar coupling parameter to the feasibility boundary.

    builder maps mu to an LmiProblem, monotone in the sense that feasibility
    at mu implies feasibility above. Returns the smallest mu found feasible
    (the final upper endpoint) together with the endpoint results.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    r_lo = solve_feasibility(builder(lo), opts)
    r_hi = solve_feasibility(builder(hi), opts)
    n_solves = 2
    if r_lo.status == "feasible" or r_hi.status != "feasible":
        raise ValueError(
            "bracket does not straddle the boundary: "
            f"status at {lo} is {r_lo.status}, at {hi} is {r_hi.status}")
    best_hi = r_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r_mid = solve_feasibility(builder(mid), opts)
        n_solves += 1
        if r_mid.status == "feasible":
            hi, best_hi = mid, r_mid
        else:
            lo = mid
    return ThresholdResult(hi, (lo, hi), r_lo, best_hi, n_solves)


@dataclass
class GridSearchResult:
    status: str  # "feasible" | "infeasible"
    best_margin: float  # normalized, at the best grid point
    best_p: np.ndarray


def grid_search_diagonal(prob: LmiProblem, points: int = 20,
                         lo: float = 1e-3, hi: float = 1e3,
                         feas_margin: float = 1e-3) -> GridSearchResult:
    """Brute-force cross-check over diagonal P on a log grid.

    Independent of the conic solver and of the Jacobi eigensolver (margins
    come from numpy's eigensolver), usable only for multiplier-free diagonal
    problems with n <= 3. Decisions are trustworthy away from the boundary;
    agreement with solve_feasibility is expected at margins above
    feas_margin.
    """
    spec = prob.var_spec
    if spec.structure != "diagonal" or spec.n_mult != 0 or spec.n > 3:
        raise ValueError("grid search needs a diagonal, multiplier-free problem with n <= 3")
    n = spec.n
    axis = np.logspace(math.log10(lo), math.log10(hi), points)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)

    strict_margin = np.full(pts.shape[0], np.inf)
    weak_ok = np.ones(pts.shape[0], dtype=bool)
    for c in prob.constraints:
        scaled = pts[:, :, None] * c.matrix[None, :, :]
        lam = np.linalg.eigvalsh(scaled + scaled.transpose(0, 2, 1))[:, -1]
        if c.strict:
            norm = 1.0 + float(np.linalg.norm(c.matrix))
            strict_margin = np.minimum(strict_margin, -lam / norm)
        else:
            weak_ok &= lam <= 1e-9
    score = np.where(weak_ok, strict_margin, -np.inf)
    best = int(np.argmax(score))
    margin = float(score[best])
    status = "feasible" if margin >= feas_margin else "infeasible"
    return GridSearchResult(status, margin, pts[best].copy())
