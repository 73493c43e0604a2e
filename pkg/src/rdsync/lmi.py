"""Assembly and verification of the matrix-inequality certificates.

Two constraint systems are built from an envelope, a coupling strength
lambda2, and a diffusion matrix D:

* vertex form: one strict inequality sym(P(Z_k - lambda2*D)) < 0 per hull
  vertex, one weak inequality per cone generator;
* composite form: a single strict inequality on a bordered matrix that
  couples P with one scalar multiplier per rank-one box term, avoiding the
  2^l vertex enumeration.

Both carry, when applicable, the weak diffusion-alignment inequality
sym(P D) >= 0 (stored negated, as sym(P(-D)) <= 0). Certificates are checked
here independently of any solver, using only the Jacobi eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .envelope import Envelope
from .numerics import Mat, SymMat, as_mat, max_eig_of_sym_part, sym_eigs

MARGIN_TOL = 1e-7
WEAK_TOL = 1e-9
VERTEX_CAP = 1 << 20


def diffusion_matrix(D, n: int) -> Mat:
    """Normalize a diffusion specification to an n-by-n array.

    Accepts a scalar (isotropic), a length-n vector of per-species rates, or
    a full matrix.
    """
    arr = np.asarray(D, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(n)
    if arr.ndim == 1:
        if arr.size != n:
            raise ValueError(f"diffusion vector has length {arr.size}, expected {n}")
        return np.diag(arr)
    m = as_mat(arr)
    if m.shape != (n, n):
        raise ValueError(f"diffusion matrix has shape {m.shape}, expected ({n}, {n})")
    return m


def _is_diag_nonneg(D: Mat) -> bool:
    return bool(np.all(D == np.diag(np.diag(D))) and np.all(np.diag(D) >= 0.0))


def _is_isotropic(D: Mat) -> bool:
    d = D[0, 0]
    return bool(d >= 0.0 and np.array_equal(D, d * np.eye(D.shape[0])))


@dataclass(frozen=True)
class LmiConstraint:
    """One affine constraint sym(V @ matrix) < 0 (strict) or <= 0 (weak).

    V is the full decision variable when on_full is set, else just its
    leading P block.
    """

    matrix: Mat
    strict: bool
    label: str
    on_full: bool = True


@dataclass(frozen=True)
class VarSpec:
    structure: str  # "full" | "diagonal" (shape of the P block)
    n: int
    n_mult: int = 0

    def __post_init__(self):
        if self.structure not in ("full", "diagonal"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.n < 1 or self.n_mult < 0:
            raise ValueError("bad variable dimensions")

    @property
    def total_dim(self) -> int:
        return self.n + self.n_mult


@dataclass(frozen=True)
class LmiProblem:
    var_spec: VarSpec
    constraints: tuple[LmiConstraint, ...]
    omitted_terms: int = 0

    @property
    def structure_label(self) -> str:
        if self.var_spec.n_mult > 0:
            return "block-diagonal"
        return self.var_spec.structure


@dataclass
class Certificate:
    structure: str  # "full" | "diagonal" | "block-diagonal"
    P: SymMat
    q: tuple[float, ...] = ()
    margin: float = math.nan
    epsilon: float = math.nan


def vertex_lmis(env: Envelope, lam2: float, D, structure: str = "full") -> LmiProblem:
    """Strict inequality per hull vertex, weak per cone generator.

    Past 2^20 vertices enumeration is refused; the composite form handles
    those sizes with one multiplier per box term instead.
    """
    if lam2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    n = env.n
    Dm = diffusion_matrix(D, n)
    cons = []
    for k, z in enumerate(env.vertices(cap=VERTEX_CAP)):
        cons.append(LmiConstraint(z - lam2 * Dm, True, f"vertex[{k}]"))
    for k, s in enumerate(env.cone_gens):
        cons.append(LmiConstraint(as_mat(s), False, f"cone[{k}]"))
    if not (structure == "diagonal" and _is_diag_nonneg(Dm)) and not _is_isotropic(Dm):
        cons.append(LmiConstraint(-Dm, False, "coupling"))
    return LmiProblem(VarSpec(structure, n), tuple(cons))


def composite_matrix(env: Envelope, lam2: float, D, structure: str = "full"):
    """The bordered matrix [[A0 - lambda2*D, B], [C^T, -I]] and the kept terms.

    Under diagonal structure, box terms flagged diagonal-nonpositive are
    omitted: with diagonal P they contribute sym(P B C^T) <= 0 on their own,
    so dropping them (and their multiplier) never loses feasibility.
    """
    if env.a0 is None:
        raise ValueError("composite form needs box data (nominal matrix plus rank-one terms)")
    n = env.n
    Dm = diffusion_matrix(D, n)
    kept = [t for t in env.box_terms
            if not (structure == "diagonal" and t.diag_nonpos)]
    l = len(kept)
    acal = np.zeros((n + l, n + l))
    acal[:n, :n] = env.a0 - lam2 * Dm
    for i, t in enumerate(kept):
        acal[:n, n + i] = t.B
        acal[n + i, :n] = t.C
        acal[n + i, n + i] = -1.0
    return acal, kept, Dm


def composite_lmi(env: Envelope, lam2: float, D, structure: str = "full") -> LmiProblem:
    """Single strict constraint on the bordered matrix, multipliers included.

    Weak cone and diffusion-alignment constraints, when present, act on the
    P block alone.
    """
    if lam2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    acal, kept, Dm = composite_matrix(env, lam2, D, structure)
    n = env.n
    cons = [LmiConstraint(acal, True, "composite")]
    for k, s in enumerate(env.cone_gens):
        cons.append(LmiConstraint(as_mat(s), False, f"cone[{k}]", on_full=False))
    if not (structure == "diagonal" and _is_diag_nonneg(Dm)) and not _is_isotropic(Dm):
        cons.append(LmiConstraint(-Dm, False, "coupling", on_full=False))
    return LmiProblem(VarSpec(structure, n, len(kept)), tuple(cons),
                      omitted_terms=env.n_box - len(kept))


@dataclass
class CheckEntry:
    label: str
    strict: bool
    lam_max: float
    normalizer: float

    @property
    def margin(self) -> float:
        return -self.lam_max

    @property
    def normalized_margin(self) -> float:
        return -self.lam_max / self.normalizer


@dataclass
class CheckReport:
    valid: bool
    margin: float  # min over strict constraints of -lam_max, unnormalized
    normalized_margin: float
    p_min_eig: float
    entries: list[CheckEntry] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)


def certificate_check(cert: Certificate, problem: LmiProblem,
                      margin_tol: float = MARGIN_TOL,
                      weak_tol: float = WEAK_TOL) -> CheckReport:
    """Re-evaluate every constraint at the certificate's variables.

    Solver-independent: margins come from the Jacobi eigensolver. Strict
    constraints must clear margin_tol after normalizing by one plus the
    Frobenius norm of the constraint matrix; weak ones may not exceed
    weak_tol. P must be positive definite and all multipliers positive.
    """
    spec = problem.var_spec
    if cert.P.dim != spec.n:
        raise ValueError(f"certificate P is {cert.P.dim}-dimensional, problem wants {spec.n}")
    if len(cert.q) != spec.n_mult:
        raise ValueError(f"certificate has {len(cert.q)} multipliers, problem wants {spec.n_mult}")
    if spec.structure == "diagonal" and np.any(cert.P.a != np.diag(np.diag(cert.P.a))):
        raise ValueError("diagonal-structure problem given a non-diagonal P")

    messages = []
    p_block = cert.P
    if spec.n_mult:
        full = np.zeros((spec.total_dim, spec.total_dim))
        full[:spec.n, :spec.n] = cert.P.a
        full[spec.n:, spec.n:] = np.diag(cert.q)
        v_full = SymMat(full)
    else:
        v_full = p_block

    entries = []
    ok = True
    for c in problem.constraints:
        v = v_full if c.on_full else p_block
        lam = max_eig_of_sym_part(c.matrix, v)
        norm = 1.0 + float(np.linalg.norm(c.matrix))
        entries.append(CheckEntry(c.label, c.strict, lam, norm))
        if c.strict:
            if not lam <= -margin_tol * norm:
                ok = False
                messages.append(f"strict constraint {c.label} short: lam_max={lam:.3e}")
        else:
            if not lam <= weak_tol:
                ok = False
                messages.append(f"weak constraint {c.label} violated: lam_max={lam:.3e}")

    w, _ = sym_eigs(cert.P)
    p_min = float(w[0])
    if not p_min > 0.0:
        ok = False
        messages.append(f"P not positive definite: min eig {p_min:.3e}")
    if any(not qi > 0.0 for qi in cert.q):
        ok = False
        messages.append("nonpositive multiplier in certificate")

    strict_entries = [e for e in entries if e.strict]
    margin = min((e.margin for e in strict_entries), default=math.inf)
    nmargin = min((e.normalized_margin for e in strict_entries), default=math.inf)
    return CheckReport(ok, margin, nmargin, p_min, entries, messages)


def certified_epsilon(cert: Certificate, env: Envelope, lam2: float, D,
                      cap: int = VERTEX_CAP) -> float:
    """Certified strictness constant over the whole envelope.

    By convexity the worst case over the hull is attained at a vertex, so
    this is the negated largest eigenvalue of sym(P(Z_k - lambda2*D)) over
    vertices k. When enumeration would exceed the cap and multipliers are
    available, the composite margin is returned instead; it lower-bounds the
    vertex value.
    """
    n = env.n
    Dm = diffusion_matrix(D, n)
    try:
        verts = env.vertices(cap=cap)
    except ValueError:
        if not cert.q:
            raise
        structure = "full" if len(cert.q) == env.n_box else "diagonal"
        acal, kept, _ = composite_matrix(env, lam2, Dm, structure)
        if len(kept) != len(cert.q):
            raise ValueError("multiplier count matches neither full nor reduced term list")
        full = np.zeros((n + len(kept), n + len(kept)))
        full[:n, :n] = cert.P.a
        full[n:, n:] = np.diag(cert.q)
        return -max_eig_of_sym_part(acal, SymMat(full))
    worst = max(max_eig_of_sym_part(z - lam2 * Dm, cert.P) for z in verts)
    return -worst


def lemma_s_converse_search(P: SymMat, env: Envelope, lam2: float, D):
    """Recover the scalar multiplier turning a vertex certificate composite.

    Only the single-box-term case: given P strictly feasible for both
    vertices, a q1 > 0 making the bordered matrix negative definite exists;
    the composite margin is concave in q1, so a golden-section search on
    log q1 finds it. Returns q1, or None when the margin never clears zero
    (resolution failure on a too-thin certificate).
    """
    if env.n_box != 1:
        raise ValueError("converse search handles exactly one box term")
    acal, kept, _ = composite_matrix(env, lam2, D, structure="full")
    n = env.n

    def margin(log_q: float) -> float:
        full = np.zeros((n + 1, n + 1))
        full[:n, :n] = P.a
        full[n, n] = 10.0 ** log_q
        return -max_eig_of_sym_part(acal, SymMat(full))

    lo, hi = -12.0, 12.0
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = margin(c), margin(d)
    while b - a > 1e-10:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = margin(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = margin(d)
    best = 0.5 * (a + b)
    if margin(best) > 0.0:
        return 10.0 ** best
    return None


def problem_dump(problem: LmiProblem) -> str:
    """Human-readable rendering of the constraint system, 17 significant digits."""
    spec = problem.var_spec
    lines = [
        f"lmi problem: n={spec.n} multipliers={spec.n_mult} "
        f"structure={problem.structure_label}",
    ]
    if problem.omitted_terms:
        lines.append(f"omitted diagonal-nonpositive terms: {problem.omitted_terms}")
    for c in problem.constraints:
        kind = "strict" if c.strict else "weak"
        block = "full" if c.on_full else "P"
        lines.append(f"constraint {c.label} ({kind}, on {block} block):")
        for row in np.atleast_2d(c.matrix):
            lines.append("  " + " ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"
