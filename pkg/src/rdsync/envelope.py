"""Vector fields, analytic Jacobians, and constant-matrix Jacobian envelopes.

An envelope is a set of constant matrices guaranteed to contain J(x) for every
state x in the model's domain. Two shapes are supported:

* box form: A0 plus rank-one terms gamma_i * B_i C_i^T with gamma_i in [0,1]
  (optionally augmented with conic ray generators);
* vertex form: an explicit list of convex-hull vertices plus ray generators.

The three built-in biochemical models (Goodwin, Goldbeter, FitzHugh-Nagumo)
come with both the vector field and the hand-derived envelope; the Lur'e
construction builds an envelope from a linear system and a slope bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .numerics import as_mat


@dataclass(frozen=True)
class BoxTerm:
    """Rank-one envelope term B C^T, coefficient ranging over [0,1]."""

    B: np.ndarray
    C: np.ndarray
    diag_nonpos: bool = False

    def matrix(self) -> np.ndarray:
        return np.outer(self.B, self.C)


@dataclass(frozen=True)
class Envelope:
    a0: np.ndarray | None
    box_terms: tuple[BoxTerm, ...] = ()
    cone_gens: tuple[np.ndarray, ...] = ()
    conv_vertices: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if self.a0 is None and not self.conv_vertices:
            raise ValueError("envelope needs either a nominal matrix or explicit vertices")
        if self.a0 is not None:
            object.__setattr__(self, "a0", as_mat(self.a0))

    @property
    def n(self) -> int:
        if self.a0 is not None:
            return self.a0.shape[0]
        return self.conv_vertices[0].shape[0]

    @property
    def n_box(self) -> int:
        return len(self.box_terms)

    def vertices(self, cap: int = 1 << 20) -> list[np.ndarray]:
        """Convex-hull vertices: explicit if given, else all 2^l box corners."""
        if self.conv_vertices:
            return [as_mat(z) for z in self.conv_vertices]
        l = len(self.box_terms)
        if 2 ** l > cap:
            raise ValueError(
                f"2^{l} vertices exceed the enumeration cap; use the composite form"
            )
        verts = []
        for mask in range(2 ** l):
            z = self.a0.copy()
            for i, term in enumerate(self.box_terms):
                if mask >> i & 1:
                    z = z + term.matrix()
            verts.append(z)
        return verts


@dataclass(frozen=True)
class StateDomain:
    """Description of the set the certificate must cover."""

    kind: str  # "nonneg" | "reals" | "box"
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        if self.kind == "reals":
            return True
        if self.kind == "nonneg":
            return bool(np.all(x >= -tol))
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


@dataclass(frozen=True)
class Model:
    n: int
    f: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    state_domain: StateDomain
    name: str = ""


# ---------------------------------------------------------------------------
# Goodwin: three-species negative-feedback loop (mRNA, enzyme, product).

@dataclass(frozen=True)
class GoodwinParams:
    a1: float = 0.01
    a2: float = 0.01
    b1: float = 0.01
    b2: float = 0.01
    V1: float = 9.0
    V3: float = 1.0
    K1: float = 1.0
    K3: float = 1.0

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if not val > 0:
                raise ValueError(f"Goodwin parameter {name} must be positive, got {val}")


def goodwin_model(p: GoodwinParams = GoodwinParams()) -> Model:
    # f and jac broadcast over leading axes (state on the last axis), so the
    # simulators can evaluate whole grids in one call.
    def f(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([
            -p.a1 * x1 + p.V1 / (p.K1 + x3),
            -p.a2 * x2 + p.b1 * x1,
            -p.V3 * x3 / (p.K3 + x3) + p.b2 * x2,
        ], axis=-1)

    def jac(x):
        x3 = x[..., 2]
        z = np.zeros_like(x3)
        rows = [
            np.stack([np.full_like(x3, -p.a1), z, -p.V1 / (p.K1 + x3) ** 2], axis=-1),
            np.stack([np.full_like(x3, p.b1), np.full_like(x3, -p.a2), z], axis=-1),
            np.stack([z, np.full_like(x3, p.b2), -p.V3 * p.K3 / (p.K3 + x3) ** 2], axis=-1),
        ]
        return np.stack(rows, axis=-2)

    return Model(3, f, jac, StateDomain("nonneg"), name="goodwin")


def goodwin_envelope(p: GoodwinParams = GoodwinParams()) -> Envelope:
    """Box envelope of the Goodwin Jacobian over the nonnegative orthant.

    The two state-dependent entries are the repression slope, in
    (0, V1/K1^2], and the product degradation slope, in (0, V3/K3]; both are
    functions of x3 alone, giving two rank-one terms on the third column.
    """
    a0 = np.array([
        [-p.a1, 0.0, 0.0],
        [p.b1, -p.a2, 0.0],
        [0.0, p.b2, 0.0],
    ])
    e3 = np.array([0.0, 0.0, 1.0])
    b_feedback = np.array([-p.V1 / p.K1 ** 2, 0.0, 0.0])
    b_degrade = np.array([0.0, 0.0, -p.V3 / p.K3])
    return Envelope(
        a0,
        box_terms=(
            BoxTerm(b_feedback, e3),
            BoxTerm(b_degrade, e3, diag_nonpos=True),
        ),
    )


# ---------------------------------------------------------------------------
# Goldbeter: five-species circadian oscillator (mRNA and PER phosphoforms).

@dataclass(frozen=True)
class GoldbeterParams:
    n: int = 4
    v_s: float = 0.76
    K_I: float = 1.0
    k_s: float = 0.38
    k1: float = 1.9
    k2: float = 1.3
    V1: float = 3.2
    V2: float = 1.58
    V3: float = 5.0
    V4: float = 2.5
    K1: float = 2.0
    K2: float = 2.0
    K3: float = 2.0
    K4: float = 2.0
    v_m: float = 0.65
    v_d: float = 0.95
    k_d: float = 0.2
    k_m: float = 0.5

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError(f"Hill exponent n must be a positive integer, got {self.n}")
        for name, val in self.__dict__.items():
            if name != "n" and not val > 0:
                raise ValueError(f"Goldbeter parameter {name} must be positive, got {val}")

    def phi_bounds(self) -> np.ndarray:
        """Upper bounds for the seven state-dependent slopes phi_1..phi_7."""
        n = self.n
        if n == 1:
            p5 = n * self.v_s / self.K_I ** n
        else:
            p5 = ((n + 1) ** 2 * self.v_s / (4 * n * self.K_I ** n)
                  * (self.K_I ** n * (n - 1) / (n + 1)) ** ((n - 1) / n))
        return np.array([
            self.V1 / self.K1, self.V2 / self.K2, self.V3 / self.K3,
            self.V4 / self.K4, p5, self.v_m / self.k_m, self.v_d / self.k_d,
        ])


def goldbeter_model(p: GoldbeterParams = GoldbeterParams()) -> Model:
    def f(x):
        M, P0, P1, P2, PN = (x[..., i] for i in range(5))
        r1 = p.V1 * P0 / (p.K1 + P0)
        r2 = p.V2 * P1 / (p.K2 + P1)
        r3 = p.V3 * P1 / (p.K3 + P1)
        r4 = p.V4 * P2 / (p.K4 + P2)
        return np.stack([
            p.v_s * p.K_I ** p.n / (p.K_I ** p.n + PN ** p.n) - p.v_m * M / (p.k_m + M),
            p.k_s * M - r1 + r2,
            r1 - r2 - r3 + r4,
            r3 - r4 - p.k1 * P2 + p.k2 * PN - p.v_d * P2 / (p.k_d + P2),
            p.k1 * P2 - p.k2 * PN,
        ], axis=-1)

    def jac(x):
        M, P0, P1, P2, PN = (x[..., i] for i in range(5))
        ph1 = p.K1 * p.V1 / (p.K1 + P0) ** 2
        ph2 = p.K2 * p.V2 / (p.K2 + P1) ** 2
        ph3 = p.K3 * p.V3 / (p.K3 + P1) ** 2
        ph4 = p.K4 * p.V4 / (p.K4 + P2) ** 2
        kin = p.K_I ** p.n
        ph5 = p.n * p.v_s * kin * PN ** (p.n - 1) / (kin + PN ** p.n) ** 2
        ph6 = p.v_m * p.k_m / (p.k_m + M) ** 2
        ph7 = p.v_d * p.k_d / (p.k_d + P2) ** 2
        z = np.zeros_like(M)

        def const(v):
            return np.full_like(M, v)

        rows = [
            np.stack([-ph6, z, z, z, -ph5], axis=-1),
            np.stack([const(p.k_s), -ph1, ph2, z, z], axis=-1),
            np.stack([z, ph1, -ph2 - ph3, ph4, z], axis=-1),
            np.stack([z, z, ph3, -p.k1 - ph4 - ph7, const(p.k2)], axis=-1),
            np.stack([z, z, z, const(p.k1), const(-p.k2)], axis=-1),
        ]
        return np.stack(rows, axis=-2)

    return Model(5, f, jac, StateDomain("nonneg"), name="goldbeter")


def goldbeter_envelope(p: GoldbeterParams = GoldbeterParams(),
                       overparameterize: bool = False) -> Envelope:
    """Box envelope of the Goldbeter Jacobian.

    Default grouping exploits that phi_1..phi_4 each appear twice (a species
    loses what the next one gains), giving one two-entry rank-one term per
    nonlinearity. With overparameterize=True each occurrence gets its own
    term, which is the deliberately conservative variant used for comparison.
    """
    ph = p.phi_bounds()
    a0 = np.zeros((5, 5))
    a0[1, 0] = p.k_s
    a0[3, 3] = -p.k1
    a0[3, 4] = p.k2
    a0[4, 3] = p.k1
    a0[4, 4] = -p.k2
    e = np.eye(5)
    if not overparameterize:
        terms = (
            BoxTerm(np.array([0.0, -ph[0], ph[0], 0.0, 0.0]), e[1]),
            BoxTerm(np.array([0.0, ph[1], -ph[1], 0.0, 0.0]), e[2]),
            BoxTerm(np.array([0.0, 0.0, -ph[2], ph[2], 0.0]), e[2]),
            BoxTerm(np.array([0.0, 0.0, ph[3], -ph[3], 0.0]), e[3]),
            BoxTerm(-ph[4] * e[0], e[4]),
            BoxTerm(-ph[5] * e[0], e[0], diag_nonpos=True),
            BoxTerm(-ph[6] * e[3], e[3], diag_nonpos=True),
        )
    else:
        terms = (
            BoxTerm(-ph[0] * e[1], e[1], diag_nonpos=True),
            BoxTerm(ph[0] * e[2], e[1]),
            BoxTerm(ph[1] * e[1], e[2]),
            BoxTerm(-ph[1] * e[2], e[2], diag_nonpos=True),
            BoxTerm(-ph[2] * e[2], e[2], diag_nonpos=True),
            BoxTerm(ph[2] * e[3], e[2]),
            BoxTerm(ph[3] * e[2], e[3]),
            BoxTerm(-ph[3] * e[3], e[3], diag_nonpos=True),
            BoxTerm(-ph[4] * e[0], e[4]),
            BoxTerm(-ph[5] * e[0], e[0], diag_nonpos=True),
            BoxTerm(-ph[6] * e[3], e[3], diag_nonpos=True),
        )
    return Envelope(a0, box_terms=terms)


# ---------------------------------------------------------------------------
# FitzHugh-Nagumo: neuron excitation; the activator slope is unbounded below.

@dataclass(frozen=True)
class FhnParams:
    a: float = 0.0
    b: float = 1.0
    c: float = 2.0

    def __post_init__(self):
        if not (self.b > 0 and self.c > 0):
            raise ValueError("FitzHugh-Nagumo needs b > 0 and c > 0")


def fhn_model(p: FhnParams = FhnParams()) -> Model:
    def f(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([
            p.c * (x1 - x1 ** 3 / 3.0 + x2),
            (-x1 - p.b * x2 + p.a) / p.c,
        ], axis=-1)

    def jac(x):
        x1 = x[..., 0]
        rows = [
            np.stack([p.c * (1.0 - x1 ** 2), np.full_like(x1, p.c)], axis=-1),
            np.stack([np.full_like(x1, -1.0 / p.c), np.full_like(x1, -p.b / p.c)], axis=-1),
        ]
        return np.stack(rows, axis=-2)

    return Model(2, f, jac, StateDomain("reals"), name="fhn")


def fhn_envelope(p: FhnParams = FhnParams()) -> Envelope:
    """Exact envelope: single vertex at x1 = 0 plus the ray -e1 e1^T.

    The only varying entry is c(1 - x1^2) = c - c*x1^2, so every Jacobian is
    the vertex plus a nonnegative multiple of the generator; nothing is lost.
    """
    z1 = np.array([[p.c, p.c], [-1.0 / p.c, -p.b / p.c]])
    s1 = np.zeros((2, 2))
    s1[0, 0] = -1.0
    return Envelope(None, conv_vertices=(z1,), cone_gens=(s1,))


def lure_envelope(A, B, C, gamma: float) -> Envelope:
    """Envelope for x' = Ax + B*phi(C^T x) with slope phi' bounded above by gamma."""
    A = as_mat(A)
    B = np.asarray(B, dtype=float).reshape(-1)
    C = np.asarray(C, dtype=float).reshape(-1)
    if not (A.shape[0] == A.shape[1] == B.size == C.size):
        raise ValueError("inconsistent dimensions in Lur'e data")
    bct = np.outer(B, C)
    return Envelope(None, conv_vertices=(A + gamma * bct,), cone_gens=(-bct,))


def envelope_from_dict(d: dict) -> Envelope:
    """Build an envelope from plain nested lists, e.g. parsed JSON config."""
    terms = tuple(
        BoxTerm(
            np.asarray(t["B"], dtype=float).reshape(-1),
            np.asarray(t["C"], dtype=float).reshape(-1),
            bool(t.get("diag_nonpos", False)),
        )
        for t in d.get("box_terms", ())
    )
    cone = tuple(as_mat(g) for g in d.get("cone_gens", ()))
    verts = tuple(as_mat(z) for z in d.get("conv_vertices", ()))
    a0 = d.get("a0")
    return Envelope(None if a0 is None else as_mat(a0),
                    box_terms=terms, cone_gens=cone, conv_vertices=verts)


# ---------------------------------------------------------------------------
# Membership audit.

@dataclass
class AuditReport:
    worst_violation: float
    flagged_samples: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.worst_violation == 0.0


def membership_audit(env: Envelope, model: Model,
                     samples: Sequence[np.ndarray]) -> AuditReport:
    """Check J(x) stays inside the envelope at each sample state.

    Box envelopes get a per-entry interval check (each varying entry of J must
    lie between the extreme values its box terms allow). Single-vertex
    envelopes with one ray are decomposed exactly: J - Z1 must be a
    nonnegative multiple of the generator.
    """
    worst = 0.0
    flagged = []
    if env.conv_vertices and len(env.conv_vertices) == 1 and len(env.cone_gens) == 1:
        z1 = env.conv_vertices[0]
        s1 = env.cone_gens[0]
        ss = float(np.sum(s1 * s1))
        for x in samples:
            x = np.asarray(x, dtype=float)
            if not model.state_domain.contains(x):
                flagged.append(x)
            r = model.jac(x) - z1
            omega = float(np.sum(r * s1)) / ss
            resid = float(np.abs(r - omega * s1).max())
            worst = max(worst, resid, -min(omega, 0.0))
        return AuditReport(worst, flagged)
    if env.a0 is None:
        raise ValueError("audit supports box envelopes and single vertex+ray envelopes")
    lo = np.zeros_like(env.a0)
    hi = np.zeros_like(env.a0)
    for term in env.box_terms:
        m = term.matrix()
        lo += np.minimum(m, 0.0)
        hi += np.maximum(m, 0.0)
    for x in samples:
        x = np.asarray(x, dtype=float)
        if not model.state_domain.contains(x):
            flagged.append(x)
        r = model.jac(x) - env.a0
        v = np.maximum(lo - r, r - hi)
        worst = max(worst, float(np.maximum(v, 0.0).max()))
    return AuditReport(worst, flagged)
