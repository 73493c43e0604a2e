import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdsync.analytic import (
    CertificateRefusal,
    CyclicSpec,
    cyclic_diagonal_problem,
    fhn_certificate,
    goodwin_secant_threshold,
    othmer_check,
    secant_criterion,
)
from rdsync.envelope import BoxTerm, Envelope, FhnParams, GoodwinParams, fhn_envelope, goodwin_envelope
from rdsync.lmi import Certificate, certificate_check, vertex_lmis
from rdsync.numerics import SymMat, spectral_norm
from rdsync.sdpfeas import solve_feasibility


def test_cyclic_spec_matrix_layout():
    spec = CyclicSpec((1.0, 2.0, 3.0), (4.0, 5.0, 6.0))
    expected = np.array([
        [-1.0, 0.0, -6.0],
        [4.0, -2.0, 0.0],
        [0.0, 5.0, -3.0],
    ])
    np.testing.assert_allclose(spec.matrix(), expected)


def test_cyclic_spec_validation():
    with pytest.raises(ValueError):
        CyclicSpec((1.0, 1.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        CyclicSpec((1.0, 0.0, 1.0), (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        CyclicSpec((1.0, 1.0, 1.0), (1.0, -1.0, 1.0))
    with pytest.raises(ValueError):
        CyclicSpec((1.0, 1.0, 1.0), (1.0, 1.0))


def test_secant_goodwin_loop_at_coupling_006():
    spec = CyclicSpec((0.07, 0.07, 0.06, 1.0), (0.01, 0.01, 1.0, 9.0))
    res = secant_criterion(spec)
    assert res.threshold == pytest.approx(4.0, rel=1e-12)
    assert res.ratio == pytest.approx(9e-4 / (0.07 * 0.07 * 0.06), rel=1e-12)
    assert res.ratio == pytest.approx(3.0612, abs=1e-4)
    assert res.passes


def test_secant_zero_gain_passes():
    res = secant_criterion(CyclicSpec((1.0, 1.0, 1.0), (0.0, 0.0, 0.0)))
    assert res.ratio == 0.0
    assert res.passes


def test_secant_boundary_fails_strictly():
    res = secant_criterion(CyclicSpec((1.0, 1.0, 1.0), (2.0, 2.0, 2.0)))
    assert res.ratio == pytest.approx(8.0, rel=1e-12)
    assert res.threshold == pytest.approx(8.0, rel=1e-9)
    assert not res.passes


def test_goodwin_secant_threshold_default_params():
    mu = goodwin_secant_threshold()
    assert mu == pytest.approx(0.05435, abs=1e-4)
    # The root is self-consistent: the ratio test flips right at mu*.
    p = GoodwinParams()

    def loop(mu_val):
        return CyclicSpec(
            (p.a1 + mu_val, p.a2 + mu_val, mu_val, 1.0),
            (p.b1, p.b2, 1.0, p.V1 / p.K1 ** 2),
        )

    assert secant_criterion(loop(mu + 1e-4)).passes
    assert not secant_criterion(loop(mu - 1e-4)).passes


def test_goodwin_secant_threshold_parameter_response():
    base = goodwin_secant_threshold()
    stronger = goodwin_secant_threshold(GoodwinParams(V1=36.0))
    assert stronger > base
    p4 = GoodwinParams(V1=36.0)

    def loop(mu_val):
        return CyclicSpec(
            (p4.a1 + mu_val, p4.a2 + mu_val, mu_val, 1.0),
            (p4.b1, p4.b2, 1.0, p4.V1 / p4.K1 ** 2),
        )

    assert secant_criterion(loop(stronger + 1e-4)).passes
    assert not secant_criterion(loop(stronger - 1e-4)).passes

    assert goodwin_secant_threshold(GoodwinParams(b1=1e-10)) < 1e-6
    with pytest.raises(ValueError):
        goodwin_secant_threshold(equal_diffusion=False)


def _random_cyclic(rng):
    n = int(rng.integers(3, 6))
    alphas = 10.0 ** rng.uniform(-1.0, 1.0, size=n)
    betas = 10.0 ** rng.uniform(-1.0, 1.0, size=n)
    threshold = (1.0 / math.cos(math.pi / n)) ** n
    # Aim the gain ratio at a known offset from the boundary.
    target = threshold * 10.0 ** rng.uniform(-2.0, 2.0)
    current = float(np.prod(betas) / np.prod(alphas))
    betas *= (target / current) ** (1.0 / n)
    return CyclicSpec(tuple(alphas), tuple(betas))


def test_secant_matches_diagonal_feasibility_on_random_specs():
    rng = np.random.default_rng(7)
    decided = 0
    for _ in range(30):
        spec = _random_cyclic(rng)
        res = secant_criterion(spec)
        gap = abs(math.log10(max(res.ratio, 1e-300) / res.threshold))
        if gap < 0.1:
            continue  # too close to the boundary for a solver-grade margin
        solved = solve_feasibility(cyclic_diagonal_problem(spec))
        assert solved.status in ("feasible", "infeasible")
        assert (solved.status == "feasible") == res.passes, spec
        decided += 1
    assert decided >= 20


def test_othmer_goodwin_sup_is_sqrt82():
    env = goodwin_envelope()
    res = othmer_check(env, 10.0, 1.0)
    assert res.sup_norm == pytest.approx(9.0554, abs=1e-3)
    # The third column alone already gives sqrt(82); the faint excess is the
    # contribution of the small loop gains.
    assert math.sqrt(82.0) <= res.sup_norm <= math.sqrt(82.0) + 1e-4
    assert res.passes
    assert "2-norm" in res.note

    assert not othmer_check(env, 9.0, 1.0).passes


def test_othmer_unbounded_envelope_never_passes():
    res = othmer_check(fhn_envelope(), 1e6, 1.0)
    assert res.sup_norm == math.inf
    assert not res.passes


def test_othmer_zero_envelope_passes():
    res = othmer_check(Envelope(np.zeros((2, 2))), 1.0, 1.0)
    assert res.sup_norm == 0.0
    assert res.passes


def test_othmer_requires_positive_diagonal_diffusion():
    env = goodwin_envelope()
    with pytest.raises(ValueError):
        othmer_check(env, 1.0, [1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        othmer_check(env, 1.0, np.array([[1.0, 0.1, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 1.0]]))


def test_othmer_pass_implies_identity_certificate():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a0 = rng.normal(size=(3, 3))
        terms = tuple(
            BoxTerm(rng.normal(size=3) * 0.3, rng.normal(size=3) * 0.3)
            for _ in range(2)
        )
        env = Envelope(a0, box_terms=terms)
        d = rng.uniform(0.5, 2.0, size=3)
        sup = max(spectral_norm(z) for z in env.vertices())
        lam2 = (sup + 1.0) / d.min()
        assert othmer_check(env, lam2, d).passes
        prob = vertex_lmis(env, lam2, d, structure="full")
        report = certificate_check(Certificate("full", SymMat(np.eye(3))), prob)
        assert report.valid


def test_fhn_certificate_by_hand_margin():
    cert = fhn_certificate(FhnParams(), 1.0, [3.0, 1.0])
    np.testing.assert_allclose(cert.P.a, np.diag([0.5, 2.0]))
    assert cert.margin == pytest.approx(1.0, rel=1e-12)
    assert cert.epsilon == pytest.approx(1.0, rel=1e-12)


def test_fhn_certificate_refusals():
    p = FhnParams()
    with pytest.raises(CertificateRefusal, match="lambda2"):
        fhn_certificate(p, 1.0, [2.0, 1.0])  # boundary, strictness fails
    with pytest.raises(CertificateRefusal):
        fhn_certificate(p, 1.0, [1.98, 1.0])
    with pytest.raises(CertificateRefusal, match="thin"):
        fhn_certificate(p, 1.0, [2.0 + 2e-9, 1.0])
    with pytest.raises(ValueError):
        fhn_certificate(p, 1.0, [-1.0, 1.0])


@given(
    c=st.floats(min_value=0.5, max_value=4.0),
    b=st.floats(min_value=0.1, max_value=3.0),
    slack=st.floats(min_value=1.2, max_value=5.0),
    d2=st.floats(min_value=0.2, max_value=3.0),
)
@settings(max_examples=25, deadline=None)
def test_fhn_certificate_always_verifies(c, b, slack, d2):
    p = FhnParams(b=b, c=c)
    lam2 = 1.0
    cert = fhn_certificate(p, lam2, [slack * c, d2])
    report = certificate_check(cert, vertex_lmis(fhn_envelope(p), lam2, [slack * c, d2], "diagonal"))
    assert report.valid
    assert cert.margin > 0.0
