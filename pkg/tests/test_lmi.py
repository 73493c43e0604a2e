import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdsync.envelope import BoxTerm, Envelope, fhn_envelope, goodwin_envelope
from rdsync.lmi import (
    Certificate,
    certificate_check,
    certified_epsilon,
    composite_lmi,
    composite_matrix,
    diffusion_matrix,
    lemma_s_converse_search,
    problem_dump,
    vertex_lmis,
)
from rdsync.numerics import SymMat, max_eig_of_sym_part


def test_diffusion_matrix_scalar_vector_matrix():
    np.testing.assert_allclose(diffusion_matrix(2.0, 3), 2.0 * np.eye(3))
    np.testing.assert_allclose(diffusion_matrix([1.0, 2.0, 3.0], 3), np.diag([1.0, 2.0, 3.0]))
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(diffusion_matrix(m, 2), m)


def test_diffusion_matrix_rejects_bad_shapes():
    with pytest.raises(ValueError):
        diffusion_matrix([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        diffusion_matrix(np.eye(2), 3)


# Bordered matrix for the Goodwin envelope at coupling 0.06, diagonal
# structure, written out by hand. The diagonal-nonpositive degradation term
# drops out, leaving one multiplier for the repression column.
GOODWIN_BORDERED_006 = np.array([
    [-0.07, 0.0, 0.0, -9.0],
    [0.01, -0.07, 0.0, 0.0],
    [0.0, 0.01, -0.06, 0.0],
    [0.0, 0.0, 1.0, -1.0],
])


def test_goodwin_composite_matrix_diagonal_frozen():
    env = goodwin_envelope()
    acal, kept, _ = composite_matrix(env, 0.06, 1.0, structure="diagonal")
    assert len(kept) == 1
    np.testing.assert_allclose(acal, GOODWIN_BORDERED_006, atol=1e-15)


def test_goodwin_composite_full_keeps_both_terms():
    env = goodwin_envelope()
    acal, kept, _ = composite_matrix(env, 0.06, 1.0, structure="full")
    assert len(kept) == 2
    assert acal.shape == (5, 5)
    np.testing.assert_allclose(acal[:3, 4], np.array([0.0, 0.0, -1.0]))
    assert acal[4, 4] == -1.0


def test_composite_lmi_labels_and_omissions():
    env = goodwin_envelope()
    prob = composite_lmi(env, 0.06, 1.0, structure="diagonal")
    assert prob.structure_label == "block-diagonal"
    assert prob.omitted_terms == 1
    assert [c.label for c in prob.constraints] == ["composite"]

    full = composite_lmi(env, 0.06, 1.0, structure="full")
    assert full.omitted_terms == 0
    assert full.var_spec.n_mult == 2


def test_vertex_lmis_constraint_inventory():
    env = goodwin_envelope()
    # Isotropic diffusion: the alignment inequality holds automatically.
    prob = vertex_lmis(env, 0.06, 1.0, structure="full")
    labels = [c.label for c in prob.constraints]
    assert labels == ["vertex[0]", "vertex[1]", "vertex[2]", "vertex[3]"]

    # Distinct rates with a full P: alignment must be imposed.
    aniso = vertex_lmis(env, 0.06, [1.0, 2.0, 3.0], structure="full")
    assert [c.label for c in aniso.constraints][-1] == "coupling"
    assert not aniso.constraints[-1].strict

    # Distinct rates with diagonal P: holds automatically again.
    diag = vertex_lmis(env, 0.06, [1.0, 2.0, 3.0], structure="diagonal")
    assert all(c.label != "coupling" for c in diag.constraints)


def test_vertex_lmis_rejects_negative_lambda2():
    with pytest.raises(ValueError):
        vertex_lmis(goodwin_envelope(), -0.1, 1.0)


def test_vertex_enumeration_cap():
    terms = tuple(BoxTerm(np.array([1e-3]), np.array([1.0])) for _ in range(21))
    env = Envelope(np.array([[-100.0]]), box_terms=terms)
    with pytest.raises(ValueError, match="composite"):
        vertex_lmis(env, 0.0, 0.0)


# FitzHugh-Nagumo with b=1, c=2, lambda2=2, D=diag(2, 1) and the explicit
# certificate P=diag(1/c, c). By hand: P(Z1 - lambda2*D) symmetrizes to
# diag(-2, -10), so the raw strict margin is 2 and the normalizer is
# 1 + ||Z1 - lambda2*D||_F = 1 + sqrt(14.5).
FHN_P = SymMat(np.diag([0.5, 2.0]))


def _fhn_problem():
    return vertex_lmis(fhn_envelope(), 2.0, [2.0, 1.0], structure="diagonal")


def test_certificate_check_accepts_fhn_by_hand():
    report = certificate_check(Certificate("diagonal", FHN_P), _fhn_problem())
    assert report.valid
    assert report.margin == pytest.approx(2.0, rel=1e-12)
    assert report.normalized_margin == pytest.approx(2.0 / (1.0 + math.sqrt(14.5)), rel=1e-12)
    assert report.p_min_eig == pytest.approx(0.5)
    labels = [e.label for e in report.entries]
    assert labels == ["vertex[0]", "cone[0]"]


def test_certified_epsilon_matches_vertex_margin():
    eps = certified_epsilon(Certificate("diagonal", FHN_P), fhn_envelope(), 2.0, [2.0, 1.0])
    assert eps == pytest.approx(2.0, rel=1e-12)


def test_certificate_check_flags_bad_p():
    report = certificate_check(
        Certificate("diagonal", SymMat(np.diag([100.0, 0.01]))), _fhn_problem()
    )
    assert not report.valid
    assert any("vertex[0]" in m for m in report.messages)

    indef = certificate_check(
        Certificate("diagonal", SymMat(np.diag([1.0, -1.0]))), _fhn_problem()
    )
    assert not indef.valid
    assert any("positive definite" in m for m in indef.messages)


def test_certificate_check_flags_weak_violation():
    prob = vertex_lmis(fhn_envelope(), 2.0, [2.0, 1.0], structure="full")
    p = SymMat(np.array([[1.0, 0.5], [0.5, 1.0]]))
    report = certificate_check(Certificate("full", p), prob)
    assert not report.valid
    assert any("cone[0]" in m for m in report.messages)


def test_certificate_check_validates_shapes():
    prob = _fhn_problem()
    with pytest.raises(ValueError):
        certificate_check(Certificate("diagonal", SymMat(np.eye(3))), prob)
    with pytest.raises(ValueError):
        certificate_check(Certificate("diagonal", FHN_P, q=(1.0,)), prob)
    with pytest.raises(ValueError):
        certificate_check(
            Certificate("full", SymMat(np.array([[1.0, 0.1], [0.1, 1.0]]))), prob
        )


def test_certificate_check_rejects_nonpositive_multiplier():
    env = goodwin_envelope()
    prob = composite_lmi(env, 0.06, 1.0, structure="diagonal")
    cert = Certificate("block-diagonal", SymMat(np.eye(3)), q=(0.0,))
    report = certificate_check(cert, prob)
    assert not report.valid
    assert any("multiplier" in m for m in report.messages)


@given(
    scale=st.floats(min_value=1.0, max_value=1e3),
)
@settings(max_examples=40, deadline=None)
def test_certificate_scaling_preserves_validity(scale):
    prob = _fhn_problem()
    base = certificate_check(Certificate("diagonal", FHN_P), prob)
    scaled = certificate_check(
        Certificate("diagonal", SymMat(scale * FHN_P.a)), prob
    )
    assert scaled.valid
    assert scaled.margin == pytest.approx(scale * base.margin, rel=1e-9)
    assert scaled.normalized_margin == pytest.approx(scale * base.normalized_margin, rel=1e-9)


@given(
    p=st.lists(st.floats(min_value=0.1, max_value=10.0), min_size=3, max_size=3),
    q1=st.floats(min_value=0.01, max_value=10.0),
)
@settings(max_examples=60, deadline=None)
def test_omitted_column_is_margin_neutral(p, q1):
    # Adding the dropped diagonal-nonpositive column back with multiplier
    # q2 = beta * P_jj zeroes its coupling row exactly, so the bordered
    # matrix becomes block diagonal and the largest eigenvalue can only
    # change if the new -2*q2 entry dominates.
    env = goodwin_envelope()
    acal4, _, _ = composite_matrix(env, 0.06, 1.0, structure="diagonal")
    acal5, _, _ = composite_matrix(env, 0.06, 1.0, structure="full")

    v4 = np.zeros((4, 4))
    v4[:3, :3] = np.diag(p)
    v4[3, 3] = q1
    lam4 = max_eig_of_sym_part(acal4, SymMat(v4))

    beta = 1.0  # V3/K3 at default parameters
    q2 = beta * p[2]
    v5 = np.zeros((5, 5))
    v5[:3, :3] = np.diag(p)
    v5[3, 3] = q1
    v5[4, 4] = q2
    lam5 = max_eig_of_sym_part(acal5, SymMat(v5))

    assert lam5 == pytest.approx(max(lam4, -2.0 * q2), abs=1e-11)


# Scalar example with one box term: nominal -4, rank-one column bounded by 2.
SCALAR_ENV = Envelope(np.array([[-4.0]]), box_terms=(BoxTerm(np.array([2.0]), np.array([1.0])),))


def test_scalar_vertex_feasibility_transfers_to_composite():
    prob = vertex_lmis(SCALAR_ENV, 0.0, 0.0)
    p1 = SymMat(np.array([[1.0]]))
    assert certificate_check(Certificate("full", p1), prob).valid

    q = lemma_s_converse_search(p1, SCALAR_ENV, 0.0, 0.0)
    assert q is not None and q > 0.0

    comp = composite_lmi(SCALAR_ENV, 0.0, 0.0)
    report = certificate_check(Certificate("block-diagonal", p1, q=(q,)), comp)
    assert report.valid


def test_scalar_converse_search_fails_on_unstable_nominal():
    env = Envelope(np.array([[1.0]]), box_terms=(BoxTerm(np.array([2.0]), np.array([1.0])),))
    assert lemma_s_converse_search(SymMat(np.array([[1.0]])), env, 0.0, 0.0) is None


def test_converse_search_requires_single_box_term():
    with pytest.raises(ValueError):
        lemma_s_converse_search(SymMat(np.eye(3)), goodwin_envelope(), 0.0, 0.0)


def test_composite_needs_box_data():
    with pytest.raises(ValueError):
        composite_matrix(fhn_envelope(), 1.0, 1.0)


def test_certified_epsilon_falls_back_to_composite():
    env = goodwin_envelope()
    p = SymMat(np.diag([1.0, 20.0, 50.0]))
    # Forcing the cap below the four corners routes through the bordered
    # matrix; its margin lower-bounds the enumerated one.
    enumerated = certified_epsilon(Certificate("diagonal", p, q=(0.01,)), env, 0.06, 1.0)
    bordered = certified_epsilon(Certificate("diagonal", p, q=(0.01,)), env, 0.06, 1.0, cap=2)
    assert bordered <= enumerated + 1e-12

    with pytest.raises(ValueError):
        certified_epsilon(Certificate("diagonal", p), env, 0.06, 1.0, cap=2)
    with pytest.raises(ValueError):
        certified_epsilon(
            Certificate("diagonal", p, q=(0.01, 0.01, 0.01)), env, 0.06, 1.0, cap=2
        )


def test_problem_dump_is_reproducible_text():
    dump = problem_dump(composite_lmi(goodwin_envelope(), 0.06, 1.0, structure="diagonal"))
    assert "lmi problem: n=3 multipliers=1 structure=block-diagonal" in dump
    assert "omitted diagonal-nonpositive terms: 1" in dump
    assert "constraint composite (strict, on full block):" in dump

    third = Envelope(np.array([[-1.0 / 3.0]]))
    text = problem_dump(vertex_lmis(third, 0.0, 0.0))
    assert "-0.33333333333333331" in text
