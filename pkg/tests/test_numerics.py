import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdsync.numerics import (SymMat, as_mat, is_positive_definite,
                             max_eig_of_sym_part, min_eig_of_sym_part,
                             spectral_norm, sym_eigs)


def test_as_mat_rejects_non_2d():
    with pytest.raises(ValueError):
        as_mat([1.0, 2.0, 3.0])


def test_as_mat_rejects_non_finite():
    with pytest.raises(ValueError):
        as_mat([[1.0, np.nan], [0.0, 1.0]])


def test_symmat_averages_roundoff_asymmetry():
    a = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    s = SymMat(a)
    assert s.a[0, 1] == s.a[1, 0]
    assert s.dim == 2


def test_symmat_rejects_genuine_asymmetry():
    with pytest.raises(ValueError):
        SymMat(np.array([[1.0, 2.0], [2.5, 3.0]]))


def test_sym_eigs_two_by_two():
    w, v = sym_eigs(SymMat(np.array([[2.0, 1.0], [1.0, 2.0]])))
    assert np.allclose(w, [1.0, 3.0], atol=1e-12)
    assert np.allclose(v.T @ v, np.eye(2), atol=1e-12)


def test_sym_eigs_ascending_and_diagonal_passthrough():
    w, _ = sym_eigs(SymMat(np.diag([5.0, -1.0, 2.0])))
    assert np.allclose(w, [-1.0, 2.0, 5.0], atol=0)


sym_matrices = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.lists(
        st.lists(st.floats(-10.0, 10.0), min_size=n, max_size=n),
        min_size=n, max_size=n))


@settings(max_examples=60, deadline=None)
@given(sym_matrices)
def test_sym_eigs_reconstructs(rows):
    a = np.array(rows)
    a = 0.5 * (a + a.T)
    w, v = sym_eigs(SymMat(a))
    scale = max(1.0, np.abs(a).max())
    assert np.all(np.diff(w) >= -1e-12 * scale)
    assert np.allclose(v @ np.diag(w) @ v.T, a, atol=1e-9 * scale)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-9 * scale)


def test_spectral_norm_matches_numpy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.normal(size=(4, 4))
        assert spectral_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-10)


def test_sym_part_extremes_fhn_case():
    # P = diag(1/c, c) with c=2, b=1 against the vertex shifted by diag(3, 1):
    # the symmetrized product is exactly diag(-1, -6).
    p = SymMat(np.diag([0.5, 2.0]))
    m = np.array([[-1.0, 2.0], [-0.5, -1.5]])
    assert max_eig_of_sym_part(m, p) == pytest.approx(-1.0, abs=1e-12)
    assert min_eig_of_sym_part(m, p) == pytest.approx(-6.0, abs=1e-12)


def test_sym_part_dimension_mismatch():
    with pytest.raises(ValueError):
        min_eig_of_sym_part(np.eye(3), SymMat(np.eye(2)))


def test_is_positive_definite():
    assert is_positive_definite(SymMat(np.eye(3)))
    assert not is_positive_definite(SymMat(np.zeros((2, 2))))
    assert not is_positive_definite(SymMat(np.diag([1.0, -1e-8])))
