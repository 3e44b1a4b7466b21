import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from jacobi_inverse.core import JacobiMatrix, StructuralError
from jacobi_inverse.tridiag import (
    apply_boundary,
    eigenvalues,
    gershgorin_bounds,
    spectral_datum,
    spectral_weights,
    sturm_count,
    sturm_evaluation,
)

from oracles import GOLDEN_NU, PHI, eigh_datum, mp_datum, random_matrix

FREE2 = JacobiMatrix([0.0, 0.0], [1.0])
GOLD2 = JacobiMatrix([1.0, 0.0], [1.0])


def test_apply_boundary_examples():
    out = apply_boundary(FREE2, -1.0)
    assert_array_equal(out.diag, [1.0, 0.0])
    assert_array_equal(out.offdiag, [1.0])
    assert apply_boundary(FREE2, 0.0) is FREE2
    assert_array_equal(apply_boundary(JacobiMatrix([2.0], []), 2.0).diag, [0.0])


def test_eigenvalue_examples():
    assert_allclose(eigenvalues(FREE2, tol=0.0), [-1.0, 1.0], atol=1e-15)
    assert_allclose(eigenvalues(GOLD2, tol=0.0), GOLDEN_NU, atol=1e-15)
    assert_allclose(eigenvalues(GOLD2), [-0.6180339887, 1.6180339887], atol=1e-10)
    with pytest.raises(StructuralError):
        eigenvalues(FREE2, tol=-1.0)


@pytest.mark.parametrize("seed", range(5))
def test_eigenvalues_match_dense_oracle(seed):
    J = random_matrix(np.random.default_rng(seed), 8)
    lam_ref, _ = eigh_datum(J)
    assert_allclose(eigenvalues(J), lam_ref, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [8, 24])
def test_eigenvalues_tol0_correctly_rounded(n):
    # 50-digit reference; extended-precision bisection lands within one ulp
    J = random_matrix(np.random.default_rng(100 + n), n)
    lam_ref, _ = mp_datum(J, 0.7)
    lam = eigenvalues(apply_boundary(J, 0.7), tol=0.0)
    assert np.all(np.abs(lam - lam_ref) <= np.spacing(np.abs(lam_ref)))


def test_weight_examples():
    assert_allclose(spectral_weights(FREE2, [-1.0, 1.0]), [0.5, 0.5], rtol=1e-15)
    expected = [1 / (1 + PHI ** 2), PHI ** 2 / (1 + PHI ** 2)]
    assert_allclose(spectral_weights(GOLD2, GOLDEN_NU), expected, rtol=1e-14)
    assert_array_equal(spectral_weights(JacobiMatrix([3.0], []), [3.0]), [1.0])
    with pytest.raises(StructuralError):
        spectral_weights(FREE2, [0.0])


@pytest.mark.parametrize("seed", range(3))
def test_weights_match_mpmath_relative(seed):
    # disorder drives far weights to ~1e-20; the twisted form keeps them relative-accurate
    J = random_matrix(np.random.default_rng(seed), 32)
    lam_ref, mu_ref = mp_datum(J, 0.7)
    datum = spectral_datum(J, 0.7, tol=0.0)
    assert_allclose(datum.weights, mu_ref, rtol=1e-12)


def test_spectral_datum_examples():
    d = spectral_datum(FREE2, 0.0)
    assert d.h == 0.0
    assert_allclose(d.eigenvalues, [-1.0, 1.0], atol=1e-12)
    assert_allclose(d.weights, [0.5, 0.5], atol=1e-12)
    d = spectral_datum(FREE2, -1.0)
    assert_allclose(d.eigenvalues, [-0.61803, 1.61803], atol=1e-5)
    assert_allclose(d.weights, [0.27639, 0.72361], atol=1e-5)


def test_spectral_datum_deterministic():
    J = random_matrix(np.random.default_rng(3), 16)
    first = spectral_datum(J, 0.7).to_dict()
    second = spectral_datum(J, 0.7).to_dict()
    assert first == second


def test_sturm_count_and_evaluation():
    J = random_matrix(np.random.default_rng(4), 10)
    lam = eigenvalues(J, tol=0.0)
    mids = np.concatenate([[lam[0] - 1], (lam[:-1] + lam[1:]) / 2, [lam[-1] + 1]])
    assert_array_equal(sturm_count(J, mids), np.arange(11))
    for k, z in enumerate(mids):
        assert sturm_count(J, float(z)) == k
        ev = sturm_evaluation(J, float(z))
        assert ev.sign_changes == k
        # p_N(z) = det(J - z)
        assert ev.minors[-1] == pytest.approx(np.prod(lam - z), rel=1e-10)


def test_gershgorin_encloses_spectrum():
    J = random_matrix(np.random.default_rng(5), 12)
    lo, hi = gershgorin_bounds(J)
    lam = eigenvalues(J)
    assert lo < lam[0] and lam[-1] < hi


matrices = st.integers(1, 24).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-3, 3), min_size=n, max_size=n),
        st.lists(st.floats(0.2, 3), min_size=n - 1, max_size=n - 1),
    )
)


@settings(max_examples=60)
@given(matrices, st.floats(-2, 2), st.floats(0.05, 2))
def test_forward_invariants(ab, h, step):
    J = JacobiMatrix(*ab)
    lo_datum = spectral_datum(J, h + step, tol=0.0)
    hi_datum = spectral_datum(J, h, tol=0.0)
    # trace identity and unit mass
    assert np.sum(hi_datum.eigenvalues) == pytest.approx(np.sum(J.diag) - h, abs=1e-10 * J.n)
    assert np.sum(hi_datum.weights) == pytest.approx(1.0, abs=1e-12)
    # lowering a_1 moves every eigenvalue down and the two spectra interlace
    lam, nu = lo_datum.eigenvalues, hi_datum.eigenvalues
    assert np.all(lam <= nu)
    assert np.all(nu[:-1] <= lam[1:])
