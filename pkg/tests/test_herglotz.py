import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from jacobi_inverse.core import (
    InconsistentDataError,
    NormalizationError,
    NotHerglotzError,
    PoleEvaluationError,
    StructuralError,
)
from jacobi_inverse.herglotz import (
    PartialFractionForm,
    ProductForm,
    constant_from_zero,
    eval_partial_fraction,
    eval_product,
    pairing_diagnostics,
    product_residues,
    product_to_partial_fraction,
    zeros_of_partial_fraction,
    zeros_of_rational,
)

from oracles import GOLDEN_NU, PHI, limit_residue, random_interlaced

GOLD_F = ProductForm(1.0, GOLDEN_NU, [-1.0, 1.0])


# -- evaluation ----------------------------------------------------------------


def test_eval_product_examples():
    assert eval_product(GOLD_F, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert eval_product(ProductForm(2.0, [], []), 3.7) == 2.0
    for R in (1e2, 1e4, 1e6):
        assert abs(eval_product(GOLD_F, 1j * R) - 1) <= 3 / R
    with pytest.raises(PoleEvaluationError):
        eval_product(GOLD_F, 1.0)


def test_eval_product_real_complex_agree():
    z = np.linspace(-3.3, 3.1, 17)
    assert_allclose(eval_product(GOLD_F, z), eval_product(GOLD_F, z + 0j).real, rtol=1e-14)


def test_eval_partial_fraction_examples():
    f = PartialFractionForm(1.0, [1.0], [PHI - 1])
    assert abs(eval_partial_fraction(f, PHI)) <= 1e-12
    m0 = PartialFractionForm(0.0, [-1.0, 1.0], [0.5, 0.5])
    assert eval_partial_fraction(m0, 10j) == pytest.approx(10j / 101, rel=1e-15)
    assert eval_partial_fraction(PartialFractionForm(5.0, [], []), 2.0) == 5.0
    z = np.array([[0.5, 10j], [-2.0, 3j]])
    assert_allclose(m0(z), z / (1 - z ** 2), rtol=1e-15)


def test_form_validation():
    with pytest.raises(StructuralError):
        ProductForm(0.0, [], [])
    with pytest.raises(StructuralError):
        ProductForm(1.0, [1.0], [1.0])
    with pytest.raises(StructuralError):
        PartialFractionForm(1.0, [0.0, 1.0], [1.0])
    with pytest.raises(StructuralError):
        PartialFractionForm(1.0, [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(StructuralError):
        product_to_partial_fraction(ProductForm(1.0, [0.0, 2.0], [1.0]))


# -- residues and the partial-fraction expansion -------------------------------------


def test_residue_examples():
    assert product_residues(GOLD_F)[1] == pytest.approx(-0.5, rel=1e-15)
    assert_allclose(product_residues(ProductForm(1.0, [2.0], [0.0])), [-2.0])


@pytest.mark.parametrize("seed", range(5))
def test_residues_match_limit_oracle(seed):
    lam, nu = random_interlaced(np.random.default_rng(seed), 10)
    f = ProductForm(1.0, nu, lam)
    res = product_residues(f)
    expected = [limit_residue(f, p) for p in lam]
    assert_allclose(res, expected, rtol=1e-9)


def test_partial_fraction_examples():
    g = product_to_partial_fraction(ProductForm(1.0, [PHI], [1.0]))
    assert g.constant == 1.0
    assert_allclose(g.coefficients, [PHI - 1], rtol=1e-15)
    empty = product_to_partial_fraction(ProductForm(1.0, [], []))
    assert empty.constant == 1.0 and empty.poles.size == 0


def test_partial_fraction_pointwise_agreement():
    g = product_to_partial_fraction(GOLD_F)
    assert_allclose(g.coefficients, [0.5, 0.5], rtol=1e-15)
    rng = np.random.default_rng(2024)
    z = rng.uniform(-4, 4, 100) + 1j * rng.uniform(0.1, 4, 100) * rng.choice([-1, 1], 100)
    assert_allclose(g(z), eval_product(GOLD_F, z), rtol=1e-11)


@pytest.mark.parametrize("orientation", [1, -1])
def test_sign_uniformity_iff_interlacing(orientation):
    rng = np.random.default_rng(11)
    lam, nu = random_interlaced(rng, 12, orientation)
    coef = product_to_partial_fraction(ProductForm(1.0, nu, lam)).coefficients
    assert np.all(np.sign(coef) == orientation)
    # breaking the interlacing by swapping two neighbouring zeros' positions
    nu_bad = nu.copy()
    nu_bad[3] = (lam[5] + nu[5]) / 2 if orientation > 0 else (lam[5] + nu[4]) / 2
    nu_bad = np.sort(nu_bad)
    coef_bad = product_to_partial_fraction(ProductForm(1.0, nu_bad, lam)).coefficients
    assert not (np.all(coef_bad > 0) or np.all(coef_bad < 0))


@settings(max_examples=50)
@given(st.integers(1, 30), st.integers(0, 2 ** 32 - 1), st.sampled_from([1, -1]))
def test_herglotz_monotone_between_poles(n, seed, orientation):
    lam, nu = random_interlaced(np.random.default_rng(seed), n, orientation)
    g = product_to_partial_fraction(ProductForm(1.0, nu, lam))
    if orientation < 0:
        g = g.negated()
    # Herglotz: Im g > 0 in the upper half plane, increasing on the real axis
    z = np.linspace(lam[0] - 1, lam[-1] + 1, 7) + 0.5j
    assert np.all(g(z).imag > 0)
    x = np.linspace(lam[0] + 1e-3, lam[0] + 5e-3, 5) if n == 1 else np.linspace(lam[0], lam[1], 9)[1:-1]
    assert np.all(np.diff(g(x)) > 0)


# -- zeros -----------------------------------------------------------------------


def test_zero_examples():
    assert_allclose(zeros_of_partial_fraction(PartialFractionForm(1.0, [1.0], [PHI - 1])), [PHI], rtol=1e-15)
    zeros = zeros_of_partial_fraction(PartialFractionForm(1.0, [-1.0, 1.0], [0.5, 0.5]))
    assert_allclose(zeros, GOLDEN_NU, rtol=1e-15)
    prev = None
    for eps in (1e-2, 1e-5, 1e-8, 1e-12):
        (root,) = zeros_of_partial_fraction(PartialFractionForm(1.0, [0.0], [eps]))
        assert 0 < root <= 1.01 * eps
        if prev is not None:
            assert root < prev
        prev = root


def test_zeros_negative_constant_and_negative_coefficients():
    # c < 0 with positive A puts the exterior zero below the first pole
    f = PartialFractionForm(-1.0, [0.0, 2.0], [1.0, 1.0])
    roots = zeros_of_partial_fraction(f)
    assert roots[0] < 0 < roots[1] < 2
    assert_allclose(f(roots), 0, atol=1e-13)
    assert_allclose(zeros_of_partial_fraction(f.negated()), roots, rtol=0, atol=0)


def test_zeros_reject_bad_input():
    with pytest.raises(NotHerglotzError):
        zeros_of_partial_fraction(PartialFractionForm(1.0, [0.0, 1.0], [1.0, -1.0]))
    with pytest.raises(NormalizationError):
        zeros_of_partial_fraction(PartialFractionForm(0.0, [0.0, 1.0], [1.0, 1.0]))


@pytest.mark.parametrize("n", [1, 8, 64])
def test_zeros_roundtrip_interlaced(n):
    for seed in range(10):
        for orientation in (1, -1):
            lam, nu = random_interlaced(np.random.default_rng(seed), n, orientation)
            g = product_to_partial_fraction(ProductForm(1.0, nu, lam))
            assert_allclose(zeros_of_partial_fraction(g), nu, rtol=0, atol=1e-12 * max(1, np.max(np.abs(nu))))


def test_zeros_of_rational_mixed_signs():
    zeros_true = np.array([-0.5, 1.5, 3.0])
    poles = np.array([0.0, 1.0, 2.0])
    f = ProductForm(2.0, zeros_true, poles)
    g = product_to_partial_fraction(f)
    assert not (np.all(g.coefficients > 0) or np.all(g.coefficients < 0))
    assert_allclose(zeros_of_rational(g), zeros_true, rtol=1e-14)
    # no real zeros: 1 + 1/(0-z) - 1/(1-z) has a complex pair
    with pytest.raises(InconsistentDataError):
        zeros_of_rational(PartialFractionForm(1.0, [0.0, 1.0], [1.0, -1.0]))


def test_zeros_of_rational_delegates_single_sign():
    g = PartialFractionForm(1.0, [-1.0, 1.0], [0.5, 0.5])
    assert_allclose(zeros_of_rational(g), zeros_of_partial_fraction(g), rtol=0, atol=0)


# -- constant_from_zero ------------------------------------------------------------


def test_constant_from_zero_examples():
    assert constant_from_zero([-1.0, 1.0], [0.5, 0.5], PHI) == pytest.approx(1.0, rel=1e-15)
    assert constant_from_zero([0.0], [1.0], 1.0) == 1.0
    with pytest.raises(PoleEvaluationError):
        constant_from_zero([0.0], [1.0], 0.0)


@settings(max_examples=50)
@given(st.integers(1, 20), st.integers(0, 2 ** 32 - 1), st.data())
def test_constant_from_zero_roundtrip(n, seed, data):
    lam, nu = random_interlaced(np.random.default_rng(seed), n)
    g = product_to_partial_fraction(ProductForm(1.0, nu, lam))
    k = data.draw(st.integers(0, n - 1))
    c = constant_from_zero(g.poles, g.coefficients, nu[k])
    assert c == pytest.approx(1.0, rel=1e-9)
    roots = zeros_of_partial_fraction(PartialFractionForm(c, g.poles, g.coefficients))
    assert abs(roots[k] - nu[k]) <= 1e-10 * max(1, abs(nu[k]))


def test_pairing_diagnostics():
    lam, nu = random_interlaced(np.random.default_rng(3), 6)
    diag = pairing_diagnostics(lam, nu)
    assert diag.min_gap == pytest.approx(np.min(nu - lam))
    assert len(diag.residue_drift) == 6 and diag.residue_drift[-1] == 0.0
    assert pairing_diagnostics([], []).residue_drift == ()
