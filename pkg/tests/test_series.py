import math

import numpy as np
import pytest
import sympy as sp

from loopdetector import series


def test_constant_places_value_at_origin():
    s = series.constant(1.0, 2, 2)
    expected = np.zeros((3, 3))
    expected[0, 0] = 1.0
    assert np.array_equal(s.coeffs, expected)
    assert np.array_equal(series.constant(0.0, 1, 1).coeffs, np.zeros((2, 2)))
    assert series.constant(0.5, 0, 0).coeffs.tolist() == [[0.5]]


def test_constant_rejects_bad_arguments():
    with pytest.raises(ValueError):
        series.constant(1.0, -1, 2)
    with pytest.raises(ValueError):
        series.constant(1.0, 2, -1)
    with pytest.raises(ValueError):
        series.constant(math.inf, 2, 2)


def test_multiply_identity_leaves_factor_unchanged():
    rng = np.random.default_rng(7)
    b = series.BivariateSeries(rng.standard_normal((4, 5)))
    one = series.constant(1.0, b.k_max, b.n_max)
    product = series.multiply(one, b)
    assert np.array_equal(product.coeffs, b.coeffs)


def test_multiply_truncates_degrees():
    z = np.zeros((2, 1))
    z[1, 0] = 1.0
    s = series.BivariateSeries(z)
    square = series.multiply(s, s)  # z**2 falls off the k_max = 1 grid
    assert np.array_equal(square.coeffs, np.zeros((2, 1)))


def test_multiply_matches_hand_expansion_of_binomial_square():
    one_plus = np.zeros((1, 3))
    one_plus[0, 0] = 1.0
    one_plus[0, 1] = 1.0
    s = series.BivariateSeries(one_plus)
    square = series.multiply(s, s)
    assert np.allclose(square.coeffs[0], [1.0, 2.0, 1.0], atol=1e-15)


def test_multiply_rejects_shape_mismatch():
    with pytest.raises(ValueError, match="shapes differ"):
        series.multiply(series.constant(1.0, 2, 2), series.constant(1.0, 2, 3))


def test_exp_intensity_taylor_coefficients():
    assert np.array_equal(
        series.exp_intensity(0.0, 1, 3).coeffs, series.constant(1.0, 1, 3).coeffs
    )
    s = series.exp_intensity(1.0, 0, 3)
    assert np.allclose(s.coeffs[0], [1.0, 1.0, 0.5, 1.0 / 6.0], atol=1e-16)
    assert series.coefficient(series.exp_intensity(-0.16, 0, 2), 0, 1) == -0.16


def test_coefficient_extraction_and_range_checks():
    assert series.coefficient(series.constant(1.0, 1, 1), 0, 0) == 1.0
    assert series.coefficient(series.exp_intensity(1.0, 2, 3), 0, 2) == 0.5
    s = series.constant(1.0, 2, 3)
    for k, n in [(-1, 0), (3, 0), (0, -1), (0, 4)]:
        with pytest.raises(ValueError):
            series.coefficient(s, k, n)


def test_coefficients_must_be_finite():
    bad = np.zeros((2, 2))
    bad[1, 1] = math.nan
    with pytest.raises(ValueError, match="finite"):
        series.BivariateSeries(bad)


def test_product_matches_symbolic_expansion(each_backend):
    """Two roundtrip factors times exp(I), checked cell by cell against sympy."""
    z, y = sp.symbols("z y")
    a1 = -sp.Rational(4, 25)        # eta t_c = 0.16
    a2 = a1 * sp.Rational(18, 25)   # one roundtrip of t_r = 0.72
    symbolic = sp.exp(y) * (z + (1 - z) * sp.exp(a1 * y)) * (z + (1 - z) * sp.exp(a2 * y))
    k_max, n_max = 2, 4

    factors = []
    for a in (a1, a2):
        c = np.zeros((k_max + 1, n_max + 1))
        for n in range(n_max + 1):
            taylor = float(a**n / sp.factorial(n))
            c[0, n] = taylor
            c[1, n] = -taylor
        c[1, 0] += 1.0
        factors.append(series.BivariateSeries(c))
    product = series.multiply(
        series.multiply(factors[0], factors[1]),
        series.exp_intensity(1.0, k_max, n_max),
    )

    expanded = sp.expand(sp.series(symbolic, y, 0, n_max + 1).removeO())
    for k in range(k_max + 1):
        in_z = expanded.coeff(z, k)
        for n in range(n_max + 1):
            expected = float(in_z.coeff(y, n))
            assert series.coefficient(product, k, n) == pytest.approx(
                expected, abs=1e-14
            )


@pytest.mark.parametrize("trial", range(4))
def test_multiply_is_commutative_and_associative(each_backend, trial):
    rng = np.random.default_rng(100 + trial)
    shape = (rng.integers(1, 7), rng.integers(1, 7))
    a, b, c = (
        series.BivariateSeries(rng.uniform(-1.0, 1.0, (shape[0], shape[1])))
        for _ in range(3)
    )
    ab = series.multiply(a, b)
    ba = series.multiply(b, a)
    assert np.abs(ab.coeffs - ba.coeffs).max() <= 1e-12
    left = series.multiply(ab, c)
    right = series.multiply(a, series.multiply(b, c))
    assert np.abs(left.coeffs - right.coeffs).max() <= 1e-12


@pytest.mark.parametrize("a", [-2.0, -0.57, 0.3, 2.0])
def test_exp_intensity_inverse_cancels(a):
    n_max = 40
    product = series.multiply(
        series.exp_intensity(a, 0, n_max), series.exp_intensity(-a, 0, n_max)
    )
    assert np.abs(product.coeffs - series.constant(1.0, 0, n_max).coeffs).max() <= 1e-12


@pytest.mark.parametrize("trial", range(3))
def test_truncation_consistency_with_larger_grids(trial):
    rng = np.random.default_rng(200 + trial)
    small = (3, 4)
    big = (small[0] + rng.integers(1, 4), small[1] + rng.integers(1, 4))
    a_big = rng.uniform(-1.0, 1.0, big)
    b_big = rng.uniform(-1.0, 1.0, big)
    on_big = series.multiply(
        series.BivariateSeries(a_big), series.BivariateSeries(b_big)
    )
    on_small = series.multiply(
        series.BivariateSeries(a_big[: small[0], : small[1]]),
        series.BivariateSeries(b_big[: small[0], : small[1]]),
    )
    assert (
        np.abs(on_big.coeffs[: small[0], : small[1]] - on_small.coeffs).max() <= 1e-12
    )


def test_series_values_are_immutable():
    s = series.constant(1.0, 2, 2)
    with pytest.raises(ValueError):
        s.coeffs[0, 0] = 2.0
