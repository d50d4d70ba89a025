import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from rhlpseg.core import (
    Signal,
    design_matrix,
    gaussian_log_density,
    polynomial_basis,
    weighted_least_squares,
)
from rhlpseg.errors import NonFiniteValueError, NonMonotonicTimeError, RankDeficientError


def normal_equations_wls(T, x, w):
    """Independent oracle: solve (T^T W T) beta = T^T W x directly."""
    W = np.diag(w)
    return np.linalg.solve(T.T @ W @ T, T.T @ W @ x)


class TestSignal:
    def test_valid(self):
        s = Signal([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
        assert s.n == 3

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Signal([0.0, 1.0], [1.0])

    def test_non_monotonic(self):
        with pytest.raises(NonMonotonicTimeError):
            Signal([0.0, 2.0, 1.0], [0.0, 0.0, 0.0])

    def test_non_finite(self):
        with pytest.raises(NonFiniteValueError):
            Signal([0.0, 1.0], [np.nan, 0.0])


class TestPolynomialBasis:
    def test_zero_time(self):
        np.testing.assert_array_equal(polynomial_basis(0.0, 2), [1.0, 0.0, 0.0])

    def test_identity_expansion(self):
        np.testing.assert_array_equal(polynomial_basis(2.0, 1), [1.0, 2.0])

    def test_powers_of_half(self):
        np.testing.assert_allclose(
            polynomial_basis(0.5, 3), [1.0, 0.5, 0.25, 0.125]
        )

    def test_rows_of_design_matrix(self):
        t = np.array([0.0, 0.5, 1.0])
        T = design_matrix(t, 2)
        for i, ti in enumerate(t):
            np.testing.assert_array_equal(T[i], polynomial_basis(ti, 2))

    def test_design_matrix_degree_zero(self):
        np.testing.assert_array_equal(design_matrix([0.0, 1.0, 2.0], 0), [[1], [1], [1]])

    def test_design_matrix_line(self):
        np.testing.assert_array_equal(design_matrix([0.0, 1.0], 1), [[1, 0], [1, 1]])

    def test_design_matrix_accepts_signal(self):
        s = Signal([0.0, 1.0], [5.0, 6.0])
        np.testing.assert_array_equal(design_matrix(s, 1), design_matrix(s.t, 1))


class TestWeightedLeastSquares:
    def test_noiseless_line(self):
        t = np.linspace(0, 1, 8)
        T = design_matrix(t, 1)
        beta = weighted_least_squares(T, 3.0 + 2.0 * t, np.ones(8))
        np.testing.assert_allclose(beta, [3.0, 2.0], atol=1e-12)

    def test_indicator_weights_equal_subrange_ols(self):
        rng = np.random.default_rng(3)
        t = np.linspace(0, 1, 20)
        x = rng.normal(size=20)
        T = design_matrix(t, 1)
        w = np.zeros(20)
        w[5:15] = 1.0
        beta = weighted_least_squares(T, x, w)
        sub = np.linalg.lstsq(T[5:15], x[5:15], rcond=None)[0]
        np.testing.assert_allclose(beta, sub, rtol=1e-10)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(7)
        t = np.sort(rng.uniform(0, 5, 10))
        x = rng.normal(size=10)
        w = rng.uniform(0.1, 2.0, 10)
        T = design_matrix(t, 2)
        beta = weighted_least_squares(T, x, w)
        oracle = normal_equations_wls(T, x, w)
        np.testing.assert_allclose(beta, oracle, rtol=1e-9)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_unit_weights_equal_ols_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.integers(6, 30)
        t = np.sort(rng.uniform(0, 5, n))
        x = rng.normal(size=n)
        T = design_matrix(t, 2)
        beta = weighted_least_squares(T, x, np.ones(n))
        np.testing.assert_allclose(beta, normal_equations_wls(T, x, np.ones(n)),
                                   rtol=1e-9, atol=1e-12)

    @given(
        st.integers(min_value=0, max_value=10_000),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    @settings(max_examples=25, deadline=None)
    def test_weight_scaling_invariance(self, seed, scale):
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(0, 5, 15))
        x = rng.normal(size=15)
        w = rng.uniform(0.5, 1.5, 15)
        T = design_matrix(t, 1)
        b1 = weighted_least_squares(T, x, w)
        b2 = weighted_least_squares(T, x, scale * w)
        np.testing.assert_allclose(b1, b2, rtol=1e-12, atol=1e-14)

    def test_rank_deficient_raises(self):
        T = design_matrix([1.0, 1.0, 1.0], 1)  # constant column + degenerate times
        with pytest.raises(RankDeficientError):
            weighted_least_squares(T, np.array([1.0, 2.0, 3.0]), np.ones(3))

    def test_zero_weight_sum_rejected(self):
        T = design_matrix([0.0, 1.0], 0)
        with pytest.raises(ValueError):
            weighted_least_squares(T, np.array([1.0, 2.0]), np.zeros(2))


class TestGaussianLogDensity:
    def test_standard_normal_at_mode(self):
        assert gaussian_log_density(0.0, 0.0, 1.0) == pytest.approx(
            -0.5 * np.log(2 * np.pi)
        )

    def test_one_sigma_away(self):
        assert gaussian_log_density(1.0, 0.0, 1.0) == pytest.approx(
            -0.5 * np.log(2 * np.pi) - 0.5
        )

    def test_hand_evaluation(self):
        expected = -0.5 * (np.log(2 * np.pi) + np.log(4.0) + 0.25)
        assert gaussian_log_density(2.0, 1.0, 4.0) == pytest.approx(expected)

    @pytest.mark.parametrize("mean,sigma2", [(0.0, 1.0), (3.0, 0.25), (-2.0, 7.0)])
    def test_integrates_to_one(self, mean, sigma2):
        sd = np.sqrt(sigma2)
        val, _ = quad(
            lambda x: np.exp(gaussian_log_density(x, mean, sigma2)),
            mean - 8 * sd, mean + 8 * sd,
        )
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_non_positive_variance_rejected(self):
        with pytest.raises(ValueError):
            gaussian_log_density(0.0, 0.0, 0.0)
