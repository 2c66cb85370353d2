"""Design matrices, the log-linear parametrization and its likelihood."""

import math

import numpy as np
import pytest

from lrorder import (
    ProbabilityModel,
    ThetaParams,
    design_matrices,
    from_counts,
    local_odds_ratios,
    log_likelihood,
    normalization_u,
    probabilities_from_theta,
    relative_frequencies,
    row_terms_u1,
    theta_from_probabilities,
)
from lrorder.errors import DimensionError, OverflowGuard, ZeroCellError

from conftest import random_table
from reference import P_TILDE, T_STATS, THETA_TILDE_12, THETA_TILDE_2, ULCER_COUNTS


def paper_theta_tilde():
    return ThetaParams(
        theta2=np.array(THETA_TILDE_2),
        theta12=np.array(THETA_TILDE_12),
        n_rows=4,
        n_cols=3,
    )


class TestDesignMatrices:
    def test_2x2_constraint_row(self):
        d = design_matrices(2, 2)
        np.testing.assert_array_equal(d.R, [[0, 1]])
        theta = ThetaParams(theta2=[0.3], theta12=[0.7], n_rows=2, n_cols=2)
        np.testing.assert_allclose(d.R @ theta.vector, [0.7])

    def test_4x3_constraint_rows(self):
        d = design_matrices(4, 3)
        assert d.R.shape == (6, 8)
        # hand expansion of the (1,1) second difference
        np.testing.assert_array_equal(d.R[0], [0, 0, 1, -1, -1, 1, 0, 0])
        # boundary rows only keep the in-range terms
        np.testing.assert_array_equal(d.R[5], [0, 0, 0, 0, 0, 0, 0, 1])

    def test_entries_match_indicator_formula(self):
        # W[(i,j), (a,b)] = A[i,a] * [j == b, j < J] with A the corner matrix
        for I, J in ((2, 2), (3, 4), (4, 3)):
            d = design_matrices(I, J)
            A = np.zeros((I, I), dtype=int)
            A[:, 0] = 1
            A[: I - 1, 1:] = np.eye(I - 1, dtype=int)
            for i in range(I):
                for j in range(J):
                    for a in range(I):
                        assert d.W0[i * J + j, a] == A[i, a]
                        for b in range(J - 1):
                            expected = A[i, a] * (1 if j == b else 0)
                            assert d.W[i * J + j, a * (J - 1) + b] == expected

    def test_zero_theta_saturates_to_ones(self):
        d = design_matrices(3, 4)
        u = np.zeros(3)
        theta = np.zeros(3 * 3)
        np.testing.assert_array_equal(
            np.exp(d.W0 @ u + d.W @ theta), np.ones(12)
        )

    def test_g_times_t_is_identity_exactly(self):
        for I, J in ((2, 2), (4, 3), (5, 6)):
            d = design_matrices(I, J)
            assert np.array_equal(d.G_rows @ d.T_rows, np.eye(I - 1, dtype=int))
            assert np.array_equal(d.G_cols @ d.T_cols, np.eye(J - 1, dtype=int))

    def test_dimension_guard(self):
        with pytest.raises(DimensionError):
            design_matrices(1, 3)


class TestRedundantTerms:
    def test_u_at_zero_theta_two_rows(self):
        theta = ThetaParams.zeros(2, 2)
        u = normalization_u(theta, [0.5, 0.5])
        assert math.isclose(u, -2 * math.log(2), rel_tol=1e-12)

    def test_u_uniform(self):
        for I, J in ((3, 3), (4, 5)):
            theta = ThetaParams.zeros(I, J)
            u = normalization_u(theta, np.full(I, 1.0 / I))
            assert math.isclose(u, -math.log(I) - math.log(J), rel_tol=1e-12)

    def test_u_for_ulcer_homogeneity_fit(self):
        # theta2(j) = log(column share ratios); substitute directly
        theta = ThetaParams(
            theta2=np.log(np.array([240, 129]) / 48.0),
            theta12=np.zeros(6),
            n_rows=4,
            n_cols=3,
        )
        u = normalization_u(theta, np.array([96, 104, 110, 107]) / 417.0)
        expected = math.log(107 / 417) - math.log(417 / 48)
        assert math.isclose(u, expected, rel_tol=1e-12)
        assert u == pytest.approx(-3.5222, abs=1e-4)

    def test_u1_zero_interaction_uniform_rows(self):
        theta = ThetaParams(
            theta2=[0.4, -0.2], theta12=np.zeros(6), n_rows=4, n_cols=3
        )
        np.testing.assert_allclose(
            row_terms_u1(theta, np.full(4, 0.25)), 0.0, atol=1e-14
        )

    def test_u1_row_fraction_ratio(self):
        theta = ThetaParams(theta2=[0.9], theta12=[0.0], n_rows=2, n_cols=2)
        u1 = row_terms_u1(theta, [0.25, 0.75])
        np.testing.assert_allclose(u1, [math.log(1 / 3)], rtol=1e-12)

    def test_reconstruction_matches_direct_probabilities(self):
        theta = paper_theta_tilde()
        nu = np.array([96, 104, 110, 107]) / 417.0
        u = normalization_u(theta, nu)
        u1 = row_terms_u1(theta, nu)
        log_p = np.zeros((4, 3))
        log_p += u
        log_p[:3] += u1[:, None]
        log_p[:, :2] += theta.theta2
        log_p[:3, :2] += theta.theta12_matrix
        direct = probabilities_from_theta(theta, nu)
        np.testing.assert_allclose(np.exp(log_p).ravel(), direct.p, rtol=1e-12)
        np.testing.assert_allclose(direct.p, P_TILDE, atol=1e-4)

    def test_overflow_guard(self):
        with pytest.raises(OverflowGuard):
            ThetaParams(theta2=[40.0], theta12=[0.0], n_rows=2, n_cols=2)


class TestThetaProbabilityMaps:
    def test_zero_theta_uniform(self):
        model = probabilities_from_theta(ThetaParams.zeros(3, 4), np.full(3, 1 / 3))
        np.testing.assert_allclose(model.p, 1 / 12, rtol=1e-12)

    def test_row_margins_fixed_for_any_theta(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            I, J = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            theta = ThetaParams.from_vector(
                rng.uniform(-2, 2, I * (J - 1)), I, J
            )
            nu = rng.uniform(0.5, 2.0, I)
            nu /= nu.sum()
            model = probabilities_from_theta(theta, nu)
            np.testing.assert_allclose(model.matrix.sum(axis=1), nu, atol=1e-12)

    def test_constraint_rows_are_log_odds(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            I, J = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            d = design_matrices(I, J)
            theta = ThetaParams.from_vector(
                rng.uniform(-1.5, 1.5, I * (J - 1)), I, J
            )
            nu = rng.uniform(0.5, 2.0, I)
            nu /= nu.sum()
            model = probabilities_from_theta(theta, nu)
            np.testing.assert_allclose(
                np.log(local_odds_ratios(model)).ravel(),
                d.R @ theta.vector,
                atol=1e-10,
            )

    def test_uniform_probabilities_give_zero_theta(self):
        model = ProbabilityModel.from_joint(np.full((3, 3), 1 / 9))
        theta = theta_from_probabilities(model)
        np.testing.assert_allclose(theta.vector, 0.0, atol=1e-12)

    def test_recovers_reported_fit_from_rounded_probabilities(self):
        model = ProbabilityModel.from_joint(np.array(P_TILDE).reshape(4, 3))
        theta = theta_from_probabilities(model)
        np.testing.assert_allclose(theta.theta2, THETA_TILDE_2, atol=2.5e-3)
        np.testing.assert_allclose(theta.theta12, THETA_TILDE_12, atol=2.5e-3)

    def test_round_trip_both_ways(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            I, J = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            theta = ThetaParams.from_vector(rng.uniform(-2, 2, I * (J - 1)), I, J)
            nu = rng.uniform(0.5, 2.0, I)
            nu /= nu.sum()
            model = probabilities_from_theta(theta, nu)
            back = theta_from_probabilities(model)
            np.testing.assert_allclose(back.vector, theta.vector, atol=1e-10)

    def test_zero_cell_rejected(self):
        model = ProbabilityModel.from_joint([[0.5, 0.0], [0.25, 0.25]])
        with pytest.raises(ZeroCellError):
            theta_from_probabilities(model)


class TestLogLikelihood:
    def test_saturated_fit_is_stationary(self, ulcer_table):
        model = relative_frequencies(ulcer_table)
        theta = theta_from_probabilities(model)
        _, grad = log_likelihood(ulcer_table, theta)
        assert np.max(np.abs(grad)) <= 1e-8 * ulcer_table.n

    def test_statistic_from_likelihood_differences(self, ulcer_table, ulcer_fit, ulcer_h0):
        # twice the gap between the restricted and homogeneity fits is the
        # lambda = 0 statistic
        value_tilde, _ = log_likelihood(ulcer_table, ulcer_fit.theta)
        value_hat, _ = log_likelihood(ulcer_table, ulcer_h0[0])
        assert 2 * (value_tilde - value_hat) == pytest.approx(T_STATS[3], abs=2e-3)

    def test_gradient_against_finite_differences(self):
        rng = np.random.default_rng(23)
        worst = 0.0
        for _ in range(50):
            table = random_table(rng)
            I, J = table.n_rows, table.n_cols
            theta_vec = rng.uniform(-1.5, 1.5, I * (J - 1))
            theta = ThetaParams.from_vector(theta_vec, I, J)
            _, grad = log_likelihood(table, theta)
            step = 1e-5
            fd = np.empty_like(theta_vec)
            for idx in range(theta_vec.size):
                plus = theta_vec.copy()
                plus[idx] += step
                minus = theta_vec.copy()
                minus[idx] -= step
                f_plus, _ = log_likelihood(table, ThetaParams.from_vector(plus, I, J))
                f_minus, _ = log_likelihood(table, ThetaParams.from_vector(minus, I, J))
                fd[idx] = (f_plus - f_minus) / (2 * step)
            worst = max(worst, np.max(np.abs(grad - fd)) / np.max(np.abs(grad)))
        assert worst < 1e-6

    def test_value_matches_independent_sum(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            table = random_table(rng)
            I, J = table.n_rows, table.n_cols
            theta = ThetaParams.from_vector(rng.uniform(-2, 2, I * (J - 1)), I, J)
            value, _ = log_likelihood(table, theta)
            model = probabilities_from_theta(theta, table.row_totals / table.n)
            direct = float(np.sum(table.counts * np.log(model.matrix)))
            assert value == pytest.approx(direct, abs=1e-9)

    def test_concavity(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            table = random_table(rng)
            I, J = table.n_rows, table.n_cols
            a = ThetaParams.from_vector(rng.uniform(-2, 2, I * (J - 1)), I, J)
            b = ThetaParams.from_vector(rng.uniform(-2, 2, I * (J - 1)), I, J)
            t = float(rng.uniform(0.05, 0.95))
            mix = ThetaParams.from_vector(
                t * a.vector + (1 - t) * b.vector, I, J
            )
            f_mix, _ = log_likelihood(table, mix)
            f_a, _ = log_likelihood(table, a)
            f_b, _ = log_likelihood(table, b)
            assert f_mix >= t * f_a + (1 - t) * f_b - 1e-9
