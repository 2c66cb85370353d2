"""Table construction, probability models and local odds ratios."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrorder import (
    ProbabilityModel,
    from_counts,
    local_odds_ratios,
    read_table_csv,
    relative_frequencies,
    truth_probabilities,
    vec_lex,
)
from lrorder.errors import (
    DimensionError,
    EmptyRowError,
    NegativeCountError,
    TableParseError,
    ZeroCellError,
)

from conftest import random_table
from reference import P_BAR, ULCER_COUNTS


class TestFromCounts:
    def test_ulcer_example(self):
        t = from_counts(ULCER_COUNTS)
        assert t.n == 417
        np.testing.assert_array_equal(t.row_totals, [96, 104, 110, 107])
        assert (t.n_rows, t.n_cols) == (4, 3)

    def test_minimal_table(self):
        t = from_counts([[1, 0], [0, 1]])
        assert t.n == 2
        np.testing.assert_array_equal(t.row_totals, [1, 1])

    def test_empty_row_rejected(self):
        with pytest.raises(EmptyRowError):
            from_counts([[0, 0], [1, 1]])

    def test_negative_rejected(self):
        with pytest.raises(NegativeCountError):
            from_counts([[1, -1], [1, 1]])

    def test_non_integer_rejected(self):
        with pytest.raises(NegativeCountError):
            from_counts([[1.5, 1], [1, 1]])

    def test_too_small_rejected(self):
        with pytest.raises(DimensionError):
            from_counts([[1, 2, 3]])

    def test_counts_are_immutable(self):
        t = from_counts([[1, 2], [3, 4]])
        with pytest.raises(ValueError):
            t.counts[0, 0] = 9


class TestRelativeFrequencies:
    def test_ulcer_example(self):
        model = relative_frequencies(from_counts(ULCER_COUNTS))
        np.testing.assert_allclose(model.p, P_BAR, atol=5e-5)

    def test_uniform(self):
        model = relative_frequencies(from_counts([[1, 1], [1, 1]]))
        np.testing.assert_allclose(model.p, 0.25)

    def test_zero_cells_preserved(self):
        model = relative_frequencies(from_counts([[2, 0], [0, 2]]))
        np.testing.assert_allclose(model.p, [0.5, 0.0, 0.0, 0.5])

    def test_model_invariants_on_random_tables(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            t = random_table(rng)
            model = relative_frequencies(t)
            assert abs(model.p.sum() - 1.0) < 1e-12
            np.testing.assert_allclose(
                model.matrix.sum(axis=1), model.nu, atol=1e-12
            )
            np.testing.assert_allclose(
                model.p, (model.nu[:, None] * model.pi).ravel(), atol=1e-12
            )


class TestLocalOddsRatios:
    def test_uniform_is_one(self):
        model = ProbabilityModel.from_joint([[0.25, 0.25], [0.25, 0.25]])
        np.testing.assert_allclose(local_odds_ratios(model), 1.0, atol=1e-12)

    def test_hand_value(self):
        model = ProbabilityModel.from_joint([[2, 1], [1, 2]])
        np.testing.assert_allclose(local_odds_ratios(model), [[4.0]])

    def test_truth_model_first_column(self):
        pis = truth_probabilities(0.1)
        model = ProbabilityModel.from_rows(np.full(4, 0.25), pis)
        odds = local_odds_ratios(model)
        np.testing.assert_allclose(odds[:, 0], [1.091, 1.083, 1.077], atol=5e-4)

    def test_zero_denominator(self):
        model = ProbabilityModel.from_joint([[0.5, 0.0], [0.0, 0.5]])
        with pytest.raises(ZeroCellError):
            local_odds_ratios(model)

    def test_row_rescaling_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            P = rng.uniform(0.5, 4.0, size=(3, 4))
            scaled = P.copy()
            scaled[1] *= rng.uniform(0.1, 10.0)
            a = local_odds_ratios(ProbabilityModel.from_joint(P))
            b = local_odds_ratios(ProbabilityModel.from_joint(scaled))
            np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_homogeneous_rows_give_unit_odds(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            pi = rng.uniform(0.2, 1.0, size=5)
            pi /= pi.sum()
            nu = rng.uniform(0.2, 1.0, size=3)
            nu /= nu.sum()
            model = ProbabilityModel.from_rows(nu, np.tile(pi, (3, 1)))
            np.testing.assert_allclose(
                local_odds_ratios(model), 1.0, atol=1e-12
            )


class TestVecLex:
    def test_basic(self):
        np.testing.assert_array_equal(vec_lex([[1, 2], [3, 4]]), [1, 2, 3, 4])

    def test_single_row(self):
        np.testing.assert_array_equal(vec_lex([[5, 6, 7]]), [5, 6, 7])

    def test_ulcer_counts(self):
        np.testing.assert_array_equal(
            vec_lex(ULCER_COUNTS),
            [61, 28, 7, 68, 23, 13, 58, 40, 12, 53, 38, 16],
        )

    @given(
        st.integers(2, 5),
        st.integers(2, 5),
        st.integers(0, 2**31),
    )
    @settings(max_examples=30, deadline=None)
    def test_reshape_round_trip(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        P = rng.integers(0, 100, size=(rows, cols))
        assert np.array_equal(vec_lex(P).reshape(rows, cols), P)


class TestCsvParsing:
    def test_good_file(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("# treatments x side effects\n61,28,7\n68,23,13\n")
        t = read_table_csv(path)
        assert t.n == 200
        assert t.n_rows == 2

    def test_bad_token_position(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2,3\n4,x,6\n")
        with pytest.raises(TableParseError) as err:
            read_table_csv(path)
        assert err.value.row == 2
        assert err.value.col == 2

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2,3\n4,5\n")
        with pytest.raises(TableParseError) as err:
            read_table_csv(path)
        assert err.value.row == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# nothing\n")
        with pytest.raises(TableParseError):
            read_table_csv(path)
