"""Shared fixtures: the ulcer example analysis and reusable oracles."""

from __future__ import annotations

import numpy as np
import pytest

from lrorder import (
    estimate_weights,
    from_counts,
    mle_h0,
    mle_h1,
)

from reference import ULCER_COUNTS


@pytest.fixture(scope="session")
def ulcer_table():
    return from_counts(ULCER_COUNTS)


@pytest.fixture(scope="session")
def ulcer_h0(ulcer_table):
    return mle_h0(ulcer_table)


@pytest.fixture(scope="session")
def ulcer_fit(ulcer_table):
    return mle_h1(ulcer_table)


@pytest.fixture(scope="session")
def ulcer_weights_1m(ulcer_table):
    t = ulcer_table
    return estimate_weights(
        t.row_totals / t.n, t.column_totals / t.n, reps=1_000_000, seed=0
    )


def random_table(rng, n_rows=None, n_cols=None, low=1, high=40):
    """A random table with strictly positive integer cells."""
    I = n_rows or int(rng.integers(2, 5))
    J = n_cols or int(rng.integers(2, 5))
    return from_counts(rng.integers(low, high, size=(I, J)))


def enumerate_orthant_qp(H, z, tol=0.0):
    """Exhaustive-KKT oracle for min_{x>=0} 0.5 x'Hx - (Hz)'x.

    Tries every active set: solves the equality-restricted system and
    returns the solution that is primal feasible (free part > 0) and dual
    feasible (gradient >= 0 on the active part).  Unique almost surely.
    """
    k = z.size
    y = H @ z
    best = None
    for code in range(1 << k):
        free = np.flatnonzero([(code >> b) & 1 for b in range(k)])
        x = np.zeros(k)
        if free.size:
            x[free] = np.linalg.solve(H[np.ix_(free, free)], y[free])
            if (x[free] <= tol).any():
                continue
        grad = H @ x - y
        active = np.setdiff1d(np.arange(k), free)
        if active.size and (grad[active] < -1e-9).any():
            continue
        best = x
        break
    assert best is not None, "enumeration oracle found no KKT point"
    return best
