"""Maximum likelihood under homogeneity and under the ordering cone.

The homogeneity MLE is closed form: p_ij(theta_hat) = (n_i/n)(N_.j/n).
The order-restricted MLE maximizes the concave kernel over the cone
R theta >= 0 with a damped Newton active-set method: solve the
equality-constrained Newton step on the current working set, ratio-test
against the inactive constraints, backtrack for a monotone objective, and
release constraints whose multiplier estimate turns positive.

Karush-Kuhn-Tucker bookkeeping uses the convention

    grad l(theta~) = R' lambda,   lambda <= 0 on the active set,

so the stationarity residual is ||grad l - R' lambda||_inf.  (The source
conditions state the multiplier sign lambda_i <= 0 together with a "+"
stationarity form; the two are only mutually consistent with the minus
orientation used here, which also matches the sign of the multipliers the
asymptotic theory conditions on.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyColumnError,
    NonConvergence,
    OverflowGuard,
    ZeroCellError,
)
from .loglinear import (
    THETA_CAP,
    ThetaParams,
    design_matrices,
    log_likelihood,
    probabilities_from_theta,
)
from .chibar import fisher_information
from .tables import ContingencyTable, ProbabilityModel

#: Constraint values within this of zero are reported as active.
ACTIVE_TOL = 1e-7


@dataclass(frozen=True)
class ConstrainedFit:
    """Order-restricted MLE with its KKT certificate.

    ``multipliers`` is the full-length vector (zero off the active set,
    nonpositive on it); ``kkt_residual`` is the raw stationarity norm
    ||grad l - R' lambda||_inf at the solution; ``objective_path`` records
    the per-iteration log-likelihoods (non-decreasing).
    """

    theta: ThetaParams
    fitted: ProbabilityModel
    multipliers: np.ndarray
    active_set: tuple[int, ...]
    kkt_residual: float
    iterations: int
    converged: bool
    corrected: bool
    objective_path: tuple[float, ...]


def mle_h0(table: ContingencyTable) -> tuple[ThetaParams, ProbabilityModel]:
    """Closed-form MLE under homogeneity: every row shares the pooled
    column distribution.  Raises EmptyColumnError for an all-zero column."""
    cols = table.column_totals
    if (cols <= 0).any():
        j = int(np.flatnonzero(cols <= 0)[0]) + 1
        raise EmptyColumnError(f"column {j} has total count zero")
    nu = table.row_totals / table.n
    pi_hat = cols / table.n
    I, J = table.n_rows, table.n_cols
    theta2 = np.log(pi_hat[: J - 1] / pi_hat[J - 1])
    theta = ThetaParams(
        theta2=theta2,
        theta12=np.zeros((I - 1) * (J - 1)),
        n_rows=I,
        n_cols=J,
    )
    model = ProbabilityModel.from_rows(nu, np.tile(pi_hat, (I, 1)))
    return theta, model


def _analysis_table(
    table: ContingencyTable, zero_cell_correction: bool
) -> tuple[ContingencyTable, bool]:
    if not table.has_zero_cell():
        return table, False
    if not zero_cell_correction:
        raise ZeroCellError(
            "table has zero cells; pass zero_cell_correction=True to apply "
            "a +0.5 continuity correction"
        )
    return table.corrected(0.5), True


def mle_h1(
    table: ContingencyTable,
    tol: float = 1e-9,
    max_iter: int = 200,
    zero_cell_correction: bool = False,
) -> ConstrainedFit:
    """Order-restricted MLE over {theta : R theta >= 0}.

    ``tol`` is on the gradient scale: convergence requires the stationarity
    residual divided by n to fall below it with nonpositive multipliers.
    Zero-cell tables are refused unless ``zero_cell_correction`` opts in to
    the +0.5 correction (recorded in the result).  Raises NonConvergence
    with the best iterate attached if ``max_iter`` is exhausted.
    """
    work, corrected = _analysis_table(table, zero_cell_correction)
    I, J = work.n_rows, work.n_cols
    design = design_matrices(I, J)
    R = design.R.astype(float)
    m = R.shape[0]
    dim = I * (J - 1)
    n = work.n
    nu = work.row_totals / n

    theta_hat, _ = mle_h0(work)
    theta = theta_hat.vector.copy()  # R theta = 0 exactly: feasible start
    active = list(range(m))
    drop_tol = tol * n

    def objective(vec: np.ndarray) -> float:
        return log_likelihood(work, ThetaParams.from_vector(vec, I, J))[0]

    path = [objective(theta)]
    iterations = 0
    converged = False

    for iterations in range(1, max_iter + 1):
        params = ThetaParams.from_vector(theta, I, J)
        _, grad = log_likelihood(work, params)
        hess = -n * fisher_information(params, nu)
        Ra = R[active]
        na = len(active)
        kkt = np.zeros((dim + na, dim + na))
        kkt[:dim, :dim] = -hess
        kkt[:dim, dim:] = Ra.T
        kkt[dim:, :dim] = Ra
        rhs = np.concatenate([grad, np.zeros(na)])
        sol = np.linalg.solve(kkt, rhs)
        step, mu = sol[:dim], sol[dim:]

        stationary = np.max(np.abs(step)) < 1e-11 * (1.0 + np.max(np.abs(theta)))
        if not stationary:
            # largest feasible step against the inactive constraints
            alpha_max, blocking = 1.0, None
            r_theta = R @ theta
            r_step = R @ step
            for k in range(m):
                if k in active or r_step[k] >= -1e-14:
                    continue
                limit = max(0.0, -r_theta[k] / r_step[k])
                if limit < alpha_max:
                    alpha_max, blocking = limit, k

            f0 = path[-1]
            if blocking is not None and alpha_max <= 1e-14:
                # an inactive constraint already sits on its boundary and
                # the step pushes into it: absorb it without moving
                active.append(blocking)
                active.sort()
                path.append(f0)
                continue

            # backtrack for a monotone objective (Newton direction is an
            # ascent direction under the working-set equalities)
            alpha, moved = alpha_max, False
            while alpha > 1e-14:
                candidate = theta + alpha * step
                if np.max(np.abs(candidate)) > THETA_CAP:
                    raise OverflowGuard(
                        "iterate left the THETA_CAP box; the constrained MLE "
                        "appears to lie at the boundary of the parameter space"
                    )
                f1 = objective(candidate)
                if f1 >= f0 - 1e-12:
                    theta, moved = candidate, True
                    path.append(f1)
                    break
                alpha *= 0.5
                blocking = None
            if moved:
                if blocking is not None and alpha == alpha_max:
                    active.append(blocking)
                    active.sort()
                continue
            # no float-resolvable ascent left: treat as stationary
            stationary = True

        if na == 0 or np.max(mu) <= drop_tol:
            converged = True
            break
        release = active[int(np.argmax(mu))]
        active.remove(release)
    else:
        fit = _finalize(work, theta, n, R, corrected, max_iter, False, path)
        raise NonConvergence(
            f"no KKT point within {max_iter} iterations", fit=fit
        )

    return _finalize(work, theta, n, R, corrected, iterations, converged, path)


def _finalize(
    work: ContingencyTable,
    theta_vec: np.ndarray,
    n: float,
    R: np.ndarray,
    corrected: bool,
    iterations: int,
    converged: bool,
    path: list[float],
) -> ConstrainedFit:
    I, J = work.n_rows, work.n_cols
    params = ThetaParams.from_vector(theta_vec, I, J)
    nu = work.row_totals / n
    fitted = probabilities_from_theta(params, nu)
    _, grad = log_likelihood(work, params)
    # report activity by the fixed tie rule, re-estimating multipliers on
    # the reported set by least squares
    slack = R @ theta_vec
    reported = tuple(int(k) for k in np.flatnonzero(np.abs(slack) <= ACTIVE_TOL))
    multipliers = np.zeros(R.shape[0])
    if reported:
        sol, *_ = np.linalg.lstsq(R[list(reported)].T, grad, rcond=None)
        multipliers[list(reported)] = sol
    residual = float(np.max(np.abs(grad - R.T @ multipliers)))
    return ConstrainedFit(
        theta=params,
        fitted=fitted,
        multipliers=multipliers,
        active_set=reported,
        kkt_residual=residual,
        iterations=iterations,
        converged=converged,
        corrected=corrected,
        objective_path=tuple(path),
    )


def kkt_residual(table: ContingencyTable, fit: ConstrainedFit) -> float:
    """Independent recomputation of ||grad l(theta~) - R' lambda||_inf.

    Applies the same +0.5 correction the fit used, so the gradient refers
    to the likelihood that was actually maximized.
    """
    work = table.corrected(0.5) if fit.corrected and table.has_zero_cell() else table
    _, grad = log_likelihood(work, fit.theta)
    design = design_matrices(work.n_rows, work.n_cols)
    return float(np.max(np.abs(grad - design.R.astype(float).T @ fit.multipliers)))
