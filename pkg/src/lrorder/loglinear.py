"""Saturated log-linear parametrization of product-multinomial tables.

The joint probabilities follow log p_ij = u + u1(i) + theta2(j) + theta12(ij)
with corner identifiability constraints u1(I) = 0, theta2(J) = 0,
theta12(iJ) = 0 and theta12(Ij) = 0.  The free parameter vector is

    theta = (theta2(1..J-1), theta12(1,1..J-1), ..., theta12(I-1,1..J-1)),

I(J-1) components in lexicographic order.  The redundant terms u and u1(i)
are determined by the fixed row fractions nu_i, which makes every p(theta)
satisfy sum_j p_ij = nu_i identically.  The likelihood-ratio ordering is the
linear cone R theta >= 0 where each row of R forms a second difference of
theta12 over an adjacent 2x2 block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, OverflowGuard, ZeroCellError
from .tables import ContingencyTable, ProbabilityModel

#: Hard cap on any free parameter component.  exp(+-30) brackets every
#: realistic fitted probability; beyond it the fit is running off to the
#: boundary of the parameter space and we abort instead of overflowing.
THETA_CAP = 30.0


@dataclass(frozen=True)
class ThetaParams:
    """Free log-linear parameters (theta2, theta12) for an I x J table."""

    theta2: np.ndarray
    theta12: np.ndarray
    n_rows: int
    n_cols: int

    def __post_init__(self):
        th2 = np.asarray(self.theta2, dtype=float)
        th12 = np.asarray(self.theta12, dtype=float)
        I, J = self.n_rows, self.n_cols
        if th2.shape != (J - 1,) or th12.shape != ((I - 1) * (J - 1),):
            raise DimensionError(
                f"theta2 must have {J - 1} and theta12 {(I - 1) * (J - 1)} entries"
            )
        full = np.concatenate([th2, th12])
        if not np.all(np.isfinite(full)):
            raise OverflowGuard("non-finite log-linear parameter")
        if np.max(np.abs(full), initial=0.0) > THETA_CAP:
            raise OverflowGuard(
                f"|theta| exceeds THETA_CAP={THETA_CAP}: max {np.max(np.abs(full))}"
            )
        for name, val in (("theta2", th2), ("theta12", th12)):
            v = val.copy()
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def vector(self) -> np.ndarray:
        """theta as a single length-I(J-1) vector."""
        return np.concatenate([self.theta2, self.theta12])

    @property
    def theta12_matrix(self) -> np.ndarray:
        return self.theta12.reshape(self.n_rows - 1, self.n_cols - 1)

    @classmethod
    def from_vector(cls, vec, n_rows: int, n_cols: int) -> "ThetaParams":
        vec = np.asarray(vec, dtype=float)
        return cls(
            theta2=vec[: n_cols - 1],
            theta12=vec[n_cols - 1 :],
            n_rows=n_rows,
            n_cols=n_cols,
        )

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "ThetaParams":
        return cls.from_vector(
            np.zeros(n_rows * (n_cols - 1)), n_rows=n_rows, n_cols=n_cols
        )


def g_matrix(h: int) -> np.ndarray:
    """h x h integer matrix with 1 on the diagonal, -1 on the superdiagonal."""
    G = np.eye(h, dtype=np.int64)
    idx = np.arange(h - 1)
    G[idx, idx + 1] = -1
    return G


def t_matrix(h: int) -> np.ndarray:
    """Inverse of g_matrix(h): upper triangular of ones (exact integers)."""
    return np.triu(np.ones((h, h), dtype=np.int64))


@dataclass(frozen=True)
class DesignSet:
    """Design and constraint matrices for the I x J parametrization.

    W0 maps the redundant terms (u, u1(1..I-1)) and W the free theta into
    log p; R stacks the (I-1)(J-1) ordering constraints, rows lexicographic
    in (i, j), so that R theta = log local odds ratios.
    """

    n_rows: int
    n_cols: int
    W0: np.ndarray
    W: np.ndarray
    R: np.ndarray
    G_rows: np.ndarray
    G_cols: np.ndarray
    T_rows: np.ndarray
    T_cols: np.ndarray


@lru_cache(maxsize=64)
def design_matrices(n_rows: int, n_cols: int) -> DesignSet:
    """Build W0, W (Kronecker corner parametrization) and the constraint
    matrix R = [0 | G_{I-1} (x) G_{J-1}].  Cached per (I, J); all arrays
    are read-only."""
    I, J = n_rows, n_cols
    if I < 2 or J < 2:
        raise DimensionError("need I >= 2 and J >= 2")
    corner = np.block(
        [
            [np.ones((I - 1, 1), dtype=np.int64), np.eye(I - 1, dtype=np.int64)],
            [np.ones((1, 1), dtype=np.int64), np.zeros((1, I - 1), dtype=np.int64)],
        ]
    )
    W0 = np.kron(corner, np.ones((J, 1), dtype=np.int64))
    pick = np.vstack([np.eye(J - 1, dtype=np.int64), np.zeros((1, J - 1), dtype=np.int64)])
    W = np.kron(corner, pick)
    G_rows, G_cols = g_matrix(I - 1), g_matrix(J - 1)
    R = np.hstack(
        [np.zeros(((I - 1) * (J - 1), J - 1), dtype=np.int64), np.kron(G_rows, G_cols)]
    )
    mats = dict(
        W0=W0,
        W=W,
        R=R,
        G_rows=G_rows,
        G_cols=G_cols,
        T_rows=t_matrix(I - 1),
        T_cols=t_matrix(J - 1),
    )
    for m in mats.values():
        m.setflags(write=False)
    return DesignSet(n_rows=I, n_cols=J, **mats)


def _log1p_sum_exp(values: np.ndarray) -> float:
    """log(1 + sum exp(values)) with max-subtraction stabilization."""
    m = max(0.0, float(np.max(values, initial=-np.inf)))
    return m + np.log(np.exp(-m) + np.exp(values - m).sum())


def _check_cap(theta: ThetaParams):
    full = np.concatenate([theta.theta2, theta.theta12])
    if np.max(np.abs(full), initial=0.0) > THETA_CAP:
        raise OverflowGuard("theta exceeds THETA_CAP")


def normalization_u(theta: ThetaParams, nu) -> float:
    """The constant u(theta) = log nu_I - log(1 + sum_j<J exp theta2(j))."""
    _check_cap(theta)
    nu = np.asarray(nu, dtype=float)
    if nu[-1] <= 0:
        raise ZeroCellError("nu_I must be positive")
    return float(np.log(nu[-1]) - _log1p_sum_exp(theta.theta2))


def row_terms_u1(theta: ThetaParams, nu) -> np.ndarray:
    """Row terms u1(i) = log(nu_i/nu_I)
    + log[(1 + sum exp theta2) / (1 + sum exp(theta2 + theta12(i)))]."""
    _check_cap(theta)
    nu = np.asarray(nu, dtype=float)
    if (nu <= 0).any():
        raise ZeroCellError("all nu_i must be positive")
    base = _log1p_sum_exp(theta.theta2)
    th12 = theta.theta12_matrix
    out = np.empty(theta.n_rows - 1)
    for i in range(theta.n_rows - 1):
        out[i] = (
            np.log(nu[i] / nu[-1])
            + base
            - _log1p_sum_exp(theta.theta2 + th12[i])
        )
    return out


def probabilities_from_theta(theta: ThetaParams, nu) -> ProbabilityModel:
    """Joint probabilities p(theta) with fixed row fractions nu.

    Row-conditional distributions are softmax rows of the theta terms, so
    sum_j p_ij = nu_i holds by construction.
    """
    _check_cap(theta)
    nu = np.asarray(nu, dtype=float)
    I, J = theta.n_rows, theta.n_cols
    logits = np.zeros((I, J))
    logits[:, : J - 1] += theta.theta2
    logits[: I - 1, : J - 1] += theta.theta12_matrix
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    pi = e / e.sum(axis=1, keepdims=True)
    return ProbabilityModel.from_rows(nu, pi)


def theta_from_probabilities(model: ProbabilityModel) -> ThetaParams:
    """Invert the parametrization: theta2(j) = log(p_Ij / p_IJ) and
    theta12(ij) = log p_ij - log p_iJ - log p_Ij + log p_IJ.

    Raises ZeroCellError if any joint probability is zero; OverflowGuard if
    the implied parameters leave the THETA_CAP box.
    """
    P = model.matrix
    if (P <= 0).any():
        raise ZeroCellError("all joint probabilities must be positive")
    logP = np.log(P)
    theta2 = logP[-1, :-1] - logP[-1, -1]
    theta12 = logP[:-1, :-1] - logP[:-1, [-1]] - logP[[-1], :-1] + logP[-1, -1]
    return ThetaParams(
        theta2=theta2,
        theta12=theta12.reshape(-1),
        n_rows=model.n_rows,
        n_cols=model.n_cols,
    )


def log_likelihood(
    table: ContingencyTable, theta: ThetaParams
) -> tuple[float, np.ndarray]:
    """Log-likelihood kernel N' log p(theta) and its analytic gradient.

    The gradient in the free coordinates is W'(N - n p(theta)); finite
    differences are used only as a test oracle.
    """
    if (table.n_rows, table.n_cols) != (theta.n_rows, theta.n_cols):
        raise DimensionError("table and theta dimensions differ")
    nu = table.row_totals / table.n
    model = probabilities_from_theta(theta, nu)
    N = table.vec
    value = float(N @ np.log(model.p))
    design = design_matrices(table.n_rows, table.n_cols)
    gradient = design.W.T @ (N - table.n * model.p)
    return value, gradient
