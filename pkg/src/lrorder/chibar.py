"""Chi-bar-squared machinery for the order-restricted test.

Under homogeneity the T and S statistics are asymptotically distributed as
the mixture sum_h w_h chi2_{k-h} with k = (I-1)(J-1), where w_j is the
probability that the projection of Z ~ N(0, H^-1) onto the nonnegative
orthant in the H metric has exactly j strictly positive components, and

    H = K(nu) (x) K(pi),   H^-1 = K^-1(nu) (x) K^-1(pi),

built from symmetric tridiagonal K matrices of the row fractions and the
common column distribution.  Weights are estimated by Monte Carlo
(:func:`estimate_weights`): draw Z through the closed-form Cholesky factor
of H^-1, solve the nonnegative quadratic program

    min_{zeta >= 0}  0.5 zeta' H zeta - (H z)' zeta

with a Lawson-Hanson active-set solver, and tally positive-component
counts.  :func:`weights_by_subsets` is a slower validation oracle that
enumerates all 2^k subsets and multiplies the two block orthant
probabilities.  P-values follow the t <= 0 -> 1 rule and otherwise sum
w_h * Pr(chi2_{k-h} > t) over h < k.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .errors import (
    DegenerateError,
    DimensionTooLarge,
    LengthMismatch,
    NonIdentifiable,
    NotPositiveDefinite,
)
from .loglinear import ThetaParams, design_matrices, g_matrix, t_matrix
from .tables import ProbabilityModel

#: Components of the projection above this are counted "strictly positive".
#: The active-set solver returns exact zeros on its active set, so any value
#: well below typical positive magnitudes works; 1e-9 is the pinned choice.
POS_EPS = 1e-9

#: Fixed work-chunk size for Monte Carlo replication batches.  Chunk
#: boundaries are independent of the worker count, which is what makes the
#: tallies bitwise reproducible under parallel execution.
CHUNK = 65536

_SUBSET_CAP = 12


# -- Fisher information -------------------------------------------------------

def fisher_information(theta: ThetaParams, nu) -> np.ndarray:
    """Per-observation Fisher information W' [diag_i nu_i (D_pi - pi pi')] W
    for product-multinomial sampling at the given theta."""
    from .loglinear import probabilities_from_theta

    nu = np.asarray(nu, dtype=float)
    model = probabilities_from_theta(theta, nu)
    I, J = theta.n_rows, theta.n_cols
    design = design_matrices(I, J)
    W = design.W.astype(float)
    blocks = np.zeros((I * J, I * J))
    for i in range(I):
        row = model.pi[i]
        blocks[i * J : (i + 1) * J, i * J : (i + 1) * J] = nu[i] * (
            np.diag(row) - np.outer(row, row)
        )
    return W.T @ blocks @ W


def fisher_information_h0(nu, pi) -> np.ndarray:
    """Limiting Fisher information under homogeneity: the Kronecker product
    [[1, nu*'], [nu*, diag(nu*)]] (x) (D_pi* - pi* pi*') with the last
    component of each probability vector dropped."""
    nu = np.asarray(nu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if (nu <= 0).any() or (pi <= 0).any():
        raise DegenerateError("nu and pi must be strictly positive")
    nu_star = nu[:-1]
    pi_star = pi[:-1]
    I = nu.size
    left = np.zeros((I, I))
    left[0, 0] = 1.0
    left[0, 1:] = nu_star
    left[1:, 0] = nu_star
    left[1:, 1:] = np.diag(nu_star)
    right = np.diag(pi_star) - np.outer(pi_star, pi_star)
    return np.kron(left, right)


# -- the H matrices ------------------------------------------------------------

def k_matrix(q) -> np.ndarray:
    """Symmetric tridiagonal K(q): diagonal (q_k + q_{k+1})/(q_k q_{k+1}),
    off-diagonal -1/q_{k+1}."""
    q = np.asarray(q, dtype=float)
    if (q <= 0).any():
        raise DegenerateError("probability vector has a zero component")
    K = q.size
    out = np.zeros((K - 1, K - 1))
    idx = np.arange(K - 1)
    out[idx, idx] = (q[:-1] + q[1:]) / (q[:-1] * q[1:])
    off = -1.0 / q[1 : K - 1]
    out[idx[:-1], idx[:-1] + 1] = off
    out[idx[:-1] + 1, idx[:-1]] = off
    return out


def k_matrix_inverse(q) -> np.ndarray:
    """Closed-form inverse T'(D_q* - q* q*') T with T the all-ones upper
    triangular matrix; avoids numerical inversion of K(q)."""
    q = np.asarray(q, dtype=float)
    if (q <= 0).any():
        raise DegenerateError("probability vector has a zero component")
    T = t_matrix(q.size - 1).astype(float)
    q_star = q[:-1]
    return T.T @ (np.diag(q_star) - np.outer(q_star, q_star)) @ T


@dataclass(frozen=True)
class HMatrices:
    """H = K(nu) (x) K(pi) with its closed-form inverse and Cholesky
    factors (lower triangular)."""

    K_nu: np.ndarray
    K_pi: np.ndarray
    H: np.ndarray
    H_inv: np.ndarray
    chol_H: np.ndarray
    chol_Hinv: np.ndarray

    @property
    def dim(self) -> int:
        return self.H.shape[0]


def h_matrices(nu, pi) -> HMatrices:
    """Assemble the chi-bar metric for row fractions nu and common column
    distribution pi; raises DegenerateError / NotPositiveDefinite."""
    K_nu = k_matrix(nu)
    K_pi = k_matrix(pi)
    H = np.kron(K_nu, K_pi)
    H_inv = np.kron(k_matrix_inverse(nu), k_matrix_inverse(pi))
    dim = H.shape[0]
    if np.max(np.abs(H @ H_inv - np.eye(dim))) > 1e-10:
        raise NotPositiveDefinite("H and its closed-form inverse disagree")
    try:
        chol_H = np.linalg.cholesky(H)
        chol_Hinv = np.linalg.cholesky(H_inv)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky failed: {exc}") from exc
    return HMatrices(
        K_nu=K_nu, K_pi=K_pi, H=H, H_inv=H_inv, chol_H=chol_H, chol_Hinv=chol_Hinv
    )


# -- nonnegative projection (batched Lawson-Hanson) ----------------------------

def _project_orthant_batch(H: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Solve min_{zeta >= 0} 0.5 zeta'H zeta - (Hz)'zeta for each row z of Z.

    Lawson-Hanson NNLS on the equivalent least-squares form, run in lockstep
    over the batch: every sample follows its own active-set path, samples
    sharing a passive set are solved together through one factorization.
    Active coordinates are exact zeros in the result.
    """
    B, k = Z.shape
    Y = Z @ H  # gradient offset H z per sample
    zeta = np.zeros((B, k))
    passive = np.zeros((B, k), dtype=bool)
    done = np.zeros(B, dtype=bool)
    dual_tol = 1e-10 * np.maximum(1.0, np.abs(Y).max(axis=1))
    codes_pow = 1 << np.arange(k, dtype=np.int64)

    for _ in range(3 * k + 16):
        dual = Y - zeta @ H
        dual[passive] = -np.inf
        best = np.argmax(dual, axis=1)
        best_val = dual[np.arange(B), best]
        done |= best_val <= dual_tol
        if done.all():
            break
        work = np.flatnonzero(~done)
        passive[work, best[work]] = True

        for _inner in range(k + 2):
            codes = passive[work] @ codes_pow
            trial = np.zeros((work.size, k))
            for code in np.unique(codes):
                sel = np.flatnonzero(codes == code)
                rows = work[sel]
                idx = np.flatnonzero(passive[rows[0]])
                sub = np.linalg.solve(
                    H[np.ix_(idx, idx)], Y[np.ix_(rows, idx)].T
                ).T
                trial[np.ix_(sel, idx)] = sub
            violating = (trial <= 0.0) & passive[work]
            bad = violating.any(axis=1)
            zeta[work[~bad]] = trial[~bad]
            if not bad.any():
                break
            rows = work[bad]
            old = zeta[rows]
            new = trial[bad]
            denom = old - new
            safe = np.where(denom > 0, denom, 1.0)
            ratios = np.where(violating[bad], old / safe, np.inf)
            alpha = ratios.min(axis=1)
            stepped = old + alpha[:, None] * (new - old)
            hit = ratios <= alpha[:, None] * (1.0 + 1e-12)
            stepped[hit] = 0.0
            zeta[rows] = stepped
            passive[rows] &= ~hit
            work = rows
        else:
            # numerical stall: current iterates are feasible with dual
            # residual at tolerance level, accept them
            done[work] = True
    return zeta


def nonneg_projection(H, z) -> tuple[np.ndarray, int]:
    """Project one vector: returns (zeta_hat, number of components
    strictly above POS_EPS).  H must be symmetric positive definite."""
    H = np.asarray(H, dtype=float)
    z = np.asarray(z, dtype=float)
    if H.shape != (z.size, z.size):
        raise LengthMismatch(f"H {H.shape} incompatible with z of size {z.size}")
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("H is not positive definite") from exc
    zeta = _project_orthant_batch(H, z[None, :])[0]
    return zeta, int(np.sum(zeta > POS_EPS))


# -- deterministic normal streams ----------------------------------------------

def _standard_normals(seed: int, start: int, count: int, dim: int) -> np.ndarray:
    """Standard normals for replications [start, start+count), inverse-CDF
    applied to a Philox counter stream.

    Replication r owns positions [r*dim, (r+1)*dim) of one global uniform
    stream keyed by ``seed``; Philox lets any aligned chunk seek there
    directly, so chunked or parallel tallies reproduce the serial run
    bitwise.  ``start * dim`` must be a multiple of 4 (Philox advances in
    4-word blocks); CHUNK is a multiple of 4 to guarantee this.
    """
    offset = start * dim
    if offset % 4:
        raise ValueError("chunk start must be 4-word aligned")
    bg = Philox(key=seed & ((1 << 128) - 1))
    bg.advance(offset // 4)
    u = Generator(bg).random(count * dim)
    np.maximum(u, 1e-300, out=u)  # ndtri(0) = -inf guard
    return ndtri(u).reshape(count, dim)


# -- chi-bar weights -----------------------------------------------------------

@dataclass(frozen=True)
class ChiBarWeights:
    """Mixing weights of the chi-bar distribution; index h multiplies the
    chi-square with (I-1)(J-1) - h degrees of freedom."""

    w: np.ndarray
    n_rows: int
    n_cols: int
    reps: int
    seed: int
    source: str  # 'monte_carlo' or 'subset_enumeration'
    counts: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        k = (self.n_rows - 1) * (self.n_cols - 1)
        if w.shape != (k + 1,):
            raise LengthMismatch(f"need {k + 1} weights for a {self.n_rows}x{self.n_cols} table")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 0.05:
            raise ValueError(f"weights sum to {w.sum()!r}")
        if self.source == "monte_carlo":
            alt = abs(np.sum((-1.0) ** np.arange(k + 1) * w))
            if alt > 5.0 / math.sqrt(self.reps):
                raise ValueError(
                    f"alternating weight sum {alt} exceeds the 5/sqrt(R) bound"
                )
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if self.counts is not None:
            c = np.asarray(self.counts, dtype=np.int64).copy()
            c.setflags(write=False)
            object.__setattr__(self, "counts", c)

    @property
    def dim(self) -> int:
        return self.w.size - 1

    @property
    def ref(self) -> str:
        return (
            f"{self.source}:{self.n_rows}x{self.n_cols}"
            f":reps={self.reps}:seed={self.seed}"
        )


def _weights_from_counts(counts: np.ndarray, reps: int) -> np.ndarray:
    # telescoped cumulative division: the float weights sum to exactly 1.0
    cum = np.cumsum(counts).astype(float) / reps
    return np.diff(np.concatenate([[0.0], cum]))


def estimate_weights(
    nu, pi, reps: int = 1_000_000, seed: int = 0, workers: int = 1
) -> ChiBarWeights:
    """Monte Carlo chi-bar weights for row fractions nu and column
    distribution pi.

    Each replication draws Z ~ N(0, H^-1) through chol(H^-1) applied to
    inverse-CDF standard normals, projects onto the nonnegative orthant in
    the H metric, and tallies the count of strictly positive components.
    Deterministic for fixed (seed, reps) regardless of ``workers``:
    replication r always consumes the same slice of the Philox stream and
    chunk boundaries are fixed by CHUNK.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    nu = np.asarray(nu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    mats = h_matrices(nu, pi)
    k = mats.dim
    L_inv_T = mats.chol_Hinv.T.copy()

    starts = list(range(0, reps, CHUNK))

    def run_chunk(start: int) -> np.ndarray:
        count = min(CHUNK, reps - start)
        z = _standard_normals(seed, start, count, k) @ L_inv_T
        zeta = _project_orthant_batch(mats.H, z)
        npos = (zeta > POS_EPS).sum(axis=1)
        return np.bincount(npos, minlength=k + 1).astype(np.int64)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(run_chunk, starts))
    else:
        tallies = [run_chunk(s) for s in starts]
    counts = np.sum(tallies, axis=0)

    return ChiBarWeights(
        w=_weights_from_counts(counts, reps),
        n_rows=nu.size,
        n_cols=pi.size,
        reps=reps,
        seed=seed,
        source="monte_carlo",
        counts=counts,
    )


def _orthant_probability(sigma: np.ndarray, samples: int, key) -> float:
    """Pr(N(0, sigma) >= 0) by Monte Carlo with ``samples`` draws."""
    dim = sigma.shape[0]
    if dim == 0:
        return 1.0
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("orthant block is not positive definite") from exc
    bg = Philox(key=key)
    u = Generator(bg).random(samples * dim)
    np.maximum(u, 1e-300, out=u)
    draws = ndtri(u).reshape(samples, dim) @ L.T
    return float((draws >= 0.0).all(axis=1).mean())


def weights_by_subsets(
    nu, pi, mc_orthant_samples: int = 100_000, seed: int = 0
) -> ChiBarWeights:
    """Subset-enumeration weight oracle.

    For each subset S of constraint indices, read as the set of strictly
    positive projection components, the weight contribution is
    Pr(N(0, H(S,S)^-1) >= 0) * Pr(N(0, Sigma2(S)) >= 0) where Sigma2 is the
    Schur complement of H(S,S) on the complement; card(S) = j tallies into
    w_j.  Validation path only; production weights come from
    :func:`estimate_weights`.
    """
    nu = np.asarray(nu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    mats = h_matrices(nu, pi)
    k = mats.dim
    if k > _SUBSET_CAP:
        raise DimensionTooLarge(f"2^{k} subsets exceed the cap of 2^{_SUBSET_CAP}")
    H = mats.H
    w = np.zeros(k + 1)
    for code in range(1 << k):
        pos = np.flatnonzero([(code >> b) & 1 for b in range(k)])
        comp = np.setdiff1d(np.arange(k), pos)
        if pos.size:
            H_ss = H[np.ix_(pos, pos)]
            sigma1 = np.linalg.inv(H_ss)
            p1 = _orthant_probability(
                sigma1, mc_orthant_samples, key=np.array([seed, 2 * code], dtype=np.uint64)
            )
        else:
            p1 = 1.0
        if comp.size:
            if pos.size:
                cross = H[np.ix_(comp, pos)]
                sigma2 = H[np.ix_(comp, comp)] - cross @ np.linalg.solve(
                    H[np.ix_(pos, pos)], cross.T
                )
            else:
                sigma2 = H[np.ix_(comp, comp)]
            p2 = _orthant_probability(
                sigma2, mc_orthant_samples, key=np.array([seed, 2 * code + 1], dtype=np.uint64)
            )
        else:
            p2 = 1.0
        w[pos.size] += p1 * p2
    return ChiBarWeights(
        w=w,
        n_rows=nu.size,
        n_cols=pi.size,
        reps=mc_orthant_samples,
        seed=seed,
        source="subset_enumeration",
    )


# -- chi-square survival and chi-bar tail --------------------------------------

def chisq_survival(df: int, x: float) -> float:
    """Pr(chi2_df > x) = Q(df/2, x/2), the regularized upper incomplete
    gamma function.

    Series expansion of P for x < df + 1, Lentz continued fraction for Q
    otherwise; absolute accuracy about 1e-14.  Negative x is treated as
    survival 1.
    """
    if df < 1 or df != int(df):
        raise ValueError(f"df must be a positive integer, got {df}")
    if x <= 0:
        return 1.0
    a = df / 2.0
    xx = x / 2.0
    log_prefactor = -xx + a * math.log(xx) - math.lgamma(a)
    if xx < a + 1.0:
        # P(a, x) series: x^a e^-x / Gamma(a+1) * sum x^n / ((a+1)...(a+n))
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(600):
            denom += 1.0
            term *= xx / denom
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return 1.0 - total * math.exp(log_prefactor)
    # Q(a, x) continued fraction, modified Lentz
    tiny = 1e-300
    b = xx + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 600):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return h * math.exp(log_prefactor)


def chibar_pvalue(t: float, weights: ChiBarWeights) -> float:
    """Asymptotic p-value: 1 for t <= 0, otherwise
    sum_{h < k} w_h Pr(chi2_{k-h} > t); the chi2_0 point mass at index k
    contributes nothing for positive t."""
    if t <= 0:
        return 1.0
    k = weights.dim
    w = weights.w
    return float(sum(w[h] * chisq_survival(k - h, t) for h in range(k) if w[h] > 0))


def chibar_quantile(alpha: float, weights: ChiBarWeights) -> float:
    """The x > 0 with chibar_pvalue(x) = alpha, by bisection on [0, 200]
    to |dx| <= 1e-6.  Raises NonIdentifiable if all mass sits on chi2_0."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    k = weights.dim
    if weights.w[:k].sum() <= 0.0:
        raise NonIdentifiable("all chi-bar mass is on the point mass at zero")
    lo, hi = 0.0, 200.0
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if chibar_pvalue(mid, weights) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- serialization --------------------------------------------------------------

def weights_to_json(weights: ChiBarWeights) -> str:
    """Serialize to the interchange schema {dims, w, reps, seed, source};
    floats carry 17 significant digits so parsing round-trips exactly."""
    from .jsonio import dump_json

    doc = {
        "dims": {"I": weights.n_rows, "J": weights.n_cols},
        "w": list(weights.w),
        "reps": weights.reps,
        "seed": weights.seed,
        "source": weights.source,
    }
    return dump_json(doc)


def weights_from_json(text: str) -> ChiBarWeights:
    import json

    doc = json.loads(text)
    return ChiBarWeights(
        w=np.asarray(doc["w"], dtype=float),
        n_rows=int(doc["dims"]["I"]),
        n_cols=int(doc["dims"]["J"]),
        reps=int(doc["reps"]),
        seed=int(doc["seed"]),
        source=str(doc["source"]),
    )


def weights_for_model(model: ProbabilityModel, reps: int, seed: int, workers: int = 1) -> ChiBarWeights:
    """Weights at the homogeneity fit of a fitted model (nu, common pi)."""
    pi_common = model.p.reshape(model.n_rows, model.n_cols).sum(axis=0)
    return estimate_weights(model.nu, pi_common, reps=reps, seed=seed, workers=workers)
