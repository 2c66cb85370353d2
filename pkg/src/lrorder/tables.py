"""Contingency tables under product-multinomial sampling.

An I x J table holds counts of an ordinal response (columns) for I ordered
treatments (rows); row totals are fixed by design.  Derived quantities live
in :class:`ProbabilityModel`: the joint vector ``p`` in lexicographic
(row-major) order, the row fractions ``nu`` and the row-conditional
distributions ``pi``.  Lexicographic order is the single canonical layout
used by every matrix in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    EmptyRowError,
    NegativeCountError,
    TableParseError,
    ZeroCellError,
)

_ATOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ContingencyTable:
    """Observed I x J counts with row totals; immutable.

    ``counts`` is stored as a float array so that the +0.5 continuity
    correction can be represented; :func:`from_counts` enforces the
    integer contract for user data.
    """

    counts: np.ndarray
    n_rows: int
    n_cols: int
    row_totals: np.ndarray
    n: float

    @property
    def column_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def vec(self) -> np.ndarray:
        """Counts stacked lexicographically, N_(i-1)J+j = N_ij."""
        return vec_lex(self.counts)

    def corrected(self, amount: float = 0.5) -> "ContingencyTable":
        """Return a copy with ``amount`` added to every cell."""
        return _from_real_counts(self.counts + amount)

    def has_zero_cell(self) -> bool:
        return bool((self.counts == 0).any())


def _from_real_counts(counts: np.ndarray) -> ContingencyTable:
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    if counts.ndim != 2 or counts.shape[0] < 2 or counts.shape[1] < 2:
        raise DimensionError(f"need at least a 2x2 table, got shape {counts.shape}")
    if (counts < 0).any():
        raise NegativeCountError("cell counts must be nonnegative")
    row_totals = counts.sum(axis=1)
    if (row_totals <= 0).any():
        empty = int(np.flatnonzero(row_totals <= 0)[0]) + 1
        raise EmptyRowError(f"row {empty} has total count zero")
    return ContingencyTable(
        counts=_readonly(counts),
        n_rows=counts.shape[0],
        n_cols=counts.shape[1],
        row_totals=_readonly(row_totals),
        n=float(counts.sum()),
    )


def from_counts(counts) -> ContingencyTable:
    """Build a table from a matrix of nonnegative integers.

    Raises DimensionError (I or J < 2), NegativeCountError (negative or
    non-integer entries) and EmptyRowError (a zero row total).
    """
    arr = np.atleast_2d(np.asarray(counts, dtype=float))
    if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
        raise NegativeCountError("cell counts must be nonnegative integers")
    return _from_real_counts(arr)


def vec_lex(P) -> np.ndarray:
    """Stack a matrix row by row: output index (i-1)*J + j holds P[i][j]."""
    return np.asarray(P, dtype=float).reshape(-1).copy()


@dataclass(frozen=True)
class ProbabilityModel:
    """Joint probabilities ``p`` (lexicographic), row fractions ``nu`` and
    row-conditional distributions ``pi`` with p_ij = nu_i * pi_ij."""

    p: np.ndarray
    nu: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        p, nu, pi = (np.asarray(x, dtype=float) for x in (self.p, self.nu, self.pi))
        I, J = pi.shape
        if p.shape != (I * J,) or nu.shape != (I,):
            raise DimensionError("inconsistent shapes for p, nu, pi")
        if (p < -_ATOL).any() or not np.all(np.isfinite(p)):
            raise ValueError("joint probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"joint probabilities sum to {p.sum()!r}, not 1")
        rows = p.reshape(I, J).sum(axis=1)
        if np.max(np.abs(rows - nu)) > 1e-12:
            raise ValueError("row sums of p do not match nu")
        if np.max(np.abs(p - (nu[:, None] * pi).reshape(-1))) > 1e-12:
            raise ValueError("p_ij != nu_i * pi_ij")
        object.__setattr__(self, "p", _readonly(p))
        object.__setattr__(self, "nu", _readonly(nu))
        object.__setattr__(self, "pi", _readonly(pi))

    @property
    def n_rows(self) -> int:
        return self.pi.shape[0]

    @property
    def n_cols(self) -> int:
        return self.pi.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """The joint probabilities as an I x J matrix."""
        return self.p.reshape(self.pi.shape)

    @classmethod
    def from_joint(cls, P) -> "ProbabilityModel":
        """Normalize any nonnegative matrix with positive row sums."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        total = P.sum()
        if total <= 0:
            raise ValueError("joint matrix must have positive total mass")
        P = P / total
        nu = P.sum(axis=1)
        if (nu <= 0).any():
            raise EmptyRowError("every row needs positive mass")
        pi = P / nu[:, None]
        return cls(p=P.reshape(-1), nu=nu, pi=pi)

    @classmethod
    def from_rows(cls, nu, pi) -> "ProbabilityModel":
        nu = np.asarray(nu, dtype=float)
        pi = np.atleast_2d(np.asarray(pi, dtype=float))
        return cls(p=(nu[:, None] * pi).reshape(-1), nu=nu, pi=pi)


def relative_frequencies(table: ContingencyTable) -> ProbabilityModel:
    """The saturated estimate p_bar = N/n with nu_i = n_i/n."""
    return ProbabilityModel.from_joint(table.counts)


def local_odds_ratios(model: ProbabilityModel) -> np.ndarray:
    """Local odds ratios of adjacent 2x2 blocks of the joint probabilities.

    theta[i, j] = p_ij * p_{i+1,j+1} / (p_{i+1,j} * p_{i,j+1}); identical
    whether computed from joint or row-conditional probabilities.  Raises
    ZeroCellError when a denominator cell is zero.
    """
    P = model.matrix
    num = P[:-1, :-1] * P[1:, 1:]
    den = P[1:, :-1] * P[:-1, 1:]
    if (den == 0).any():
        i, j = np.argwhere(den == 0)[0]
        raise ZeroCellError(
            f"zero denominator cell for local odds ratio at ({i + 1}, {j + 1})"
        )
    return num / den


def read_table_csv(path) -> ContingencyTable:
    """Parse a CSV table: one row per treatment, comma-separated nonnegative
    integers, optional comment lines starting with '#'.  Parse errors carry
    1-based row/column positions."""
    rows: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            parsed = []
            for colno, field in enumerate(fields, start=1):
                token = field.strip()
                try:
                    value = int(token)
                except ValueError:
                    raise TableParseError(
                        f"expected a nonnegative integer, got {token!r}",
                        row=lineno,
                        col=colno,
                    ) from None
                parsed.append(value)
            if rows and len(parsed) != len(rows[-1]):
                raise TableParseError(
                    f"expected {len(rows[-1])} columns, got {len(parsed)}",
                    row=lineno,
                )
            rows.append(parsed)
    if not rows:
        raise TableParseError("no data rows found", row=1)
    return from_counts(rows)
