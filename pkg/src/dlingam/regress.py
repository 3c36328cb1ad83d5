"""Least-squares machinery: pairwise residuals, multiple regression, ordering checks.

Covariances use the 1/n convention throughout; it cancels in every ratio used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .dataset import Dataset, validate_variable_set
from .errors import NumericalError

MAX_CONDITION = 1e12


def _cov(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a - a.mean()) * (b - b.mean())))


def regression_coefficient(xi, xj) -> float:
    """``cov(xi, xj) / var(xj)``; raises on a constant regressor."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != xj.shape:
        raise ValueError(f"length mismatch: {xi.shape} vs {xj.shape}")
    var = _cov(xj, xj)
    if not var > 0:
        raise NumericalError("regressor has zero variance")
    return _cov(xi, xj) / var


def simple_regress_residual(xi, xj) -> np.ndarray:
    """Residual of ``xi`` after least-squares regression on ``xj``."""
    xi = np.asarray(xi, dtype=float)
    return xi - regression_coefficient(xi, xj) * np.asarray(xj, dtype=float)


@dataclass(frozen=True)
class ResidualMatrix:
    """Residuals of every ``i in kept`` regressed on ``regressor``.

    ``values[k]`` is the residual of variable ``kept[k]``.
    """

    values: np.ndarray
    regressor: int
    kept: tuple[int, ...]


def residual_matrix(
    d: Dataset,
    j: int,
    active: Sequence[int],
    skip: Sequence[int] = (),
) -> ResidualMatrix:
    """Regress each ``i in active`` (``i != j``) on ``x_j``.

    Variables listed in ``skip`` are passed through unchanged (their
    residual is taken to be the variable itself).
    """
    active = validate_variable_set(active, d.p)
    if j not in active:
        raise ValueError(f"regressor {j} not in active set {active}")
    xj = d.values[j]
    var = _cov(xj, xj)
    if not var > 0:
        raise NumericalError(f"variable {d.labels[j]!r} has zero variance")
    kept = tuple(i for i in active if i != j)
    skip = set(skip)
    out = np.empty((len(kept), d.n))
    xj_c = xj - xj.mean()
    for k, i in enumerate(kept):
        xi = d.values[i]
        if i in skip:
            out[k] = xi
        else:
            out[k] = xi - (np.mean((xi - xi.mean()) * xj_c) / var) * xj
    return ResidualMatrix(out, j, kept)


def multi_regress(y, X) -> np.ndarray:
    """Least-squares coefficients of ``y`` on the rows of ``X``.

    Solved through the normal equations with a Cholesky factorization of
    the (1/n) Gram matrix. Rows are expected to be centered.

    Raises
    ------
    NumericalError
        If the Gram matrix has condition number above ``MAX_CONDITION``.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(-1, y.shape[0])
    if X.shape[0] == 0:
        return np.zeros(0)
    n = y.shape[0]
    gram = X @ X.T / n
    cond = np.linalg.cond(gram) if np.all(np.isfinite(gram)) else np.inf
    if not cond < MAX_CONDITION:
        err = NumericalError(f"ill-conditioned design (condition number {cond:.3g})")
        err.condition = cond
        raise err
    rhs = X @ y / n
    return linalg.cho_solve(linalg.cho_factor(gram), rhs)


def is_strictly_lower_triangular_under(b, ordering: Sequence[int], atol: float = 0.0) -> bool:
    """True iff ``b[np.ix_(K, K)]`` has nothing on or above the diagonal."""
    b = np.asarray(b, dtype=float)
    order = list(ordering)
    if sorted(order) != list(range(b.shape[0])):
        raise ValueError(f"{order} is not a permutation of 0..{b.shape[0] - 1}")
    permuted = b[np.ix_(order, order)]
    return bool(np.all(np.abs(np.triu(permuted)) <= atol))
