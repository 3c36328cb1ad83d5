"""Kernel generalized-variance mutual information with low-rank Gram factors.

For two samples ``y1, y2`` with Gaussian Gram matrices ``K1, K2`` the
estimator is::

    MI = -1/2 log( det Kk / det Dk )

    Kk = [[(K1 + c I)^2, K1 K2], [K2 K1, (K2 + c I)^2]],  c = n * kappa / 2
    Dk = blockdiag((K1 + c I)^2, (K2 + c I)^2)

Scaling ``Kk`` by ``Dk^{-1/2}`` on both sides leaves ``[[I, R1 R2], [R2 R1, I]]``
with ``Ri = Ki (Ki + c I)^{-1}``. With ``Ki = Ui diag(li) Ui^T`` this reduces to
``-1/2 sum log(1 - rho_k^2)`` where ``rho_k`` are the singular values of
``diag(d1) U1^T U2 diag(d2)`` and ``di = li / (li + c)``, an ``M1 x M2``
problem. The dense ``2n x 2n`` determinant route is kept as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset, validate_variable_set
from .errors import NumericalError
from .regress import residual_matrix

DENSE_LIMIT = 500


@dataclass(frozen=True)
class KernelParams:
    """Settings of the kernel MI estimator.

    ``pivot_tol`` is per sample: incomplete Cholesky stops once the
    remaining diagonal mass drops to ``pivot_tol * n``.
    """

    sigma: float
    kappa: float
    max_rank: int = 60
    pivot_tol: float = 1e-6
    center: bool = True
    standardize: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.max_rank < 1:
            raise ValueError(f"max_rank must be >= 1, got {self.max_rank}")
        if not self.pivot_tol > 0:
            raise ValueError(f"pivot_tol must be positive, got {self.pivot_tol}")


def default_params(n: int, **overrides) -> KernelParams:
    """Bandwidth and regularization recommended for sample size ``n``."""
    if n > 1000:
        params = KernelParams(sigma=0.5, kappa=2e-3)
    else:
        params = KernelParams(sigma=1.0, kappa=2e-2)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(params, **overrides) if overrides else params


@dataclass(frozen=True)
class LowRankGram:
    """``factor @ factor.T`` approximates the Gram matrix."""

    factor: np.ndarray
    pivots: tuple[int, ...]
    residual_trace: float

    @property
    def rank(self) -> int:
        return self.factor.shape[1]


def gram_matrix(y, sigma: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.exp(-((y[:, None] - y[None, :]) ** 2) / (2.0 * sigma**2))


def incomplete_cholesky(y, params: KernelParams) -> LowRankGram:
    """Pivoted incomplete Cholesky of the Gaussian Gram matrix of ``y``.

    Pivots greedily on the largest remaining diagonal entry and stops when
    the remaining trace is at most ``pivot_tol * n`` or ``max_rank``
    columns have been produced.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    max_rank = min(params.max_rank, n)
    stop = params.pivot_tol * n
    inv2s2 = 1.0 / (2.0 * params.sigma**2)
    # rows of Gt are the factor's columns, kept contiguous for the updates
    Gt = np.empty((max_rank, n))
    diag = np.ones(n)
    pivots = []
    trace = float(n)
    for k in range(max_rank):
        if trace <= stop:
            break
        i = int(np.argmax(diag))
        pivot = diag[i]
        if pivot <= 0.0:
            break
        pivots.append(i)
        col = np.exp(-((y - y[i]) ** 2) * inv2s2)
        if k:
            col -= Gt[:k, i] @ Gt[:k]
        col /= np.sqrt(pivot)
        Gt[k] = col
        diag -= col * col
        diag[pivots] = 0.0
        np.maximum(diag, 0.0, out=diag)
        trace = float(diag.sum())
    return LowRankGram(Gt[: len(pivots)].T, tuple(pivots), trace)


def _prepare(y, params: KernelParams) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if params.standardize:
        y = y - y.mean()
        sd = np.sqrt(np.mean(y * y))
        if sd > 0:
            y = y / sd
    return y


def _eigenbasis(y, params: KernelParams) -> np.ndarray:
    """Rows ``u_k * l_k / (l_k + c)`` for the eigenpairs of the (centered) Gram.

    Built from the eigendecomposition of the small ``M x M`` matrix
    ``G^T G``; the shrinkage factor is folded in before any division so
    near-null directions stay bounded.
    """
    Gt = incomplete_cholesky(y, params).factor.T
    if params.center:
        Gt = Gt - Gt.mean(axis=1, keepdims=True)
    n = Gt.shape[1]
    lam, V = np.linalg.eigh(Gt @ Gt.T)
    keep = lam > 0
    lam, V = lam[keep], V[:, keep]
    c = n * params.kappa / 2.0
    # u = G v / sqrt(l); scaled by l / (l + c); returned transposed (M x n)
    return (V.T * (np.sqrt(lam) / (lam + c))[:, None]) @ Gt


def _mi_from_bases(w1: np.ndarray, w2: np.ndarray) -> float:
    if w1.shape[0] == 0 or w2.shape[0] == 0:
        return 0.0
    rho = np.linalg.svd(w1 @ w2.T, compute_uv=False)
    rho2 = rho * rho
    if np.any(rho2 >= 1.0) or not np.all(np.isfinite(rho2)):
        raise NumericalError("degenerate Gram matrices in kernel MI (canonical correlation >= 1)")
    return float(-0.5 * np.sum(np.log1p(-rho2)))


def kgv_mi(y1, y2, params: KernelParams) -> float:
    """Kernel mutual information between two samples (low-rank route)."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape != y2.shape or y1.ndim != 1:
        raise ValueError(f"samples must be equal-length vectors, got {y1.shape} and {y2.shape}")
    if y1.shape[0] < 3:
        raise ValueError("need at least 3 samples")
    b1 = _eigenbasis(_prepare(y1, params), params)
    b2 = _eigenbasis(_prepare(y2, params), params)
    return _mi_from_bases(b1, b2)


def kgv_mi_dense(y1, y2, params: KernelParams) -> float:
    """Same estimator via explicit ``2n x 2n`` determinants (oracle, n <= 500)."""
    y1 = _prepare(y1, params)
    y2 = _prepare(y2, params)
    n = y1.shape[0]
    if n > DENSE_LIMIT:
        raise ValueError(f"dense route limited to n <= {DENSE_LIMIT}")
    K1 = gram_matrix(y1, params.sigma)
    K2 = gram_matrix(y2, params.sigma)
    if params.center:
        H = np.eye(n) - 1.0 / n
        K1 = H @ K1 @ H
        K2 = H @ K2 @ H
    c = n * params.kappa / 2.0
    A1 = K1 + c * np.eye(n)
    A2 = K2 + c * np.eye(n)
    A1sq, A2sq = A1 @ A1, A2 @ A2
    big = np.block([[A1sq, K1 @ K2], [K2 @ K1, A2sq]])
    sign_k, logdet_k = np.linalg.slogdet(big)
    sign_1, logdet_1 = np.linalg.slogdet(A1sq)
    sign_2, logdet_2 = np.linalg.slogdet(A2sq)
    if min(sign_k, sign_1, sign_2) <= 0:
        raise NumericalError("non-positive determinant in dense kernel MI")
    value = -0.5 * (logdet_k - logdet_1 - logdet_2)
    if not np.isfinite(value):
        raise NumericalError("non-finite determinant ratio in dense kernel MI")
    return float(value)


class MICounter:
    """Counts kernel MI evaluations; handed to the discovery loop for tracing."""

    def __init__(self):
        self.count = 0


def t_kernel(
    d: Dataset,
    j: int,
    active: Sequence[int],
    params: KernelParams,
    skip: Sequence[int] = (),
    counter: Optional[MICounter] = None,
) -> float:
    """Sum of kernel MIs between ``x_j`` and each residual ``r_i^(j)``, ``i in active``."""
    active = validate_variable_set(active, d.p)
    if len(active) < 2:
        raise ValueError("t_kernel needs at least two active variables")
    res = residual_matrix(d, j, active, skip=skip)
    base_j = _eigenbasis(_prepare(d.values[j], params), params)
    total = 0.0
    for row in res.values:
        total += _mi_from_bases(base_j, _eigenbasis(_prepare(row, params), params))
        if counter is not None:
            counter.count += 1
    return total
