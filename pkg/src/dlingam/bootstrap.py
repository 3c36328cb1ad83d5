"""Percentile bootstrap intervals for direct and total effects."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import PriorKnowledge, fit
from .dataset import Dataset
from .errors import LingamError, NumericalError
from .kernel import KernelParams

log = logging.getLogger(__name__)

MIN_REPS = 100
MAX_FAILURE_RATE = 0.10


@dataclass
class BootstrapResult:
    """Per-entry percentile intervals; ``*_lower[i, j]`` bounds the effect of
    ``x_j`` on ``x_i``. An entry is significant when its interval excludes 0."""

    reps: int
    level: float
    b_lower: np.ndarray
    b_upper: np.ndarray
    a_lower: np.ndarray
    a_upper: np.ndarray
    failures: int = 0
    b_samples: Optional[np.ndarray] = None
    a_samples: Optional[np.ndarray] = None

    @property
    def b_significant(self) -> np.ndarray:
        return (self.b_lower > 0) | (self.b_upper < 0)

    @property
    def a_significant(self) -> np.ndarray:
        sig = (self.a_lower > 0) | (self.a_upper < 0)
        np.fill_diagonal(sig, False)
        return sig

    def at_level(self, level: float) -> "BootstrapResult":
        """Recompute intervals from the stored replicates at another level."""
        if self.b_samples is None:
            raise ValueError("replicate samples were not kept")
        return _summarize(self.b_samples, self.a_samples, level, self.failures)


def _replicate(task):
    values, labels, idx, params, prior = task
    d = Dataset(values[:, idx], labels)
    try:
        res = fit(d, params, prior)
    except (LingamError, np.linalg.LinAlgError) as exc:
        return None, str(exc)
    return (res.b, res.total.a), None


def _summarize(b_samples, a_samples, level, failures) -> BootstrapResult:
    lo, hi = 50 * (1 - level), 50 * (1 + level)
    b_lower, b_upper = np.percentile(b_samples, [lo, hi], axis=0)
    a_lower, a_upper = np.percentile(a_samples, [lo, hi], axis=0)
    # total-effect diagonal is exactly 1 in every replicate
    np.fill_diagonal(a_lower, 1.0)
    np.fill_diagonal(a_upper, 1.0)
    return BootstrapResult(
        b_samples.shape[0], level, b_lower, b_upper, a_lower, a_upper, failures, b_samples, a_samples
    )


def bootstrap(
    d: Dataset,
    reps: int = 1000,
    level: float = 0.95,
    params: Optional[KernelParams] = None,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    prior: Optional[PriorKnowledge] = None,
    threads: int = 1,
) -> BootstrapResult:
    """Resample samples with replacement and refit the full pipeline each time.

    Replicate ``r`` draws its indices from ``SeedSequence([seed, r])`` (or
    from ``rng`` when no seed is given), so results do not depend on
    ``threads``. Failed replicates are dropped; more than 10% failures
    abort with :class:`NumericalError`.
    """
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} bootstrap replicates, got {reps}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if seed is None:
        rng = rng or np.random.default_rng()
        seed = int(rng.integers(2**63))
    n = d.n
    tasks = []
    for r in range(reps):
        idx = np.random.default_rng(np.random.SeedSequence([seed, r])).integers(n, size=n)
        tasks.append((d.values, d.labels, idx, params, prior))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=max(1, reps // (4 * threads))))
    else:
        results = [_replicate(t) for t in tasks]
    ok = [r for r, err in results if r is not None]
    failures = reps - len(ok)
    if failures:
        log.warning("%d of %d bootstrap replicates failed", failures, reps)
    if failures > MAX_FAILURE_RATE * reps:
        raise NumericalError(f"{failures} of {reps} bootstrap replicates failed")
    b_samples = np.stack([b for b, _ in ok])
    a_samples = np.stack([a for _, a in ok])
    return _summarize(b_samples, a_samples, level, failures)


def significant_edges(r: BootstrapResult) -> list:
    """Edges ``(j, i, lower, upper)`` meaning ``x_j -> x_i`` with an interval excluding 0."""
    out = []
    for i, j in zip(*np.nonzero(r.b_significant)):
        out.append((int(j), int(i), float(r.b_lower[i, j]), float(r.b_upper[i, j])))
    return out
