"""Synthetic LiNGAM benchmark with random DAGs and non-Gaussian disturbances.

External-influence laws, all rescaled analytically to zero mean and unit
variance before the requested variance is applied:

==  ======================================  ===================================
id  law                                     parameters (weight, mean, sd)
==  ======================================  ===================================
a   Student t, 3 dof
b   double exponential (Laplace)
c   uniform
d   Student t, 5 dof
e   exponential
f   two double exponentials                 (.5, -1, b=.5), (.5, 1, b=.5)
g   2 Gaussians, symmetric, multimodal      (.5, -1.5, .5), (.5, 1.5, .5)
h   2 Gaussians, symmetric, transitional    (.5, -1, 1), (.5, 1, 1)
i   2 Gaussians, symmetric, unimodal        (.5, 0, 1), (.5, 0, 3)
j   2 Gaussians, asymmetric, multimodal     (.3, -2, .5), (.7, 1, .5)
k   2 Gaussians, asymmetric, transitional   (.3, -1.5, .7), (.7, .5, .7)
l   2 Gaussians, asymmetric, unimodal       (.3, -.8, 1), (.7, .35, .5)
m   4 Gaussians, symmetric, multimodal      means -3,-1,1,3, sd .4, equal weights
n   4 Gaussians, symmetric, transitional    means -3,-1,1,3, sd .8, equal weights
o   4 Gaussians, symmetric, unimodal        weights .15,.35,.35,.15, means -2,-.5,.5,2, sd 1,.5,.5,1
p   4 Gaussians, asymmetric, multimodal     weights .1,.2,.3,.4, means -3,-1,1,3, sd .4
q   4 Gaussians, asymmetric, transitional   weights .1,.2,.3,.4, means -3,-1,1,3, sd .8
r   4 Gaussians, asymmetric, unimodal       weights .1,.2,.3,.4, means -2,-.5,.3,1, sd 1,.6,.5,.4
==  ======================================  ===================================
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import AdjacencyMatrix, PriorKnowledge, fit
from .dataset import Dataset, default_labels, save_csv
from .errors import LingamError
from .kernel import default_params

COEFF_LOW, COEFF_HIGH = 0.5, 1.5
VAR_LOW, VAR_HIGH = 1.0, 3.0
DENSITIES = ("sparse", "sparse2", "sparse5", "dense")


# -- external influences -------------------------------------------------------

_MIXTURES = {
    "g": ([0.5, 0.5], [-1.5, 1.5], [0.5, 0.5]),
    "h": ([0.5, 0.5], [-1.0, 1.0], [1.0, 1.0]),
    "i": ([0.5, 0.5], [0.0, 0.0], [1.0, 3.0]),
    "j": ([0.3, 0.7], [-2.0, 1.0], [0.5, 0.5]),
    "k": ([0.3, 0.7], [-1.5, 0.5], [0.7, 0.7]),
    "l": ([0.3, 0.7], [-0.8, 0.35], [1.0, 0.5]),
    "m": ([0.25] * 4, [-3.0, -1.0, 1.0, 3.0], [0.4] * 4),
    "n": ([0.25] * 4, [-3.0, -1.0, 1.0, 3.0], [0.8] * 4),
    "o": ([0.15, 0.35, 0.35, 0.15], [-2.0, -0.5, 0.5, 2.0], [1.0, 0.5, 0.5, 1.0]),
    "p": ([0.1, 0.2, 0.3, 0.4], [-3.0, -1.0, 1.0, 3.0], [0.4] * 4),
    "q": ([0.1, 0.2, 0.3, 0.4], [-3.0, -1.0, 1.0, 3.0], [0.8] * 4),
    "r": ([0.1, 0.2, 0.3, 0.4], [-2.0, -0.5, 0.3, 1.0], [1.0, 0.6, 0.5, 0.4]),
}
_LAPLACE_MIX = ([0.5, 0.5], [-1.0, 1.0], 0.5)

DISTRIBUTIONS = tuple("abcdefghijklmnopqr")


def _normal_raw_moments(m, s):
    return (m, m * m + s * s, m**3 + 3 * m * s * s, m**4 + 6 * m * m * s * s + 3 * s**4)


def _laplace_raw_moments(m, b):
    v = 2 * b * b
    return (m, m * m + v, m**3 + 3 * m * v, m**4 + 6 * m * m * v + 24 * b**4)


def _mixture_raw_moments(weights, comps):
    return tuple(sum(w * c[k] for w, c in zip(weights, comps)) for k in range(4))


def _raw_moments(dist: str):
    if dist in _MIXTURES:
        w, m, s = _MIXTURES[dist]
        return _mixture_raw_moments(w, [_normal_raw_moments(a, b) for a, b in zip(m, s)])
    if dist == "f":
        w, m, b = _LAPLACE_MIX
        return _mixture_raw_moments(w, [_laplace_raw_moments(a, b) for a in m])
    if dist == "b":
        return _laplace_raw_moments(0.0, 1.0)
    if dist == "c":
        return (0.0, 1 / 3, 0.0, 1 / 5)  # uniform(-1, 1)
    if dist == "e":
        return (1.0, 2.0, 6.0, 24.0)
    if dist in ("a", "d"):
        nu = 3 if dist == "a" else 5
        fourth = 3 * nu * nu / ((nu - 2) * (nu - 4)) if nu > 4 else math.inf
        return (0.0, nu / (nu - 2), 0.0, fourth)
    raise ValueError(f"unknown distribution id {dist!r}; expected one of a..r")


def distribution_moments(dist: str) -> dict:
    """Population moments (mean to kurtosis) of the raw law."""
    m1, m2, m3, m4 = _raw_moments(dist)
    var = m2 - m1 * m1
    c3 = m3 - 3 * m1 * m2 + 2 * m1**3
    c4 = m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1**4 if math.isfinite(m4) else math.inf
    return {"mean": m1, "var": var, "skew": c3 / var**1.5, "kurtosis": c4 / var**2}


def _raw_sample(dist: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if dist in _MIXTURES:
        w, m, s = (np.asarray(v) for v in _MIXTURES[dist])
        comp = rng.choice(len(w), size=n, p=w)
        return rng.normal(m[comp], s[comp])
    if dist == "f":
        w, m, b = _LAPLACE_MIX
        comp = rng.choice(2, size=n, p=w)
        return rng.laplace(np.asarray(m)[comp], b)
    if dist == "a":
        return rng.standard_t(3, size=n)
    if dist == "b":
        return rng.laplace(0.0, 1.0, size=n)
    if dist == "c":
        return rng.uniform(-1.0, 1.0, size=n)
    if dist == "d":
        return rng.standard_t(5, size=n)
    if dist == "e":
        return rng.exponential(1.0, size=n)
    raise ValueError(f"unknown distribution id {dist!r}; expected one of a..r")


def sample_external(dist: str, n: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` draws of law ``dist`` with population mean 0 and the given variance."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    mom = distribution_moments(dist)
    z = (_raw_sample(dist, n, rng) - mom["mean"]) / math.sqrt(mom["var"])
    return z * math.sqrt(variance)


# -- random DAGs ---------------------------------------------------------------


@dataclass(frozen=True)
class DagSpec:
    """Random-DAG recipe.

    ``density`` is ``"sparse2"``/``"sparse5"`` (expected adjacent count 2 or 5),
    ``"sparse"`` (2 or 5 drawn per instance) or ``"dense"`` (full DAG).
    """

    p: int
    density: str = "sparse"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"need p >= 2, got {self.p}")
        if self.density not in DENSITIES:
            raise ValueError(f"density must be one of {', '.join(DENSITIES)}; got {self.density!r}")


def edge_probability(p: int, target_adjacent: float) -> float:
    """Bernoulli rate giving ``target_adjacent`` expected neighbours (capped at 1)."""
    return min(1.0, target_adjacent / (p - 1))


def random_dag(spec: DagSpec, rng: np.random.Generator) -> np.ndarray:
    """Strictly lower-triangular ``B``; nonzeros uniform on ``[-1.5,-.5] U [.5,1.5]``."""
    p = spec.p
    if spec.density == "dense":
        s = 1.0
    else:
        target = {"sparse2": 2, "sparse5": 5}.get(spec.density)
        if target is None:
            target = int(rng.choice([2, 5]))
        s = edge_probability(p, target)
    mask = np.tril(rng.random((p, p)) < s, k=-1)
    mags = rng.uniform(COEFF_LOW, COEFF_HIGH, size=(p, p))
    signs = rng.choice([-1.0, 1.0], size=(p, p))
    return np.where(mask, mags * signs, 0.0)


def path_indicator(b) -> np.ndarray:
    """``c[j, i] = 1`` iff a directed path ``x_i -> ... -> x_j`` exists."""
    edge = np.asarray(b) != 0
    reach = edge.copy()
    while True:
        nxt = reach | ((edge.astype(int) @ reach.astype(int)) > 0)
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    out = reach.astype(int)
    np.fill_diagonal(out, 0)
    return out


def mask_prior(true_b, hide_prob: float, rng: np.random.Generator) -> PriorKnowledge:
    """Path-indicator prior with each off-diagonal entry hidden (-1) w.p. ``hide_prob``."""
    if not 0.0 <= hide_prob <= 1.0:
        raise ValueError(f"hide_prob must be in [0, 1], got {hide_prob}")
    a = path_indicator(true_b)
    p = a.shape[0]
    hide = rng.random((p, p)) < hide_prob
    np.fill_diagonal(hide, False)
    a[hide] = -1
    return PriorKnowledge(a)


def frobenius_distance(true_b, est_b) -> float:
    """``sqrt(trace(D^T D))`` with ``D = true_b - est_b``."""
    true_b = np.asarray(true_b, dtype=float)
    est_b = np.asarray(est_b, dtype=float)
    if true_b.shape != est_b.shape:
        raise ValueError(f"shape mismatch: {true_b.shape} vs {est_b.shape}")
    diff = true_b - est_b
    return float(np.sqrt(np.trace(diff.T @ diff)))


# -- instances -----------------------------------------------------------------


@dataclass
class BenchmarkInstance:
    """Generated problem. ``true_b`` is in generation (causal) order; the data
    rows are permuted so that data variable ``k`` is generated variable
    ``permutation[k]``."""

    true_b: np.ndarray
    dists: tuple[str, ...]
    variances: np.ndarray
    data: Dataset
    permutation: tuple[int, ...]
    seed: Optional[int] = None
    density: str = ""

    @property
    def true_b_data_order(self) -> np.ndarray:
        perm = list(self.permutation)
        return self.true_b[np.ix_(perm, perm)]

    @property
    def true_ordering_data_order(self) -> tuple[int, ...]:
        """A causal ordering of the data variables (inverse permutation)."""
        return tuple(int(k) for k in np.argsort(self.permutation))


def generate_instance(spec: DagSpec, n: int, rng: np.random.Generator) -> BenchmarkInstance:
    b = random_dag(spec, rng)
    p = spec.p
    dists = tuple(DISTRIBUTIONS[k] for k in rng.integers(len(DISTRIBUTIONS), size=p))
    variances = rng.uniform(VAR_LOW, VAR_HIGH, size=p)
    x = np.empty((p, n))
    for i in range(p):
        x[i] = sample_external(dists[i], n, variances[i], rng) + b[i, :i] @ x[:i]
    perm = tuple(int(k) for k in rng.permutation(p))
    return BenchmarkInstance(b, dists, variances, Dataset(x[list(perm)]), perm, spec.seed, spec.density)


def instance_from_b(b, n: int, rng, dists: Sequence[str] = None, variances=None) -> Dataset:
    """Data from a fixed ``B`` (any acyclic orientation), unpermuted."""
    b = np.asarray(b, dtype=float)
    p = b.shape[0]
    dists = dists or ("c",) * p
    variances = np.ones(p) if variances is None else np.asarray(variances, dtype=float)
    e = np.vstack([sample_external(dists[i], n, variances[i], rng) for i in range(p)])
    x = np.linalg.solve(np.eye(p) - b, e)
    return Dataset(x)


def save_instance(inst: BenchmarkInstance, directory) -> Path:
    """Write ``data.csv``, ``true_b.csv`` (data labeling) and ``meta.txt``."""
    from .export import write_matrix_csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_csv(inst.data, directory / "data.csv")
    write_matrix_csv(directory / "true_b.csv", inst.true_b_data_order, inst.data.labels)
    meta = {
        "seed": inst.seed,
        "p": inst.data.p,
        "n": inst.data.n,
        "density": inst.density,
        "permutation": ",".join(map(str, inst.permutation)),
        "dists": ",".join(inst.dists),
        "variances": ",".join(repr(float(v)) for v in inst.variances),
    }
    (directory / "meta.txt").write_text("".join(f"{k}={v}\n" for k, v in meta.items()), encoding="utf-8")
    return directory


# -- benchmark -----------------------------------------------------------------


@dataclass
class CellResult:
    p: int
    n: int
    density: str
    distances: list = field(default_factory=list)
    times: list = field(default_factory=list)
    failures: int = 0
    prior_distances: list = field(default_factory=list)
    prior_times: list = field(default_factory=list)
    prior_failures: int = 0

    @property
    def median_distance(self) -> float:
        return statistics.median(self.distances) if self.distances else math.nan

    @property
    def median_time(self) -> float:
        return statistics.median(self.times) if self.times else math.nan

    @property
    def median_prior_distance(self) -> float:
        return statistics.median(self.prior_distances) if self.prior_distances else math.nan

    @property
    def median_prior_time(self) -> float:
        return statistics.median(self.prior_times) if self.prior_times else math.nan


@dataclass
class BenchReport:
    cells: list
    reps: int
    seed: int
    prior_hide: Optional[float] = None

    def distance_rows(self):
        header = ["p", "n", "density", "reps", "failures", "median_distance"]
        if self.prior_hide is not None:
            header += ["prior_hide", "prior_failures", "median_distance_prior"]
        rows = [header]
        for c in self.cells:
            row = [c.p, c.n, c.density, self.reps, c.failures, repr(c.median_distance)]
            if self.prior_hide is not None:
                row += [repr(self.prior_hide), c.prior_failures, repr(c.median_prior_distance)]
            rows.append([str(v) for v in row])
        return rows

    def time_rows(self):
        header = ["p", "n", "density", "reps", "median_time_s"]
        if self.prior_hide is not None:
            header += ["median_time_prior_s"]
        rows = [header]
        for c in self.cells:
            row = [c.p, c.n, c.density, self.reps, f"{c.median_time:.4f}"]
            if self.prior_hide is not None:
                row += [f"{c.median_prior_time:.4f}"]
            rows.append([str(v) for v in row])
        return rows

    @property
    def failures(self) -> int:
        return sum(c.failures + c.prior_failures for c in self.cells)


def _run_rep(task):
    (p, n, density, cell_idx, rep, seed, prior_hide, overrides) = task
    rng = np.random.default_rng(np.random.SeedSequence([seed, cell_idx, rep]))
    inst = generate_instance(DagSpec(p, density, seed), n, rng)
    params = default_params(n, **overrides)
    truth = inst.true_b_data_order
    out = {}
    try:
        t0 = time.perf_counter()
        est = fit(inst.data, params)
        out["time"] = time.perf_counter() - t0
        out["distance"] = frobenius_distance(truth, est.b)
    except (LingamError, np.linalg.LinAlgError) as exc:
        out["error"] = str(exc)
    if prior_hide is not None:
        prior_rng = np.random.default_rng(np.random.SeedSequence([seed, cell_idx, rep, 1]))
        prior = mask_prior(inst.true_b, prior_hide, prior_rng).permute(inst.permutation)
        try:
            t0 = time.perf_counter()
            est = fit(inst.data, params, prior)
            out["prior_time"] = time.perf_counter() - t0
            out["prior_distance"] = frobenius_distance(truth, est.b)
        except (LingamError, np.linalg.LinAlgError) as exc:
            out["prior_error"] = str(exc)
    return out


def run_benchmark(
    dims: Sequence[int],
    sizes: Sequence[int],
    densities: Sequence[str] = ("sparse",),
    reps: int = 5,
    seed: int = 0,
    prior_hide: Optional[float] = None,
    kernel_overrides: Optional[dict] = None,
    threads: int = 1,
) -> BenchReport:
    """Median Frobenius distance and discovery time per (p, n, density) cell.

    Each repetition draws from ``SeedSequence([seed, cell, rep])`` so results
    do not depend on ``threads``. Failed repetitions are counted, not raised.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    for dens in densities:
        DagSpec(2, dens)
    overrides = dict(kernel_overrides or {})
    cells, tasks = [], []
    for p in dims:
        for n in sizes:
            for dens in densities:
                idx = len(cells)
                cells.append(CellResult(p, n, dens))
                tasks += [(p, n, dens, idx, r, seed, prior_hide, overrides) for r in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_rep, tasks))
    else:
        results = [_run_rep(t) for t in tasks]
    for task, res in zip(tasks, results):
        cell = cells[task[3]]
        if "distance" in res:
            cell.distances.append(res["distance"])
            cell.times.append(res["time"])
        else:
            cell.failures += 1
        if prior_hide is not None:
            if "prior_distance" in res:
                cell.prior_distances.append(res["prior_distance"])
                cell.prior_times.append(res["prior_time"])
            else:
                cell.prior_failures += 1
    return BenchReport(cells, reps, seed, prior_hide)
