"""LiNGAM causal ordering by repeated exogenous-variable selection.

Each round picks the active variable most independent of its pairwise
regression residuals, appends it to the ordering, and replaces the working
data by those residuals. Connection strengths are then fitted by least
squares on the original data following the ordering.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .dataset import Dataset, center, validate_variable_set
from .errors import DataError, NumericalError
from .kernel import KernelParams, MICounter, default_params, t_kernel
from .regress import is_strictly_lower_triangular_under, multi_regress, residual_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Direct effects ``b[i, j]`` of ``x_j`` on ``x_i`` plus the causal ordering."""

    b: np.ndarray
    ordering: tuple[int, ...]

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "ordering", tuple(int(k) for k in self.ordering))
        if b.shape != (len(self.ordering), len(self.ordering)):
            raise ValueError(f"matrix shape {b.shape} does not match ordering of length {len(self.ordering)}")
        if not is_strictly_lower_triangular_under(b, self.ordering):
            raise ValueError("b is not strictly lower triangular under its ordering")

    @property
    def p(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class TotalEffects:
    """``a[i, j]``: total effect of ``x_j`` on ``x_i``, ``A = (I - B)^-1``."""

    a: np.ndarray


class PriorKnowledge:
    """Ternary path knowledge: ``a_knw[j, i]`` is 1 if ``x_i`` has a directed
    path to ``x_j``, 0 if it has none, -1 if unknown. The diagonal is ignored."""

    def __init__(self, a_knw):
        a = np.array(a_knw, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"prior knowledge must be a square matrix, got shape {a.shape}")
        bad = ~np.isin(a, (0.0, 1.0, -1.0))
        if bad.any():
            j, i = np.argwhere(bad)[0]
            raise DataError(
                f"prior knowledge entry at row {j + 1}, column {i + 1} is {float(a[j, i]):g}; expected 0, 1 or -1"
            )
        both = (a == 1) & (a.T == 1)
        np.fill_diagonal(both, False)
        if both.any():
            j, i = np.argwhere(both)[0]
            raise DataError(
                f"prior knowledge declares paths both ways between variables {i + 1} and {j + 1} (a cycle)"
            )
        a = a.astype(int)
        np.fill_diagonal(a, 0)
        a.setflags(write=False)
        self.a_knw = a

    @property
    def p(self) -> int:
        return self.a_knw.shape[0]

    @classmethod
    def unknown(cls, p: int) -> "PriorKnowledge":
        a = -np.ones((p, p), dtype=int)
        np.fill_diagonal(a, 0)
        return cls(a)

    def permute(self, order: Sequence[int]) -> "PriorKnowledge":
        order = list(order)
        return PriorKnowledge(self.a_knw[np.ix_(order, order)])

    def __repr__(self):
        return f"PriorKnowledge({self.a_knw.tolist()})"


def load_prior_csv(path, p: Optional[int] = None) -> PriorKnowledge:
    """Read a headerless ``p x p`` CSV of 0/1/-1 entries.

    Non-zero diagonal entries are ignored with a warning.
    """
    path = Path(path)
    try:
        lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = []
    for r, line in enumerate(lines, start=1):
        row = []
        for c, cell in enumerate(line.split(","), start=1):
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric prior entry {cell.strip()!r} at row {r}, column {c}") from None
            row.append(value)
        rows.append(row)
    width = {len(r) for r in rows}
    if len(width) != 1 or width != {len(rows)}:
        raise DataError(f"{path}: prior knowledge must be a square matrix")
    a = np.array(rows)
    if p is not None and a.shape[0] != p:
        raise DataError(f"{path}: prior knowledge is {a.shape[0]}x{a.shape[0]} but data has {p} variables")
    if np.any(np.diag(a) != 0):
        log.warning("%s: non-zero diagonal entries in prior knowledge ignored", path)
        np.fill_diagonal(a, 0)
    return PriorKnowledge(a)


@dataclass
class RoundTrace:
    """Bookkeeping for one selection round."""

    active: tuple[int, ...]
    candidates: tuple[int, ...]
    selected: int
    statistics: dict = field(default_factory=dict)
    mi_evaluations: int = 0


def select_exogenous(
    d: Dataset,
    active: Sequence[int],
    params: KernelParams,
    candidates: Optional[Sequence[int]] = None,
    skip: Optional[dict] = None,
    counter: Optional[MICounter] = None,
    stats: Optional[dict] = None,
) -> int:
    """Candidate with the smallest kernel independence statistic.

    Ties resolve to the smallest subscript. ``skip`` maps a candidate to the
    variables whose residual on it is taken to be the variable itself.
    """
    active = validate_variable_set(active, d.p)
    if len(active) < 2:
        raise ValueError("need at least two active variables")
    candidates = sorted(active if candidates is None else candidates)
    best, best_t = None, np.inf
    for j in candidates:
        t = t_kernel(d, j, active, params, skip=(skip or {}).get(j, ()), counter=counter)
        if stats is not None:
            stats[j] = t
        if t < best_t:
            best, best_t = j, t
    if best is None:
        # every statistic was nan/inf
        raise NumericalError("independence statistic undefined for all candidates")
    return best


def _prior_candidates(a_knw: np.ndarray, active: Sequence[int]):
    """Candidate set for one round and whether it is certified exogenous."""
    active = list(active)
    sub = a_knw[np.ix_(active, active)].copy()
    np.fill_diagonal(sub, 0)
    exo = [j for k, j in enumerate(active) if np.all(sub[k] == 0)]
    if exo:
        return exo, True
    endo = {j for k, j in enumerate(active) if np.any(sub[k] == 1)}
    cands = [j for j in active if j not in endo]
    if not cands:
        # cannot happen for consistent knowledge of an acyclic model
        cands = active
    return cands, False


def discover_order(
    d: Dataset,
    params: Optional[KernelParams] = None,
    prior: Optional[PriorKnowledge] = None,
    trace: Optional[list] = None,
) -> tuple[int, ...]:
    """Estimate a causal ordering of the variables of a centered dataset.

    Runs exactly ``p - 1`` selection rounds. With prior knowledge, a round
    whose candidates are certified exogenous (every active column of their
    row is 0) takes the smallest such subscript without any kernel
    evaluation; otherwise variables known to be endogenous are excluded
    and residuals ``r_i^(j)`` with ``a_knw[i, j] == 0`` are not computed.
    """
    p = d.p
    params = params or default_params(d.n)
    if prior is not None and prior.p != p:
        raise DataError(f"prior knowledge is {prior.p}x{prior.p} but data has {p} variables")
    a_knw = prior.a_knw if prior is not None else None
    work = d
    active = list(range(p))
    order = []
    for rnd in range(p - 1):
        counter = MICounter()
        stats = {}
        skip = None
        if a_knw is None:
            cands, certified = list(active), False
        else:
            cands, certified = _prior_candidates(a_knw, active)
            skip = {j: [i for i in active if i != j and a_knw[i, j] == 0] for j in cands}
        try:
            if certified or len(cands) == 1:
                m = min(cands)
            else:
                m = select_exogenous(work, active, params, cands, skip, counter, stats)
            res = residual_matrix(work, m, active, skip=(skip or {}).get(m, ()))
        except NumericalError as exc:
            raise NumericalError(f"round {rnd + 1}: {exc}") from exc
        if trace is not None:
            trace.append(RoundTrace(tuple(active), tuple(cands), m, stats, counter.count))
        order.append(m)
        values = np.array(work.values)
        for k, i in enumerate(res.kept):
            values[i] = res.values[k]
        active.remove(m)
        work = work.with_values(values)
    order.extend(active)
    return tuple(order)


def estimate_b(
    d: Dataset,
    ordering: Sequence[int],
    prior: Optional[PriorKnowledge] = None,
) -> AdjacencyMatrix:
    """Least-squares connection strengths of each variable on all its predecessors.

    Predecessors ``j`` with ``prior.a_knw[i, j] == 0`` (no path from ``x_j`` to
    ``x_i``) are left out of ``x_i``'s regression.
    """
    ordering = validate_variable_set(ordering, d.p)
    if len(ordering) != d.p:
        raise ValueError(f"ordering {ordering} does not cover {d.p} variables")
    x = d.values - d.values.mean(axis=1, keepdims=True)
    b = np.zeros((d.p, d.p))
    for pos, i in enumerate(ordering):
        parents = list(ordering[:pos])
        if prior is not None:
            parents = [j for j in parents if prior.a_knw[i, j] != 0]
        if not parents:
            continue
        try:
            b[i, parents] = multi_regress(x[i], x[parents])
        except NumericalError as exc:
            raise NumericalError(f"regression of {d.labels[i]!r} on its predecessors: {exc}") from exc
    return AdjacencyMatrix(b, ordering)


def total_effects(B: AdjacencyMatrix) -> TotalEffects:
    """``(I - B)^-1`` by unit-lower-triangular solve in causal order.

    The diagonal of the result is exactly one.
    """
    order = list(B.ordering)
    p = B.p
    lower = np.eye(p) - B.b[np.ix_(order, order)]
    inv = linalg.solve_triangular(lower, np.eye(p), lower=True, unit_diagonal=True)
    a = np.empty((p, p))
    a[np.ix_(order, order)] = inv
    return TotalEffects(a)


def r_squared(d: Dataset, B: AdjacencyMatrix, i: int) -> float:
    """Coefficient of determination ``1 - var(e_i) / var(x_i)``, clamped to [0, 1]."""
    x = d.values - d.values.mean(axis=1, keepdims=True)
    var = float(np.mean(x[i] ** 2))
    if not var > 0:
        raise NumericalError(f"variable {d.labels[i]!r} has zero variance")
    resid = x[i] - B.b[i] @ x
    return float(min(1.0, max(0.0, 1.0 - np.mean(resid**2) / var)))


@dataclass
class LingamFit:
    """Everything one discovery run produces."""

    ordering: tuple[int, ...]
    adjacency: AdjacencyMatrix
    total: TotalEffects
    rounds: list = field(default_factory=list)

    @property
    def b(self) -> np.ndarray:
        return self.adjacency.b

    @property
    def mi_evaluations(self) -> int:
        return sum(r.mi_evaluations for r in self.rounds)


def fit(
    d: Dataset,
    params: Optional[KernelParams] = None,
    prior: Optional[PriorKnowledge] = None,
) -> LingamFit:
    """Discover the ordering, then fit ``B`` and its total effects on centered data."""
    d = center(d)
    rounds = []
    ordering = discover_order(d, params, prior, trace=rounds)
    adj = estimate_b(d, ordering, prior)
    return LingamFit(ordering, adj, total_effects(adj), rounds)
