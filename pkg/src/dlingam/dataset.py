"""Observational data container and CSV ingestion.

Samples are stored one variable per row (``values`` has shape ``(p, n)``) so
the pairwise regressions of the discovery loop stream contiguous rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NumericalError

MIN_VARIABLES = 2
MIN_SAMPLES = 3


@dataclass(frozen=True)
class Dataset:
    """Immutable ``p x n`` sample matrix with variable labels.

    Parameters
    ----------
    values : array-like, shape (p, n)
        One row per variable, one column per sample.
    labels : sequence of str, optional
        Variable names; defaults to ``x1..xp``.
    """

    values: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise DataError(f"data must be a 2-d matrix, got {values.ndim} dims")
        p, n = values.shape
        if p < MIN_VARIABLES:
            raise DataError(f"need at least {MIN_VARIABLES} variables, got {p}")
        if n < MIN_SAMPLES:
            raise DataError(f"need at least {MIN_SAMPLES} samples, got {n}")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value for variable {i + 1}, sample {j + 1}")
        labels = tuple(self.labels) if len(self.labels) else default_labels(p)
        if len(labels) != p:
            raise DataError(f"{len(labels)} labels for {p} variables")
        if len(set(labels)) != p:
            raise DataError("variable labels must be unique")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_samples(cls, samples, labels: Sequence[str] = ()) -> "Dataset":
        """Build from an ``(n, p)`` samples-as-rows array."""
        return cls(np.asarray(samples, dtype=float).T, tuple(labels))

    def with_values(self, values) -> "Dataset":
        return Dataset(values, self.labels)

    def permute(self, order: Sequence[int]) -> "Dataset":
        """Reorder variables: row ``k`` of the result is row ``order[k]`` here."""
        order = list(order)
        return Dataset(self.values[order], tuple(self.labels[i] for i in order))

    def resample(self, idx) -> "Dataset":
        """Dataset made of the sample columns ``idx`` (bootstrap draws)."""
        return Dataset(self.values[:, idx], self.labels)


def default_labels(p: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(p))


def validate_variable_set(active: Sequence[int], p: int) -> tuple[int, ...]:
    """Check an ordered set of subscripts (unique, in ``[0, p)``)."""
    active = tuple(int(i) for i in active)
    if len(set(active)) != len(active):
        raise ValueError(f"duplicate subscripts in {active}")
    for i in active:
        if not 0 <= i < p:
            raise ValueError(f"subscript {i} outside [0, {p})")
    return active


def load_csv(path, has_header: bool = True, transpose: bool = False) -> Dataset:
    """Read a comma-separated numeric file.

    The default layout is one sample per line. With ``transpose`` each line
    holds one variable instead. Parse errors name the 1-based data row and
    column of the offending cell.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc

    header = None
    if has_header:
        if not rows:
            raise DataError(f"{path}: empty file")
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0])
    parsed = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataError(f"{path}: row {r} has {len(row)} fields, expected {width}")
        for c, cell in enumerate(row, start=1):
            try:
                parsed[r - 1, c - 1] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell.strip()!r} at row {r}, column {c}"
                ) from None

    if transpose:
        values = parsed
        labels = header if header is not None else ()
        if header is not None and len(header) != values.shape[0]:
            # variables-as-rows with a header line: header names the variables
            raise DataError(f"{path}: header has {len(header)} names for {values.shape[0]} variables")
    else:
        values = parsed.T
        labels = header if header is not None else ()
        if header is not None and len(header) != width:
            raise DataError(f"{path}: header has {len(header)} names for {width} columns")
    return Dataset(values, tuple(labels))


def save_csv(d: Dataset, path) -> None:
    """Write samples-as-rows with a header line (inverse of :func:`load_csv`)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(d.labels)
        for row in d.values.T:
            w.writerow([repr(float(v)) for v in row])


def center(d: Dataset) -> Dataset:
    """Subtract each variable's empirical mean."""
    values = d.values - d.values.mean(axis=1, keepdims=True)
    return d.with_values(values)


def standardize(d: Dataset) -> Dataset:
    """Zero mean and unit (1/n) variance per variable.

    Raises
    ------
    NumericalError
        If some variable has zero sample variance.
    """
    centered = d.values - d.values.mean(axis=1, keepdims=True)
    std = np.sqrt(np.mean(centered**2, axis=1))
    for i, s in enumerate(std):
        if not s > 0:
            raise NumericalError(f"variable {d.labels[i]!r} has zero variance")
    return d.with_values(centered / std[:, None])
