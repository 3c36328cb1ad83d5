"""Serialization of results: labeled matrix CSV plus DOT/JSON graphs."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError


def write_matrix_csv(path, m, labels: Sequence[str]) -> None:
    """Labels in the first row and column; cell ``[i, j]`` is the effect of ``j`` on ``i``."""
    m = np.asarray(m, dtype=float)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(labels))
        for label, row in zip(labels, m):
            w.writerow([label] + [repr(float(v)) for v in row])


def read_matrix_csv(path) -> tuple[np.ndarray, tuple[str, ...]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    labels = tuple(c.strip() for c in rows[0][1:])
    p = len(labels)
    if len(rows) != p + 1:
        raise DataError(f"{path}: expected {p} matrix rows, found {len(rows) - 1}")
    m = np.empty((p, p))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != p + 1:
            raise DataError(f"{path}: row {r} has {len(row) - 1} entries, expected {p}")
        if row[0].strip() != labels[r - 1]:
            raise DataError(f"{path}: row label {row[0]!r} does not match column label {labels[r - 1]!r}")
        for c, cell in enumerate(row[1:], start=1):
            try:
                m[r - 1, c - 1] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric entry {cell!r} at row {r}, column {c}") from None
    return m, labels


def _edges(b, significant=None):
    b = np.asarray(b)
    p = b.shape[0]
    for j in range(p):
        for i in range(p):
            if i != j and b[i, j] != 0:
                sig = None if significant is None else bool(significant[i, j])
                yield j, i, float(b[i, j]), sig


def export_dot(b, labels: Sequence[str], significant: Optional[np.ndarray] = None) -> str:
    """Directed graph with one ``x_j -> x_i`` edge per nonzero ``b[i, j]``.

    When significance marks are given, significant edges are drawn bold and
    the rest dashed.
    """
    lines = ["digraph lingam {"]
    for label in labels:
        lines.append(f'  "{label}";')
    for j, i, v, sig in _edges(b, significant):
        attrs = f'label="{v:.2f}"'
        if sig is True:
            attrs += ", style=bold, penwidth=2"
        elif sig is False:
            attrs += ", style=dashed"
        lines.append(f'  "{labels[j]}" -> "{labels[i]}" [{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_json(b, labels: Sequence[str], significant: Optional[np.ndarray] = None, ordering=None) -> str:
    """The DOT structure as JSON: nodes, edges with weights, optional ordering."""
    graph = {
        "nodes": list(labels),
        "edges": [
            {"source": labels[j], "target": labels[i], "weight": v, **({} if sig is None else {"significant": sig})}
            for j, i, v, sig in _edges(b, significant)
        ],
    }
    if ordering is not None:
        graph["ordering"] = [labels[k] for k in ordering]
    return json.dumps(graph, indent=2) + "\n"


def topological_order(b) -> tuple[int, ...]:
    """A causal ordering implied by the nonzero pattern of ``b`` (smallest index first on ties)."""
    b = np.asarray(b)
    p = b.shape[0]
    parents = [set(np.flatnonzero(b[i])) - {i} for i in range(p)]
    order, placed = [], set()
    while len(order) < p:
        ready = [i for i in range(p) if i not in placed and parents[i] <= placed]
        if not ready:
            raise DataError("matrix has a directed cycle; it is not a DAG")
        order.append(ready[0])
        placed.add(ready[0])
    return tuple(order)
