"""Partitions of finite alphabets, projection and quotient channels, congruence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import AlphabetMismatch, SupportViolation, ZeroCellMass
from .prob import Channel, Distribution

DEFAULT_REL_TOL = 1e-9


@dataclass(frozen=True)
class Partition:
    labels: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.labels)
        cells = [tuple(sorted(int(i) for i in c)) for c in self.cells]
        if any(len(c) == 0 for c in cells):
            raise ValueError("empty cell")
        flat = sorted(i for c in cells for i in c)
        if flat != list(range(n)):
            raise ValueError("cells must be disjoint and cover the alphabet")
        cells.sort(key=lambda c: c[0])
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "cells", tuple(cells))

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def n(self) -> int:
        return len(self.labels)

    def assignment(self) -> np.ndarray:
        """Cell index of every symbol."""
        out = np.empty(self.n, dtype=int)
        for j, c in enumerate(self.cells):
            out[list(c)] = j
        return out

    @classmethod
    def from_assignment(cls, labels, assign) -> "Partition":
        assign = np.asarray(assign)
        groups: dict = {}
        for i, a in enumerate(assign.tolist()):
            groups.setdefault(a, []).append(i)
        return cls(tuple(labels), tuple(tuple(g) for g in groups.values()))

    @classmethod
    def singletons(cls, labels) -> "Partition":
        return cls(tuple(labels), tuple((i,) for i in range(len(labels))))

    @classmethod
    def whole(cls, labels) -> "Partition":
        return cls(tuple(labels), (tuple(range(len(labels))),))

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "cells": [list(c) for c in self.cells]}

    @classmethod
    def from_dict(cls, d: dict) -> "Partition":
        return cls(tuple(d["labels"]), tuple(tuple(c) for c in d["cells"]))


def partition_from_pairs(labels, related: np.ndarray) -> Partition:
    """Transitive closure of a symmetric boolean relation matrix."""
    rows, cols = np.nonzero(related)
    n = len(labels)
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    return Partition.from_assignment(labels, comp)


def partition_from_dib_relation(p: Distribution, ptilde: Distribution, rel_tol: float = DEFAULT_REL_TOL) -> Partition:
    """Group symbols with equal ratio ``p(a) / ptilde(a)`` (cross-multiplied)."""
    if len(p) != len(ptilde):
        raise AlphabetMismatch("p and ptilde live on different alphabets")
    if np.any((p.p > 0) & (ptilde.p <= 0)):
        raise SupportViolation("supp(p) is not contained in supp(ptilde)")
    lhs = np.outer(p.p, ptilde.p)  # p(a) pt(a')
    rhs = lhs.T
    related = np.abs(lhs - rhs) <= rel_tol * np.maximum(lhs, rhs)
    return partition_from_pairs(p.labels, related)


def partition_from_channel_rows(pYgX: Channel, rel_tol: float = DEFAULT_REL_TOL) -> Partition:
    rows = pYgX.rows
    diff = np.max(np.abs(rows[:, None, :] - rows[None, :, :]), axis=2)
    scale = np.max(rows)
    return partition_from_pairs(pYgX.input_labels, diff <= rel_tol * scale)


def projection_channel(P: Partition) -> Channel:
    out = tuple(f"cell{j}" for j in range(len(P)))
    return Channel.deterministic(P.labels, out, P.assignment())


def quotient_channel(q: Channel, p: Distribution, P: Partition) -> Channel:
    """Channel from cells to T averaging the rows of each cell under p."""
    out = np.empty((len(P), q.shape[1]))
    for j, c in enumerate(P.cells):
        idx = list(c)
        mass = p.p[idx].sum()
        if mass <= 0:
            raise ZeroCellMass(f"cell {j} has zero mass")
        out[j] = p.p[idx] @ q.rows[idx] / mass
    out /= out.sum(axis=1, keepdims=True)
    return Channel(tuple(f"cell{j}" for j in range(len(P))), q.output_labels, out)


def enforce_factorization(q: Channel, p: Distribution, P: Partition) -> Channel:
    qbar = quotient_channel(q, p, P)
    return Channel(q.input_labels, q.output_labels, qbar.rows[P.assignment()])


def is_congruent(g: Channel) -> tuple[bool, np.ndarray | None]:
    """Whether ``g`` has a deterministic left inverse; if so return it as an index map."""
    supp = g.rows > 0
    if not np.all(supp.any(axis=1)):
        return False, None
    if np.any(supp.sum(axis=0) > 1):
        return False, None
    # outputs in no support default to input 0
    decoder = np.argmax(supp, axis=0)
    return True, decoder


def partitions_equal_up_to_relabeling(P1: Partition, P2: Partition) -> bool:
    if P1.n != P2.n:
        raise AlphabetMismatch("partitions on alphabets of different size")
    return set(P1.cells) == set(P2.cells)
