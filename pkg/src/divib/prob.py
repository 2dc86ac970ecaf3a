"""Finite distributions, channels and joints, and the information quantities on them.

Everything is in nats. Zero-mass terms are masked out (``0 log 0 = 0``,
``0 log(0/0) = 0``), never floored with an epsilon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import LabelMismatch, SupportViolation, ZeroMarginal

SUM_TOL = 1e-12
PAIR_SEP = "|"


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _labels(labels, n: int | None = None) -> tuple[str, ...]:
    out = tuple(str(s) for s in labels)
    if len(set(out)) != len(out):
        raise ValueError("labels must be unique")
    if n is not None and len(out) != n:
        raise ValueError(f"{len(out)} labels for {n} entries")
    return out


def product_labels(a: Sequence[str], b: Sequence[str]) -> tuple[str, ...]:
    """Labels of ``A x B`` flattened x-major, as ``"a|b"``."""
    return tuple(f"{x}{PAIR_SEP}{y}" for x in a for y in b)


@dataclass(frozen=True, eq=False)
class Distribution:
    labels: tuple[str, ...]
    p: np.ndarray

    def __post_init__(self):
        p = _frozen(self.p, 1)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "labels", _labels(self.labels, p.size))
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(math.fsum(p) - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")

    @classmethod
    def uniform(cls, labels) -> "Distribution":
        labels = tuple(labels)
        return cls(labels, np.full(len(labels), 1.0 / len(labels)))

    @classmethod
    def from_array(cls, p, labels=None) -> "Distribution":
        p = np.asarray(p, dtype=float)
        if labels is None:
            labels = [str(i) for i in range(p.size)]
        return cls(tuple(labels), p)

    def __len__(self) -> int:
        return self.p.size

    @property
    def support(self) -> np.ndarray:
        return self.p > 0

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Distribution":
        return cls(tuple(d["labels"]), d["p"])


@dataclass(frozen=True, eq=False)
class UnnormalizedWeight:
    """Nonnegative mass vector with total at most 1 (e.g. a restriction of p~)."""

    labels: tuple[str, ...]
    w: np.ndarray

    def __post_init__(self):
        w = _frozen(self.w, 1)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "labels", _labels(self.labels, w.size))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if math.fsum(w) > 1.0 + SUM_TOL:
            raise ValueError("total weight exceeds 1")

    def __len__(self) -> int:
        return self.w.size

    @property
    def p(self) -> np.ndarray:
        return self.w


Mass = Union[Distribution, UnnormalizedWeight]


@dataclass(frozen=True, eq=False)
class Channel:
    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = _frozen(self.rows, 2)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "input_labels", _labels(self.input_labels, rows.shape[0]))
        object.__setattr__(self, "output_labels", _labels(self.output_labels, rows.shape[1]))
        if np.any(rows < 0) or not np.all(np.isfinite(rows)):
            raise ValueError("channel entries must be finite and nonnegative")
        bad = np.abs(rows.sum(axis=1) - 1.0) > SUM_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(f"row {self.input_labels[i]!r} sums to {rows[i].sum()!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    @classmethod
    def identity(cls, labels) -> "Channel":
        labels = tuple(labels)
        return cls(labels, labels, np.eye(len(labels)))

    @classmethod
    def deterministic(cls, input_labels, output_labels, mapping) -> "Channel":
        """Channel sending input ``i`` to output ``mapping[i]`` (indices)."""
        rows = np.zeros((len(input_labels), len(output_labels)))
        rows[np.arange(len(input_labels)), np.asarray(mapping, dtype=int)] = 1.0
        return cls(tuple(input_labels), tuple(output_labels), rows)

    @classmethod
    def constant(cls, input_labels, r: Distribution) -> "Channel":
        return cls(tuple(input_labels), r.labels, np.tile(r.p, (len(input_labels), 1)))

    @classmethod
    def from_array(cls, rows, input_labels=None, output_labels=None) -> "Channel":
        rows = np.asarray(rows, dtype=float)
        if input_labels is None:
            input_labels = [str(i) for i in range(rows.shape[0])]
        if output_labels is None:
            output_labels = [str(i) for i in range(rows.shape[1])]
        return cls(tuple(input_labels), tuple(output_labels), rows)

    def to_dict(self) -> dict:
        return {
            "input_labels": list(self.input_labels),
            "output_labels": list(self.output_labels),
            "rows": self.rows.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Channel":
        return cls(tuple(d["input_labels"]), tuple(d["output_labels"]), d["rows"])


@dataclass(frozen=True, eq=False)
class Joint:
    x_labels: tuple[str, ...]
    y_labels: tuple[str, ...]
    p: np.ndarray

    def __post_init__(self):
        p = _frozen(self.p, 2)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x_labels", _labels(self.x_labels, p.shape[0]))
        object.__setattr__(self, "y_labels", _labels(self.y_labels, p.shape[1]))
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("joint entries must be finite and nonnegative")
        if abs(math.fsum(p.ravel()) - 1.0) > SUM_TOL:
            raise ValueError("joint does not sum to 1")

    @classmethod
    def from_array(cls, p, x_labels=None, y_labels=None) -> "Joint":
        p = np.asarray(p, dtype=float)
        if x_labels is None:
            x_labels = [f"x{i}" for i in range(p.shape[0])]
        if y_labels is None:
            y_labels = [f"y{j}" for j in range(p.shape[1])]
        return cls(tuple(x_labels), tuple(y_labels), p)

    @classmethod
    def from_parts(cls, px: Distribution, pygx: Channel) -> "Joint":
        if px.labels != pygx.input_labels:
            raise LabelMismatch("p(X) labels differ from channel inputs")
        return cls(px.labels, pygx.output_labels, px.p[:, None] * pygx.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    def marginal_x(self) -> Distribution:
        # fsum keeps marginals invariant under permutations of each row
        return Distribution(self.x_labels, [math.fsum(row) for row in self.p])

    def marginal_y(self) -> Distribution:
        return Distribution(self.y_labels, [math.fsum(col) for col in self.p.T])

    def flatten(self) -> Distribution:
        return Distribution(product_labels(self.x_labels, self.y_labels), self.p.ravel())

    @classmethod
    def unflatten(cls, d: Distribution, x_labels, y_labels) -> "Joint":
        return cls(tuple(x_labels), tuple(y_labels), d.p.reshape(len(x_labels), len(y_labels)))

    def to_dict(self) -> dict:
        return {"x_labels": list(self.x_labels), "y_labels": list(self.y_labels), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Joint":
        return cls(tuple(d["x_labels"]), tuple(d["y_labels"]), d["p"])


# ---------------------------------------------------------------------------
# array-level kernels (used directly by the solvers)


def kl_array(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise SupportViolation("p has mass where q has none")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def entropy_array(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def channel_mi_array(q: np.ndarray, p: np.ndarray) -> float:
    """I(A;T) for input law ``p`` and encoder rows ``q``."""
    joint = p[:, None] * q
    qt = joint.sum(axis=0)
    mask = joint > 0
    denom = np.broadcast_to(qt[None, :], joint.shape)
    return float(np.sum(joint[mask] * np.log(q[mask] / denom[mask])))


# ---------------------------------------------------------------------------
# public operations


def kl_divergence(p: Mass, q: Mass) -> float:
    """D(p||q) in nats; raises :class:`SupportViolation` if supp(p) is not in supp(q)."""
    if len(p) != len(q):
        raise LabelMismatch("distributions on different alphabets")
    return kl_array(p.p, q.p)


def entropy(p: Mass) -> float:
    return entropy_array(p.p)


def mutual_information(j: Joint) -> float:
    px = np.array([math.fsum(r) for r in j.p])
    py = np.array([math.fsum(c) for c in j.p.T])
    return kl_array(j.p.ravel(), np.outer(px, py).ravel())


def channel_mutual_information(k: Channel, p: Distribution) -> float:
    """I(A;T) of the joint ``p(a) k(t|a)``."""
    if k.input_labels != p.labels:
        raise LabelMismatch("channel inputs differ from distribution labels")
    return channel_mi_array(k.rows, p.p)


def pushforward(k: Channel, p: Mass) -> Mass:
    if k.input_labels != p.labels:
        raise LabelMismatch("channel inputs differ from distribution labels")
    out = p.p @ k.rows
    if isinstance(p, UnnormalizedWeight):
        return UnnormalizedWeight(k.output_labels, out)
    # renormalize away accumulated rounding only
    return Distribution(k.output_labels, out / math.fsum(out))


def compose_channels(k2: Channel, k1: Channel) -> Channel:
    """``k2 o k1``: first apply ``k1``, then ``k2``."""
    if k1.output_labels != k2.input_labels:
        raise LabelMismatch("k1 outputs differ from k2 inputs")
    return Channel(k1.input_labels, k2.output_labels, k1.rows @ k2.rows)


def tensor_channels(ka: Channel, kb: Channel) -> Channel:
    return Channel(
        product_labels(ka.input_labels, kb.input_labels),
        product_labels(ka.output_labels, kb.output_labels),
        np.kron(ka.rows, kb.rows),
    )


def tensor_dists(pa: Distribution, pb: Distribution) -> Distribution:
    return Distribution(product_labels(pa.labels, pb.labels), np.kron(pa.p, pb.p))


def joint_decompose(j: Joint) -> tuple[Distribution, Distribution, Channel]:
    """Split a joint into p(X), p(Y) and p(Y|X)."""
    px = j.marginal_x()
    zero = np.flatnonzero(px.p <= 0)
    if zero.size:
        i = int(zero[0])
        raise ZeroMarginal(i, j.x_labels[i])
    rows = j.p / px.p[:, None]
    return px, j.marginal_y(), Channel(j.x_labels, j.y_labels, rows)
