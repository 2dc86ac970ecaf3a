"""Random problems with planted structure, for test suites and scripts.

Distinct ratio levels are kept at least a factor ``sep`` apart so that the
large-beta solutions separate cleanly; tied values are bitwise equal.
"""
from __future__ import annotations

import math

import numpy as np

from .families import HierarchicalModel
from .prob import Distribution, Joint
from .solver import DibProblem


def _levels(rng, k, sep):
    # k values, consecutive ones a factor >= sep apart, in random order
    steps = sep * (1.0 + rng.uniform(0.0, 0.5, size=k - 1))
    v = np.concatenate([[1.0], np.cumprod(steps)])
    return rng.permutation(v)


def _assign(rng, n, k):
    a = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    return rng.permutation(a)


def _normalize(v):
    return v / math.fsum(v)


def random_di_problem(rng, n, sep=1.5) -> tuple[DibProblem, np.ndarray]:
    k = int(rng.integers(1, n + 1))
    lab = _assign(rng, n, k)
    p = _normalize(_levels(rng, k, sep)[lab])
    return DibProblem.from_model(Distribution.from_array(p), HierarchicalModel.di()), lab


def random_custom_problem(rng, n, sep=1.5) -> tuple[DibProblem, np.ndarray]:
    k = int(rng.integers(1, n + 1))
    lab = _assign(rng, n, k)
    pt = _normalize(rng.dirichlet(np.ones(n)) + 0.05)
    p = _normalize(pt * _levels(rng, k, sep)[lab])
    ptd = Distribution.from_array(pt)
    return DibProblem.from_model(Distribution.from_array(p), HierarchicalModel.custom(ptd)), lab


def _separated(vals, sep):
    u = np.unique(vals)
    return u.size < 2 or np.min(u[1:] / u[:-1]) >= sep


def random_ce_problem(rng, shape, sep=1.5, tries=1000) -> DibProblem:
    """Joint whose conditional rows are permutations of a few base rows."""
    nx, ny = shape
    for _ in range(tries):
        n_base = int(rng.integers(1, nx + 1))
        bases = [_normalize(_levels(rng, ny, sep)) for _ in range(n_base)]
        rows = np.array([rng.permutation(bases[int(rng.integers(n_base))]) for _ in range(nx)])
        if _separated(rows.ravel(), sep):
            break
    else:
        raise RuntimeError("could not draw a separated instance")
    px = _normalize(rng.dirichlet(np.ones(nx)) + 0.05)
    j = Joint.from_array(px[:, None] * rows)
    return DibProblem.from_model(j.flatten(), HierarchicalModel.ce(shape))


def random_ib_joint(rng, nx, ny, min_kl=0.05, tries=1000) -> tuple[Joint, np.ndarray]:
    """Joint with duplicated conditional rows; distinct rows are KL-separated."""
    from .prob import kl_array

    for _ in range(tries):
        k = int(rng.integers(1, nx + 1))
        base = rng.dirichlet(np.ones(ny), size=k) + 0.02
        base /= base.sum(axis=1, keepdims=True)
        ok = all(kl_array(base[a], base[b]) >= min_kl for a in range(k) for b in range(k) if a != b)
        if ok:
            break
    else:
        raise RuntimeError("could not draw a separated instance")
    lab = _assign(rng, nx, k)
    px = _normalize(rng.dirichlet(np.ones(nx)) + 0.05)
    return Joint.from_array(px[:, None] * base[lab]), lab


def suite_problem(i: int, seed: int = 0):
    """The i-th problem of the seeded recovery suite: cycles DI, CE, CUSTOM."""
    rng = np.random.default_rng([seed, i])
    kind = ("di", "ce", "custom")[i % 3]
    if kind == "ce":
        shape = [(2, 2), (2, 3), (3, 2), (2, 4), (4, 2)][int(rng.integers(5))]
        return kind, random_ce_problem(rng, shape)
    n = int(rng.integers(4, 9))
    prob, _ = (random_di_problem if kind == "di" else random_custom_problem)(rng, n)
    return kind, prob


__all__ = [
    "random_di_problem",
    "random_custom_problem",
    "random_ce_problem",
    "random_ib_joint",
    "suite_problem",
]
