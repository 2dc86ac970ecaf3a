"""Permutations, finite groups and the symmetry diagnostics built on them."""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import BudgetExceeded, OrbitMassZero, SizeExceeded, SupportNotInvariant, SupportViolation
from .partitions import Partition, partition_from_pairs
from .prob import Channel, Distribution

MEMBERSHIP_TOL = 1e-12
DISCOVERY_TOL = 1e-9
DISCOVERY_BUDGET = 10**7


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        im = tuple(int(i) for i in self.images)
        if sorted(im) != list(range(len(im))):
            raise ValueError(f"{im} is not a bijection")
        object.__setattr__(self, "images", im)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "Permutation":
        im = list(range(n))
        im[i], im[j] = j, i
        return cls(tuple(im))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``: apply ``other`` first."""
        return Permutation(tuple(self.images[i] for i in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.images == tuple(range(self.n))

    def flat(self) -> "Permutation":
        return self

    def as_array(self) -> np.ndarray:
        return np.array(self.images, dtype=int)

    def to_dict(self) -> dict:
        return {"images": list(self.images)}


@dataclass(frozen=True)
class ProductPermutation:
    """The pair (sigma, tau), acting on the x-major flattening of X x Y as sigma (x) tau."""

    sigma: Permutation
    tau: Permutation

    @classmethod
    def identity(cls, nx: int, ny: int) -> "ProductPermutation":
        return cls(Permutation.identity(nx), Permutation.identity(ny))

    @property
    def n(self) -> int:
        return self.sigma.n * self.tau.n

    @property
    def shape(self) -> tuple[int, int]:
        return self.sigma.n, self.tau.n

    def compose(self, other: "ProductPermutation") -> "ProductPermutation":
        return ProductPermutation(self.sigma.compose(other.sigma), self.tau.compose(other.tau))

    def inverse(self) -> "ProductPermutation":
        return ProductPermutation(self.sigma.inverse(), self.tau.inverse())

    def is_identity(self) -> bool:
        return self.sigma.is_identity() and self.tau.is_identity()

    def flat(self) -> Permutation:
        ny = self.tau.n
        s = np.array(self.sigma.images)
        t = np.array(self.tau.images)
        return Permutation(tuple((s[:, None] * ny + t[None, :]).ravel().tolist()))

    def as_array(self) -> np.ndarray:
        return self.flat().as_array()

    def to_dict(self) -> dict:
        return {"sigma": self.sigma.to_dict(), "tau": self.tau.to_dict()}


Perm = Union[Permutation, ProductPermutation]


def perm_from_dict(d: dict) -> Perm:
    if "images" in d:
        return Permutation(tuple(d["images"]))
    return ProductPermutation(perm_from_dict(d["sigma"]), perm_from_dict(d["tau"]))


def _identity_like(g: Perm) -> Perm:
    if isinstance(g, ProductPermutation):
        return ProductPermutation.identity(*g.shape)
    return Permutation.identity(g.n)


class Group:
    """Finite permutation group given by generators; elements are enumerated on demand."""

    def __init__(self, generators: Sequence[Perm], elements: Optional[Sequence[Perm]] = None, identity: Optional[Perm] = None):
        gens = list(dict.fromkeys(generators))
        if identity is None:
            if not gens:
                raise ValueError("an empty group needs an explicit identity")
            identity = _identity_like(gens[0])
        kinds = {type(g) for g in gens} | {type(identity)}
        if len(kinds) > 1:
            raise ValueError("generators mix plain and product permutations")
        if any(g.n != identity.n for g in gens):
            raise ValueError("generators act on different alphabets")
        self.generators = tuple(gens)
        self.identity = identity
        self._elements = None if elements is None else tuple(dict.fromkeys(elements))

    @property
    def degree(self) -> int:
        """Size of the (flattened) alphabet acted on."""
        return self.identity.n

    @property
    def elements(self) -> tuple:
        if self._elements is None:
            self._elements = _closure(self.generators, self.identity, 10**6)
        return self._elements

    def order(self) -> int:
        return len(self.elements)

    def flat_generators(self) -> list[np.ndarray]:
        return [g.as_array() for g in self.generators]

    def to_dict(self) -> dict:
        return {"generators": [g.to_dict() for g in self.generators]}

    @classmethod
    def from_dict(cls, d: dict, identity: Optional[Perm] = None) -> "Group":
        return cls([perm_from_dict(g) for g in d["generators"]], identity=identity)

    @classmethod
    def trivial(cls, n) -> "Group":
        ident = ProductPermutation.identity(*n) if isinstance(n, tuple) else Permutation.identity(n)
        return cls([], [ident], identity=ident)


def _closure(generators, identity, max_size):
    seen = {identity}
    order = [identity]
    queue = deque([identity])
    while queue:
        h = queue.popleft()
        for g in generators:
            for new in (g.compose(h), g.inverse().compose(h)):
                if new not in seen:
                    seen.add(new)
                    order.append(new)
                    if len(order) > max_size:
                        raise SizeExceeded(f"group order exceeds {max_size}")
                    queue.append(new)
    return tuple(order)


def group_closure(generators: Iterable[Perm], max_size: int = 10**6, identity: Optional[Perm] = None) -> Group:
    """Breadth-first closure of the generators under composition."""
    gens = list(generators)
    if identity is None:
        if not gens:
            raise ValueError("pass identity= for an empty generator list")
        identity = _identity_like(gens[0])
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    elements = _closure(list(dict.fromkeys(gens)), identity, max_size)
    return Group(gens, elements, identity)


def orbits_partition(g: Group, n: Optional[int] = None, labels=None) -> Partition:
    n = g.degree if n is None else n
    if n != g.degree:
        raise ValueError(f"group acts on {g.degree} symbols, not {n}")
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
    rel = np.eye(n, dtype=bool)
    idx = np.arange(n)
    for gen in g.flat_generators():
        rel[idx, gen] = True
    return partition_from_pairs(labels, rel | rel.T)


# ---------------------------------------------------------------------------
# membership


def is_channel_invariance(pYgX: Channel, sigma: Permutation, tol: float = MEMBERSHIP_TOL) -> bool:
    rows = pYgX.rows
    return bool(np.max(np.abs(rows[sigma.as_array()] - rows)) <= tol)


def is_channel_equivariance(pYgX: Channel, st: ProductPermutation, tol: float = MEMBERSHIP_TOL) -> bool:
    """p(tau y | sigma x) = p(y | x) for every pair."""
    rows = pYgX.rows
    if st.shape != rows.shape:
        raise ValueError("permutation sizes do not match the channel")
    moved = rows[np.ix_(st.sigma.as_array(), st.tau.as_array())]
    return bool(np.max(np.abs(moved - rows)) <= tol)


def is_distribution_invariance(p: Distribution, phi: Perm, tol: float = MEMBERSHIP_TOL) -> bool:
    return bool(np.max(np.abs(p.p[phi.as_array()] - p.p)) <= tol)


def distribution_invariance_group(p: Distribution, tol: float = DISCOVERY_TOL) -> Group:
    """Invariance group of p, generated by transpositions inside its level sets."""
    n = len(p)
    levels = partition_from_pairs(
        p.labels, np.abs(p.p[:, None] - p.p[None, :]) <= tol * np.maximum(p.p[:, None], p.p[None, :])
    )
    gens = [Permutation.transposition(n, c[0], j) for c in levels.cells for j in c[1:]]
    return Group(gens, identity=Permutation.identity(n))


def invariance_group_from_rows(pYgX: Channel, tol: float = DISCOVERY_TOL) -> Group:
    """Channel-invariance group, generated by transpositions of equal rows."""
    from .partitions import partition_from_channel_rows

    n = pYgX.shape[0]
    cls = partition_from_channel_rows(pYgX, tol)
    gens = [Permutation.transposition(n, c[0], j) for c in cls.cells for j in c[1:]]
    return Group(gens, identity=Permutation.identity(n))


# ---------------------------------------------------------------------------
# group averaging


def _check_support(p: Distribution, g: Group) -> np.ndarray:
    if g.degree != len(p):
        raise ValueError("group and distribution live on different alphabets")
    supp = p.p > 0
    for gen in g.flat_generators():
        if np.any(supp[gen] != supp):
            raise SupportNotInvariant("group does not leave supp(p) invariant")
    return supp


def group_average_channel(kappa: Channel, p: Distribution, g: Group) -> Channel:
    """Orbit-wise p-weighted average of the rows of kappa.

    Rows outside supp(p) are carried over unchanged.
    """
    supp = _check_support(p, g)
    orbits = orbits_partition(g, len(p))
    out = np.array(kappa.rows, copy=True)
    for cell in orbits.cells:
        idx = np.array(cell)
        if not supp[idx[0]]:
            continue
        w = p.p[idx]
        mass = math.fsum(w)
        if mass <= 0:
            raise OrbitMassZero(f"orbit {cell} has zero mass")
        avg = (w / mass) @ kappa.rows[idx]
        out[idx] = avg / avg.sum()
    return Channel(kappa.input_labels, kappa.output_labels, out)


def channel_divergence(kappa: Channel, nu: Channel, p: Distribution) -> float:
    """D^p(kappa || nu) = sum over supp(p) of p(a) D(kappa(.|a) || nu(.|a))."""
    supp = p.p > 0
    k = kappa.rows[supp]
    v = nu.rows[supp]
    mask = k > 0
    if np.any(v[mask] <= 0):
        raise SupportViolation("a row of kappa escapes the support of the reference row")
    terms = np.zeros_like(k)
    terms[mask] = k[mask] * np.log(k[mask] / v[mask])
    return max(float(p.p[supp] @ terms.sum(axis=1)), 0.0)


def divergence_from_symmetric(kappa: Channel, p: Distribution, g: Group) -> float:
    return channel_divergence(kappa, group_average_channel(kappa, p, g), p)


def soft_symmetry_residual(kappa: Channel, transform: Channel, p: Distribution) -> float:
    """D^p(kappa o transform || kappa)."""
    moved = Channel(kappa.input_labels, kappa.output_labels, transform.rows @ kappa.rows)
    return channel_divergence(moved, kappa, p)


def permutation_channel(perm: Perm, labels=None) -> Channel:
    """Deterministic channel a -> perm(a), so that ``kappa o P`` reads rows at perm(a)."""
    im = perm.as_array()
    labels = labels or tuple(str(i) for i in range(im.size))
    return Channel.deterministic(labels, labels, im)


# ---------------------------------------------------------------------------
# discovery


def _bijections(cands: list[list[int]]):
    n = len(cands)
    used = [False] * n
    cur = [0] * n

    def rec(i):
        if i == n:
            yield tuple(cur)
            return
        for c in cands[i]:
            if not used[c]:
                used[c] = True
                cur[i] = c
                yield from rec(i + 1)
                used[c] = False

    yield from rec(0)


def discover_equivariances(pYgX: Channel, pX: Optional[Distribution] = None, budget: int = DISCOVERY_BUDGET, tol: float = DISCOVERY_TOL) -> Group:
    """All pairs (sigma, tau) with p(tau y | sigma x) = p(y | x), by pruned search.

    ``pX`` is accepted for interface symmetry; equivariances depend on the channel only.
    """
    rows = pYgX.rows
    nx, ny = rows.shape
    if pX is not None and len(pX) != nx:
        raise ValueError("pX does not match the channel inputs")
    if math.factorial(nx) * math.factorial(ny) > budget:
        raise BudgetExceeded(f"{nx}! * {ny}! exceeds the budget {budget}")
    srt = np.sort(rows, axis=1)
    same_multiset = np.max(np.abs(srt[:, None, :] - srt[None, :, :]), axis=2) <= tol
    found = []
    for sigma in itertools.permutations(range(nx)):
        if not all(same_multiset[x, sigma[x]] for x in range(nx)):
            continue
        moved = rows[list(sigma)]
        # tau(y) must be y' with rows[sigma x, y'] = rows[x, y] for every x
        close = np.all(np.abs(moved[:, None, :] - rows[:, :, None]) <= tol, axis=0)
        cands = [list(np.flatnonzero(close[y])) for y in range(ny)]
        if any(not c for c in cands):
            continue
        for tau in _bijections(cands):
            found.append(ProductPermutation(Permutation(sigma), Permutation(tau)))
    ident = ProductPermutation.identity(nx, ny)
    gens = [g for g in found if not g.is_identity()]
    return Group(gens, found, identity=ident)
