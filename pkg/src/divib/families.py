"""Hierarchical models with closed-form projections."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CustomSupportViolation, IncompatibleAlphabet
from .prob import Channel, Distribution, Joint, Mass, kl_divergence, pushforward


class Kind(enum.Enum):
    CE = "ce"
    DI = "di"
    IIB = "iib"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class HierarchicalModel:
    """A model family; CE and IIB need the product shape ``(|X|, |Y|)``."""

    kind: Kind
    shape: Optional[tuple[int, int]] = None
    ptilde: Optional[Distribution] = None

    def __post_init__(self):
        if self.kind in (Kind.CE, Kind.IIB) and self.shape is None:
            raise IncompatibleAlphabet(f"{self.kind.value} needs a product alphabet")
        if self.kind is Kind.CUSTOM and self.ptilde is None:
            raise ValueError("custom model needs ptilde")

    @classmethod
    def ce(cls, shape) -> "HierarchicalModel":
        return cls(Kind.CE, tuple(shape))

    @classmethod
    def iib(cls, shape) -> "HierarchicalModel":
        return cls(Kind.IIB, tuple(shape))

    @classmethod
    def di(cls) -> "HierarchicalModel":
        return cls(Kind.DI)

    @classmethod
    def custom(cls, ptilde: Distribution) -> "HierarchicalModel":
        return cls(Kind.CUSTOM, ptilde=ptilde)


def _as_joint(p: Distribution, shape) -> np.ndarray:
    if p.p.size != shape[0] * shape[1]:
        raise IncompatibleAlphabet(f"|A|={p.p.size} is not {shape[0]}x{shape[1]}")
    return p.p.reshape(shape)


def project_to_family(model: HierarchicalModel, p: Distribution) -> Distribution:
    n = len(p)
    if model.kind is Kind.DI:
        return Distribution(p.labels, np.full(n, 1.0 / n))
    if model.kind is Kind.CUSTOM:
        pt = model.ptilde
        if len(pt) != n:
            raise IncompatibleAlphabet("custom ptilde has a different alphabet size")
        if np.any((p.p > 0) & (pt.p <= 0)):
            raise CustomSupportViolation("ptilde vanishes somewhere on supp(p)")
        return Distribution(p.labels, pt.p)
    j = Joint.from_array(_as_joint(p, model.shape))
    px = j.marginal_x().p
    if model.kind is Kind.CE:
        out = np.outer(px, np.full(model.shape[1], 1.0 / model.shape[1]))
    else:
        out = np.outer(px, j.marginal_y().p)
    return Distribution(p.labels, out.ravel())


def divergence_from_family(p: Distribution, model: HierarchicalModel) -> float:
    return kl_divergence(p, project_to_family(model, p))


def latent_divergence(kappa: Channel, p: Distribution, ptilde: Mass) -> float:
    """D(kappa.p || kappa.ptilde)."""
    return kl_divergence(pushforward(kappa, p), pushforward(kappa, ptilde))


def parse_family(selector: str, shape=None, load_custom=None) -> HierarchicalModel:
    """Parse a CLI selector: ``ce``, ``di``, ``iib`` or ``custom:<path>``."""
    s = selector.strip()
    if s == "di":
        return HierarchicalModel.di()
    if s in ("ce", "iib"):
        if shape is None:
            raise IncompatibleAlphabet(f"family {s} requires a joint input")
        return HierarchicalModel.ce(shape) if s == "ce" else HierarchicalModel.iib(shape)
    if s.startswith("custom:"):
        if load_custom is None:
            raise ValueError("no loader for custom family")
        return HierarchicalModel.custom(load_custom(s[len("custom:"):]))
    raise ValueError(f"unknown family {selector!r}")


def sample_family_member(model: HierarchicalModel, rng: np.random.Generator, n: int | None = None) -> Distribution:
    """Random full-support member of the family (Dirichlet(1) marginals)."""
    if model.kind is Kind.DI:
        return Distribution.uniform([str(i) for i in range(n)])
    if model.kind is Kind.CUSTOM:
        return model.ptilde
    nx, ny = model.shape
    rx = rng.dirichlet(np.ones(nx))
    ry = np.full(ny, 1.0 / ny) if model.kind is Kind.CE else rng.dirichlet(np.ones(ny))
    r = np.outer(rx, ry).ravel()
    return Distribution.from_array(r / r.sum())
