"""Classic information bottleneck: min I(X;T) - beta I(T;Y) over q(T|X)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ZeroMarginal
from .prob import Channel, Joint, channel_mi_array
from .solver import SolverConfig


@dataclass(frozen=True, eq=False)
class IBResult:
    encoder: Channel
    I_XT: float
    I_YT: float
    lagrangian: float
    iters: int
    converged: bool
    beta: float

    @property
    def I(self):
        return self.I_XT

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "I_XT": self.I_XT,
            "I_YT": self.I_YT,
            "lagrangian": self.lagrangian,
            "iters": self.iters,
            "converged": self.converged,
            "units": "nats",
            "encoder": self.encoder.to_dict(),
        }


def _conditional(j: Joint):
    px = np.array([math.fsum(r) for r in j.p])
    if np.any(px <= 0):
        i = int(np.flatnonzero(px <= 0)[0])
        raise ZeroMarginal(i, j.x_labels[i])
    return px, j.p / px[:, None]


def _row_kl(pyx, qyt):
    """Matrix of D(p(Y|x) || q(Y|t)); inf where supports clash."""
    mask = pyx > 0
    logp = np.where(mask, np.log(np.where(mask, pyx, 1.0)), 0.0)
    with np.errstate(divide="ignore"):
        logq = np.log(qyt)
    # sum_y p(y|x) (log p - log q), with 0 * (-inf) masked out
    cross = np.where(mask[:, None, :], pyx[:, None, :] * logq[None, :, :], 0.0).sum(axis=2)
    neg_h = (pyx * logp).sum(axis=1)
    return neg_h[:, None] - cross


def _update(q, px, pyx, beta):
    qt = px @ q
    live = qt > 0
    qyt = np.zeros((q.shape[1], pyx.shape[1]))
    qyt[live] = (q[:, live] * px[:, None]).T @ pyx / qt[live, None]
    kl = np.full((q.shape[0], q.shape[1]), np.inf)
    kl[:, live] = _row_kl(pyx, qyt[live])
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.log(qt)[None, :] - beta * kl
    w[:, ~live] = -np.inf
    w -= w.max(axis=1, keepdims=True)
    np.exp(w, out=w)
    return w / w.sum(axis=1, keepdims=True)


def _infos(q, px, pyx):
    i_xt = channel_mi_array(q, px)
    joint_ty = (q * px[:, None]).T @ pyx
    qt = joint_ty.sum(axis=1)
    py = joint_ty.sum(axis=0)
    mask = joint_ty > 0
    ref = np.outer(qt, py)
    i_yt = float(np.sum(joint_ty[mask] * np.log(joint_ty[mask] / ref[mask])))
    return max(i_xt, 0.0), max(i_yt, 0.0)


def initial_ib_encoder(n_x: int, t_size: int, cfg: SolverConfig) -> np.ndarray:
    q = np.zeros((n_x, t_size))
    q[np.arange(n_x), np.arange(n_x) % t_size] = 1.0
    w = min(cfg.interior_floor * t_size, 0.5)
    q = (1 - w) * q + w / t_size
    rng = np.random.default_rng(cfg.seed)
    q *= 1.0 + cfg.jitter * rng.uniform(-1.0, 1.0, size=q.shape)
    return q / q.sum(axis=1, keepdims=True)


def solve_classic_ib(j: Joint, beta: float, cfg: SolverConfig = SolverConfig(), init=None, t_size=None) -> IBResult:
    """Self-consistent iteration q(t|x) ~ q(t) exp(-beta D(p(Y|x) || q(Y|t)))."""
    px, pyx = _conditional(j)
    n_x = px.size
    t_size = t_size or n_x
    if init is None:
        q = initial_ib_encoder(n_x, t_size, cfg)
    else:
        q = init.rows if isinstance(init, Channel) else np.asarray(init, dtype=float)
        w = min(cfg.interior_floor * q.shape[1], 0.5)
        q = (1 - w) * q + w / q.shape[1]
        q = q / q.sum(axis=1, keepdims=True)
    converged = False
    it = 0
    while it < cfg.max_iters:
        new = _update(q, px, pyx, beta)
        it += 1
        delta = np.max(np.abs(new - q))
        q = new
        if delta < cfg.conv_tol:
            converged = True
            break
    i_xt, i_yt = _infos(q, px, pyx)
    enc = Channel(j.x_labels, tuple(f"t{i}" for i in range(q.shape[1])), q)
    return IBResult(enc, i_xt, i_yt, i_xt - beta * i_yt, it, converged, float(beta))


@dataclass
class IBTrace:
    results: list = field(default_factory=list)
    residuals: list = field(default_factory=list)


def anneal_classic_ib(j: Joint, betas: Sequence[float], cfg: SolverConfig = SolverConfig(), groups=None) -> IBTrace:
    """Reverse annealing for the classic problem, tracking group residuals on X."""
    from .symmetry import divergence_from_symmetric

    groups = dict(groups or {})
    px = j.marginal_x()
    out = IBTrace()
    prev = None
    for beta in betas:
        prev = solve_classic_ib(j, beta, cfg, init=None if prev is None else prev.encoder)
        out.results.append(prev)
        out.residuals.append({k: divergence_from_symmetric(prev.encoder, px, g) for k, g in groups.items()})
    return out
