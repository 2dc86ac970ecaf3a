"""Blahut-Arimoto solver for the divergence-preserving bottleneck.

The problem is solved on the support ``S`` of ``p``; rows outside ``S`` are
sent to a reserved dummy symbol (the last bottleneck index) afterwards.
Encoders are handled internally as dense ``(|S|, k)`` arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleLambda, NoFreeSymbol, NonInteriorInput
from .families import HierarchicalModel, project_to_family
from .partitions import partition_from_pairs
from .prob import Channel, Distribution, Mass, kl_array

RESIDUAL_THRESHOLD = 1e-8
_TINY = np.finfo(float).tiny
EFF_CARD_THRESHOLD = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 100_000
    conv_tol: float = 1e-10
    interior_floor: float = 1e-6
    seed: int = 0
    jitter: float = 1e-3
    record_history: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")
        if not 0 < self.interior_floor < 1:
            raise ValueError("interior_floor must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class DibProblem:
    p: Distribution
    ptilde: Distribution
    t_size: Optional[int] = None

    def __post_init__(self):
        if len(self.p) != len(self.ptilde):
            raise ValueError("p and ptilde live on different alphabets")
        if np.any((self.p.p > 0) & (self.ptilde.p <= 0)):
            from .errors import SupportViolation

            raise SupportViolation("supp(p) is not contained in supp(ptilde)")
        n_s = int(np.count_nonzero(self.p.p))
        if self.t_size is None:
            object.__setattr__(self, "t_size", n_s + 1)
        need = 1 + (n_s < len(self.p))
        if self.t_size < need:
            raise ValueError(f"t_size must be at least {need}")

    @classmethod
    def from_model(cls, p: Distribution, model: HierarchicalModel, t_size=None) -> "DibProblem":
        return cls(p, project_to_family(model, p), t_size)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.p.p > 0)

    @property
    def full_support(self) -> bool:
        return self.support.size == len(self.p)

    @property
    def ps(self) -> np.ndarray:
        return self.p.p[self.support]

    @property
    def pts(self) -> np.ndarray:
        # raw values, not renormalized on S
        return self.ptilde.p[self.support]

    @property
    def n_active(self) -> int:
        """Bottleneck symbols available to BA (the dummy is held back)."""
        return self.t_size if self.full_support else self.t_size - 1

    @property
    def lambda_max(self) -> float:
        return kl_array(self.p.p, self.ptilde.p)

    @property
    def t_labels(self) -> tuple[str, ...]:
        return tuple(f"t{i}" for i in range(self.t_size))


@dataclass(frozen=True, eq=False)
class SolverResult:
    encoder: Channel
    I: float
    D: float
    lagrangian: float
    eff_card: int
    iters: int
    converged: bool
    beta: float = float("nan")
    history: Optional[dict] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "I": self.I,
            "D": self.D,
            "lagrangian": self.lagrangian,
            "eff_card": self.eff_card,
            "iters": self.iters,
            "converged": self.converged,
            "units": "nats",
            "encoder": self.encoder.to_dict(),
        }


@dataclass
class TracePoint:
    beta: float
    result: SolverResult
    residuals: dict


@dataclass
class AnnealingTrace:
    points: list = field(default_factory=list)
    group_names: tuple = ()

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def append(self, pt: TracePoint):
        if self.points and not pt.beta < self.points[-1].beta:
            raise ValueError("betas must be strictly decreasing")
        self.points.append(pt)

    @property
    def betas(self) -> np.ndarray:
        return np.array([pt.beta for pt in self.points])

    def column(self, name: str) -> np.ndarray:
        if name in ("I", "D", "lagrangian", "eff_card", "converged", "iters"):
            return np.array([getattr(pt.result, name) for pt in self.points])
        return np.array([pt.residuals[name] for pt in self.points])


# ---------------------------------------------------------------------------
# array kernels on the support


def _exponent(q, ps, pts, r=None):
    """Matrix of x - log x - 1 for x = m(t) ptilde(a) / p(a), via u - log1p(u)."""
    if r is None:
        r = ps @ q
    qt = pts @ q
    m = np.ones_like(r)
    alive = r > 0
    m[alive] = r[alive] / qt[alive]  # dead symbols keep m = 1
    u = np.multiply.outer(pts / ps, m) - 1.0
    return u - np.log1p(u)


def _update(q, ps, pts, beta):
    r = ps @ q
    e = _exponent(q, ps, pts, r)
    with np.errstate(divide="ignore"):
        w = np.log(r)[None, :] - beta * e
    w -= w.max(axis=1, keepdims=True)
    np.exp(w, out=w)
    w /= w.sum(axis=1, keepdims=True)
    # flush subnormals so that later weighted averages cannot underflow to 0
    w[w < _TINY] = 0.0
    return w


def _info_terms(q, ps, pts):
    """(I, D) of a restricted encoder, with correctly rounded sums."""
    joint = ps[:, None] * q
    r = joint.sum(axis=0)
    qt = pts @ q
    mask = joint > 0
    rr = np.broadcast_to(r, q.shape)
    I = math.fsum((joint[mask] * np.log(q[mask] / rr[mask])).tolist())
    live = r > 0
    D = math.fsum((r[live] * np.log(r[live] / qt[live])).tolist())
    return max(I, 0.0), D


def _lagrangian_arr(q, ps, pts, beta):
    I, D = _info_terms(q, ps, pts)
    return I - beta * D


def _free_energy(q, ps, pts, beta):
    """F(q, r, m) with r = q(T) and m = q(T)/q~(T), expanded term by term."""
    joint = ps[:, None] * q
    r = joint.sum(axis=0)
    e = _exponent(q, ps, pts, r)
    mask = joint > 0
    rr = np.broadcast_to(r, q.shape)
    t1 = (joint[mask] * np.log(q[mask] / rr[mask])).tolist()
    t2 = (beta * joint[mask] * e[mask]).tolist()
    return math.fsum(t1 + t2)


def _mix_uniform(q, weight):
    k = q.shape[1]
    out = (1.0 - weight) * q + weight / k
    return out / out.sum(axis=1, keepdims=True)


def _initial_encoder(prob: DibProblem, cfg: SolverConfig) -> np.ndarray:
    n_s, k = prob.support.size, prob.n_active
    q = np.zeros((n_s, k))
    q[np.arange(n_s), np.arange(n_s) % k] = 1.0
    q = _mix_uniform(q, min(cfg.interior_floor * prob.t_size, 0.5))
    rng = np.random.default_rng(cfg.seed)
    q *= 1.0 + cfg.jitter * rng.uniform(-1.0, 1.0, size=q.shape)
    return q / q.sum(axis=1, keepdims=True)


def _extend(prob: DibProblem, q: np.ndarray) -> np.ndarray:
    full = np.zeros((len(prob.p), prob.t_size))
    full[prob.support, : q.shape[1]] = q
    if not prob.full_support:
        out = np.setdiff1d(np.arange(len(prob.p)), prob.support)
        full[out, prob.t_size - 1] = 1.0
    return full


def _restrict_init(prob: DibProblem, init) -> np.ndarray:
    q = init.rows if isinstance(init, Channel) else np.asarray(init, dtype=float)
    if q.shape[0] == len(prob.p):
        q = q[prob.support]
    if q.shape[1] == prob.t_size and prob.n_active < prob.t_size:
        q = q[:, : prob.n_active]
    if q.shape != (prob.support.size, prob.n_active):
        raise ValueError(f"init has shape {q.shape}, expected {(prob.support.size, prob.n_active)}")
    return q / q.sum(axis=1, keepdims=True)


def _restricted_view(q: Channel, p: Distribution, ptilde: Mass):
    supp = np.flatnonzero(p.p > 0)
    rows = q.rows
    if rows.shape[0] == len(p):
        rows = rows[supp]
    elif rows.shape[0] != supp.size:
        raise ValueError("encoder inputs match neither A nor supp(p)")
    return rows, p.p[supp], np.asarray(ptilde.p, dtype=float)[supp], supp


# ---------------------------------------------------------------------------
# public operations


def lagrangian(q: Channel, p: Distribution, ptilde: Mass, beta: float) -> float:
    """I_q(A;T) - beta D(q(T) || q~(T)), evaluated on supp(p)."""
    rows, ps, pts, _ = _restricted_view(q, p, ptilde)
    return _lagrangian_arr(rows, ps, pts, beta)


def ba_step(q: Channel, p: Distribution, ptilde: Mass, beta: float) -> Channel:
    """One fixed-point update; ``q`` must be strictly positive on supp(p)."""
    rows, ps, pts, supp = _restricted_view(q, p, ptilde)
    if np.any(rows <= 0):
        raise NonInteriorInput("encoder has zero entries on supp(p)")
    new = _update(rows, ps, pts, beta)
    if q.rows.shape[0] == len(p) and supp.size < len(p):
        full = q.rows.copy()
        full[supp] = new
        new = full
    return Channel(q.input_labels, q.output_labels, new)


def support_restrict_extend(q_on_S: Channel, p: Distribution) -> Channel:
    """Extend an encoder on supp(p) to all of A via a zero-mass dummy symbol."""
    supp = np.flatnonzero(p.p > 0)
    if supp.size == len(p):
        return Channel(p.labels, q_on_S.output_labels, q_on_S.rows)
    if q_on_S.rows.shape[0] != supp.size:
        raise ValueError("encoder rows do not match supp(p)")
    mass = p.p[supp] @ q_on_S.rows
    free = np.flatnonzero(mass == 0)
    if free.size == 0:
        raise NoFreeSymbol("every bottleneck symbol carries mass")
    t0 = int(free[-1])
    full = np.zeros((len(p), q_on_S.shape[1]))
    full[supp] = q_on_S.rows
    full[np.setdiff1d(np.arange(len(p)), supp), t0] = 1.0
    return Channel(p.labels, q_on_S.output_labels, full)


def effective_cardinality(res, p: Distribution, threshold: float = EFF_CARD_THRESHOLD, ptilde=None) -> int:
    """Number of distinct posteriors q(A|t) over supp(q(T)), plus the dummy if used.

    ``res`` may be a :class:`SolverResult` or an encoder :class:`Channel` on A.
    The extra symbol is counted when some ``a`` in supp(ptilde) minus supp(p)
    is routed outside supp(q(T)); with ``ptilde=None`` every off-support
    symbol is considered.
    """
    q = res.encoder.rows if isinstance(res, SolverResult) else res.rows
    joint = p.p[:, None] * q
    r = joint.sum(axis=0)
    live = np.flatnonzero(r > 0)
    post = joint[:, live] / r[live]
    diff = np.max(np.abs(post[:, :, None] - post[:, None, :]), axis=0)
    count = len(partition_from_pairs([str(t) for t in live], diff <= threshold))
    offs = p.p <= 0
    if ptilde is not None:
        offs &= np.asarray(ptilde.p) > 0
    if np.any(offs):
        dead = np.ones(q.shape[1], dtype=bool)
        dead[live] = False
        if np.any(q[np.ix_(offs, dead)] > 0):
            count += 1
    return count


def _package(prob: DibProblem, q, beta, iters, converged, history=None) -> SolverResult:
    I, D = _info_terms(q, prob.ps, prob.pts)
    enc = Channel(prob.p.labels, prob.t_labels, _extend(prob, q))
    k = effective_cardinality(enc, prob.p, ptilde=prob.ptilde)
    return SolverResult(enc, I, D, I - beta * D, k, iters, converged, float(beta), history)


def _iterate(prob: DibProblem, beta: float, q: np.ndarray, cfg: SolverConfig):
    ps, pts = prob.ps, prob.pts
    hist = None
    if cfg.record_history:
        hist = {"lagrangian": [], "free_energy": [], "min_exponent": []}

    def log(q_):
        hist["lagrangian"].append(_lagrangian_arr(q_, ps, pts, beta))
        hist["free_energy"].append(_free_energy(q_, ps, pts, beta))
        hist["min_exponent"].append(float(_exponent(q_, ps, pts).min()))

    if hist is not None:
        log(q)
    converged = False
    it = 0
    while it < cfg.max_iters:
        new = _update(q, ps, pts, beta)
        it += 1
        delta = np.max(np.abs(new - q))
        q = new
        if hist is not None:
            log(q)
        if delta < cfg.conv_tol:
            converged = True
            break
    if hist is not None:
        hist = {k_: np.array(v) for k_, v in hist.items()}
    return q, it, converged, hist


def solve_fixed_beta(prob: DibProblem, beta: float, init=None, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    """Iterate the BA update at one beta until the encoder stops moving.

    Non-convergence is reported through ``converged=False`` rather than raised.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if init is None:
        q = _initial_encoder(prob, cfg)
    else:
        q = _restrict_init(prob, init)
        if np.any(q <= 0):
            raise NonInteriorInput("initial encoder has zero entries on supp(p)")
    q, it, ok, hist = _iterate(prob, beta, q, cfg)
    return _package(prob, q, beta, it, ok, hist)


def _smooth(prob: DibProblem, res: SolverResult, cfg: SolverConfig) -> np.ndarray:
    q = _restrict_init(prob, res.encoder)
    return _mix_uniform(q, min(cfg.interior_floor * prob.t_size, 0.5))


def anneal_reverse(
    prob: DibProblem,
    betas: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
    groups=None,
    callback=None,
) -> AnnealingTrace:
    """Solve along a decreasing beta schedule, warm-starting each point.

    ``groups`` maps names to :class:`~divib.symmetry.Group` objects acting on A;
    the p-weighted divergence from the group-symmetric channels is recorded.
    """
    from .symmetry import divergence_from_symmetric

    betas = [float(b) for b in betas]
    if any(b2 >= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("betas must be strictly decreasing")
    groups = dict(groups or {})
    trace = AnnealingTrace(group_names=tuple(groups))
    q = None
    for beta in betas:
        init = None if q is None else _smooth(prob, q, cfg)
        q = solve_fixed_beta(prob, beta, init, cfg)
        res = {name: divergence_from_symmetric(q.encoder, prob.p, g) for name, g in groups.items()}
        trace.append(TracePoint(beta, q, res))
        if callback is not None:
            callback(trace.points[-1])
    return trace


def geometric_betas(beta_max: float = 1e3, beta_min: float = 1e-2, count: int = 1000) -> np.ndarray:
    if count == 1:
        return np.array([float(beta_max)])
    return np.geomspace(beta_max, beta_min, count)


def target_lambda(prob: DibProblem, lam: float, cfg: SolverConfig = SolverConfig(), beta_start: float = 1e3) -> SolverResult:
    """Find a solution whose divergence matches ``lam`` by bisection on log beta."""
    big = prob.lambda_max
    if lam > big * (1 + 1e-9) + 0.0:
        raise InfeasibleLambda(f"lambda={lam!r} exceeds the maximum {big!r}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    tol = 1e-4 * max(big, 1.0)
    if lam <= 0:
        return solve_fixed_beta(prob, 0.0, None, cfg)

    def close(res):
        return abs(res.D - lam) <= tol

    # upper end: raise beta until the constraint holds
    hi_beta = beta_start
    hi = solve_fixed_beta(prob, hi_beta, None, cfg)
    while hi.D < lam - tol and hi_beta < 1e9:
        hi_beta *= 10
        hi = solve_fixed_beta(prob, hi_beta, None, cfg)
    if close(hi) or hi.D < lam:
        return hi
    # walk down until the divergence falls below target
    lo, lo_beta = None, None
    beta = hi_beta
    while beta > 1e-8:
        beta /= 4
        res = solve_fixed_beta(prob, beta, _smooth(prob, hi, cfg), cfg)
        if close(res):
            return res
        if res.D < lam:
            lo, lo_beta = res, beta
            break
        hi, hi_beta = res, beta
    if lo is None:
        return hi
    for _ in range(100):
        mid_beta = math.sqrt(lo_beta * hi_beta)
        if hi_beta / lo_beta < 1 + 1e-12:
            break
        res = solve_fixed_beta(prob, mid_beta, _smooth(prob, hi, cfg), cfg)
        if close(res):
            return res
        if res.D < lam:
            lo, lo_beta = res, mid_beta
        else:
            hi, hi_beta = res, mid_beta
    return hi


# ---------------------------------------------------------------------------
# bifurcations


@dataclass
class BifurcationReport:
    changes: list
    thresholds: dict

    def __iter__(self):
        return iter(self.changes)

    def __len__(self):
        return len(self.changes)


def detect_bifurcations(trace: AnnealingTrace, residual_threshold: float = RESIDUAL_THRESHOLD) -> BifurcationReport:
    """Effective-cardinality changes along the sweep, and per-group residual thresholds.

    The threshold of a group is the first beta, scanning from the largest
    downwards, at which its residual is below ``residual_threshold``.
    """
    pts = trace.points
    changes = []
    for prev, cur in zip(pts, pts[1:]):
        if cur.result.eff_card != prev.result.eff_card:
            changes.append((cur.beta, prev.result.eff_card, cur.result.eff_card))
    thresholds = {}
    for name in trace.group_names:
        thresholds[name] = None
        for pt in pts:
            if pt.residuals[name] < residual_threshold:
                thresholds[name] = pt.beta
                break
    return BifurcationReport(changes, thresholds)
