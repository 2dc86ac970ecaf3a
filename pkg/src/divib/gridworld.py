"""Synthetic grid world: positions on an n x n grid, a channel to 4 gradient directions.

Directions are ordered N, E, S, W. Positions are indexed ``row * n + col``.
The base channel is built from one template row per D4-orbit of positions and
is exactly D4-equivariant; two perturbations then keep only the rotation
subgroup C4, and finally break everything.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidProfile, SupportNotInvariant
from .families import HierarchicalModel
from .prob import Joint
from .solver import DibProblem, SolverConfig, anneal_reverse, detect_bifurcations, geometric_betas
from .symmetry import Group, Permutation, ProductPermutation, orbits_partition

DIRECTIONS = ("N", "E", "S", "W")
N_, E_, S_, W_ = range(4)

# one template per D4-orbit representative (row, col) of the 5x5 grid
DEFAULT_PROFILES = {
    (2, 2): (0.25, 0.25, 0.25, 0.25),  # center
    (1, 2): (0.125, 0.0, 0.875, 0.0),  # inner axis
    (0, 2): (0.0, 0.0, 1.0, 0.0),  # outer axis
    (1, 1): (0.0, 0.5, 0.5, 0.0),  # inner diagonal
    (0, 0): (0.0, 0.5, 0.5, 0.0),  # corner
    (0, 1): (0.0, 0.0, 1.0, 0.0),  # off-axis border
}


@dataclass(frozen=True)
class GridSpec:
    n: int = 5
    directions: int = 4
    ring_profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))

    @property
    def n_pos(self) -> int:
        return self.n * self.n

    def support_mask(self) -> np.ndarray:
        return generate_base_conditional(self) > 0


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    eps1: float = 0.1
    eps2: float = 0.01
    betas: Optional[tuple] = None
    output_dir: Optional[str] = None
    spec: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("perturbation amplitudes must be nonnegative")
        if self.eps2 > self.eps1:
            raise ValueError("eps2 must not exceed eps1")

    def schedule(self) -> np.ndarray:
        if self.betas is None:
            return default_experiment_betas()
        return np.asarray(self.betas, dtype=float)


def default_experiment_betas() -> np.ndarray:
    return geometric_betas(1e8, 1e-2, 1000)


# ---------------------------------------------------------------------------
# symmetry of the grid


def rotation(n: int) -> ProductPermutation:
    """Quarter turn (r, c) -> (c, n-1-r); directions turn N -> E -> S -> W."""
    pos = [0] * (n * n)
    for r in range(n):
        for c in range(n):
            pos[r * n + c] = c * n + (n - 1 - r)
    return ProductPermutation(Permutation(tuple(pos)), Permutation((E_, S_, W_, N_)))


def reflection(n: int) -> ProductPermutation:
    """Mirror (r, c) -> (r, n-1-c); E and W swap."""
    pos = [r * n + (n - 1 - c) for r in range(n) for c in range(n)]
    return ProductPermutation(Permutation(tuple(pos)), Permutation((N_, W_, S_, E_)))


def c4_group(n: int = 5) -> Group:
    return Group([rotation(n)], identity=ProductPermutation.identity(n * n, 4))


def d4_group(n: int = 5) -> Group:
    return Group([rotation(n), reflection(n)], identity=ProductPermutation.identity(n * n, 4))


def position_group(g: Group) -> Group:
    return Group([h.sigma for h in g.generators], identity=g.identity.sigma)


# ---------------------------------------------------------------------------
# construction


def generate_base_conditional(spec: GridSpec) -> np.ndarray:
    """p(Y | X) as an (n*n, 4) array, replicated from the templates over D4."""
    if spec.directions != 4:
        raise InvalidProfile("only 4 directions are supported")
    n = spec.n
    elems = d4_group(n).elements
    rows = np.full((n * n, 4), np.nan)
    for (r0, c0), tmpl in spec.ring_profiles.items():
        t = np.asarray(tmpl, dtype=float)
        if t.shape != (4,) or np.any(t < 0) or abs(math.fsum(t) - 1.0) > 1e-12:
            raise InvalidProfile(f"template at {(r0, c0)} is not a probability row")
        x0 = r0 * n + c0
        for g in elems:
            x = g.sigma.images[x0]
            moved = np.empty(4)
            moved[list(g.tau.images)] = t
            if np.isnan(rows[x, 0]):
                rows[x] = moved
            elif not np.array_equal(rows[x], moved):
                raise InvalidProfile(f"template at {(r0, c0)} is not invariant under its stabilizer")
    if np.any(np.isnan(rows)):
        missing = sorted({int(i) for i in np.flatnonzero(np.isnan(rows[:, 0]))})
        raise InvalidProfile(f"no template covers positions {missing}")
    return rows


def _labels(n: int):
    return tuple(f"{r},{c}" for r in range(n) for c in range(n)), DIRECTIONS


def generate_base_channel(spec: GridSpec = GridSpec(), px: Optional[np.ndarray] = None) -> Joint:
    """Joint p(X, Y) with uniform p(X) (unless given) and the D4-equivariant conditional."""
    rows = generate_base_conditional(spec)
    if px is None:
        px = np.full(spec.n_pos, 1.0 / spec.n_pos)
    xl, yl = _labels(spec.n)
    return Joint(xl, yl, np.asarray(px)[:, None] * rows)


def _split(j: Joint):
    px = np.array([math.fsum(r) for r in j.p])
    return px, j.p / px[:, None]


def _renormalize(px, rows, labels_from: Joint) -> Joint:
    # fsum keeps rows that are permutations of each other bitwise consistent
    sums = np.array([math.fsum(r) for r in rows])
    rows = rows / sums[:, None]
    return Joint(labels_from.x_labels, labels_from.y_labels, px[:, None] * rows)


def perturb_preserving(j: Joint, sub: Group, eps: float, seed=0) -> Joint:
    """Multiplicative noise shared across each orbit of ``sub`` on supp(p)."""
    if eps == 0:
        return j
    px, rows = _split(j)
    flat = rows.ravel()
    supp = flat > 0
    for gen in sub.flat_generators():
        if np.any(supp[gen] != supp):
            raise SupportNotInvariant("subgroup does not preserve the support")
    rng = np.random.default_rng(seed)
    orbits = orbits_partition(sub, flat.size)
    factor = np.ones(flat.size)
    for cell in orbits.cells:
        if supp[cell[0]]:
            factor[list(cell)] = 1.0 + eps * rng.uniform(-1.0, 1.0)
    return _renormalize(px, (flat * factor).reshape(rows.shape), j)


def perturb_iid(j: Joint, eps: float, seed=0) -> Joint:
    """Independent multiplicative noise on every supported entry."""
    if eps == 0:
        return j
    px, rows = _split(j)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=rows.shape)
    return _renormalize(px, rows * (1.0 + eps * u), j)


def _seeds(seed: int):
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def build_problem(cfg: ExperimentConfig):
    """Base joint, both perturbations, and the DIB problem under the CE family."""
    base = generate_base_channel(cfg.spec)
    r1, r2 = _seeds(cfg.seed)
    j1 = perturb_preserving(base, c4_group(cfg.spec.n), cfg.eps1, r1)
    j2 = perturb_iid(j1, cfg.eps2, r2)
    p = j2.flatten()
    prob = DibProblem.from_model(p, HierarchicalModel.ce(j2.shape))
    return base, j2, prob


# ---------------------------------------------------------------------------
# experiment


@dataclass
class ExperimentResult:
    trace: object
    summary: dict
    joint: Joint
    problem: DibProblem


def summarize(trace, prob: DibProblem) -> dict:
    rep = detect_bifurcations(trace)
    I = trace.column("I")
    D = trace.column("D")
    cards = trace.column("eff_card")
    out = {
        "lambda_max": prob.lambda_max,
        "beta_thresholds": {k: rep.thresholds[k] for k in trace.group_names},
        "I_at_threshold": {},
        "D_at_threshold": {},
        "eff_card_range": [int(cards.min()), int(cards.max())],
        "I_max": float(I.max()),
        "D_at_I_max": float(D[int(np.argmax(I))]),
        "n_points": len(trace),
        "n_not_converged": int(np.count_nonzero(~trace.column("converged").astype(bool))),
        "bifurcations": [[b, o, c] for b, o, c in rep.changes],
        "units": "nats",
        "note": "D4 stands in for the full channel-equivariance group of the base channel; it is a subgroup of it by construction.",
    }
    betas = trace.betas
    for k, b in rep.thresholds.items():
        if b is None:
            out["I_at_threshold"][k] = None
            out["D_at_threshold"][k] = None
        else:
            i = int(np.flatnonzero(betas == b)[0])
            out["I_at_threshold"][k] = float(I[i])
            out["D_at_threshold"][k] = float(D[i])
    return out


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    from . import io as dio

    base, joint, prob = build_problem(cfg)
    groups = {"C4": c4_group(cfg.spec.n), "D4": d4_group(cfg.spec.n)}
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
    sink = None
    if cfg.output_dir:
        sink = dio.TraceWriter(os.path.join(cfg.output_dir, "trace.csv"), list(groups))

    def cb(pt):
        if sink is not None:
            sink.write(pt)
        if progress is not None:
            progress(pt)

    try:
        trace = anneal_reverse(prob, cfg.schedule(), cfg.solver, groups, callback=cb)
    finally:
        if sink is not None:
            sink.close()
    summary = summarize(trace, prob)
    if cfg.output_dir:
        from . import plots

        dio.dump_json(summary, os.path.join(cfg.output_dir, "summary.json"))
        plots.info_curve(trace, os.path.join(cfg.output_dir, "info_curve.svg"))
        plots.residual_curves(trace, summary, os.path.join(cfg.output_dir, "residuals.svg"))
    return ExperimentResult(trace, summary, joint, prob)
