"""Command-line entry point: ``divib <command> ...``.

Exit codes: 0 success, 1 input error, 2 convergence failure, 3 infeasible lambda.
Files always hold nats; ``--units bits`` only changes what is printed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import io as dio
from .errors import DivibError, InfeasibleLambda
from .families import parse_family, project_to_family
from .partitions import partition_from_channel_rows, partition_from_dib_relation
from .solver import DibProblem, SolverConfig, anneal_reverse, solve_fixed_beta, target_lambda

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_INFEASIBLE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _scale(units):
    return 1.0 / math.log(2) if units == "bits" else 1.0


def _say(msg):
    print(msg, flush=True)


def parse_betas(text: str) -> np.ndarray:
    """``geometric:<max>,<min>,<count>`` or an explicit comma list."""
    from .solver import geometric_betas

    s = text.strip()
    if s.startswith("geometric:"):
        parts = s[len("geometric:"):].split(",")
        if len(parts) != 3:
            raise InputError(f"bad schedule {text!r}")
        hi, lo, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1 or not hi > 0 or not lo > 0 or (n > 1 and not hi > lo):
            raise InputError(f"bad schedule {text!r}")
        return geometric_betas(hi, lo, n)
    try:
        return np.array([float(v) for v in s.split(",")])
    except ValueError as e:
        raise InputError(f"bad schedule {text!r}") from e


def _load_problem_input(args):
    if bool(args.dist) == bool(args.joint):
        raise InputError("give exactly one of --dist or --joint")
    if args.joint:
        j = dio.load_joint(args.joint)
        return j.flatten(), j.shape
    return dio.load_distribution(args.dist), None


def _problem(args) -> DibProblem:
    p, shape = _load_problem_input(args)
    fam = parse_family(args.family, shape, dio.load_distribution)
    return DibProblem(p, project_to_family(fam, p), args.t_size)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(max_iters=args.max_iters, conv_tol=args.conv_tol, seed=args.seed)


def _groups(specs, n):
    from .symmetry import Group, Permutation

    out = {}
    for item in specs or []:
        name, sep, body = item.partition("=")
        if not sep or not name:
            raise InputError(f"--group expects name=<json>, got {item!r}")
        g = dio.group_from_json(body, identity=Permutation.identity(n))
        if g.degree != n:
            raise InputError(f"group {name} acts on {g.degree} symbols, the alphabet has {n}")
        out[name] = g if g.generators else Group.trivial(n)
    return out


# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    prob = _problem(args)
    cfg = _solver_cfg(args)
    if (args.beta is None) == (args.lam is None):
        raise InputError("give exactly one of --beta or --lambda")
    if args.beta is not None:
        res = solve_fixed_beta(prob, args.beta, None, cfg)
    else:
        lam, big = args.lam, prob.lambda_max
        # a value printed to a few digits may overshoot Lambda by rounding; within
        # the matching tolerance it means Lambda
        if big < lam <= big + 1e-4 * max(big, 1.0):
            lam = big
        res = target_lambda(prob, lam, cfg)
    out = res.to_dict()
    out["lambda_max"] = prob.lambda_max
    if args.out:
        dio.dump_json(out, args.out)
    k = _scale(args.units)
    _say(f"beta={res.beta:.6g} I={res.I * k:.10g} D={res.D * k:.10g} {args.units} eff_card={res.eff_card} converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _finish_sweep(n_bad, strict) -> int:
    if n_bad:
        print(f"warning: {n_bad} point(s) hit the iteration cap (flagged in the trace)", file=sys.stderr)
        if strict:
            return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_anneal(args) -> int:
    prob = _problem(args)
    cfg = _solver_cfg(args)
    betas = parse_betas(args.betas)
    groups = _groups(args.group, len(prob.p))
    trace = anneal_reverse(prob, betas, cfg, groups)
    if args.out:
        dio.write_trace(trace, args.out)
    last = trace.points[-1].result
    k = _scale(args.units)
    _say(f"{len(trace)} points; final beta={last.beta:.6g} I={last.I * k:.10g} D={last.D * k:.10g} {args.units}")
    return _finish_sweep(int(np.count_nonzero(~trace.column("converged").astype(bool))), args.strict)


def cmd_experiment(args) -> int:
    from .gridworld import ExperimentConfig, run_experiment

    if args.name != "gridworld":
        raise InputError(f"unknown experiment {args.name!r}")
    betas = None if args.betas is None else tuple(parse_betas(args.betas))
    try:
        cfg = ExperimentConfig(seed=args.seed, eps1=args.eps1, eps2=args.eps2, betas=betas,
                               output_dir=args.out, solver=_solver_cfg(args))
    except ValueError as e:
        raise InputError(str(e)) from e
    res = run_experiment(cfg)
    s = res.summary
    k = _scale(args.units)
    for g, b in s["beta_thresholds"].items():
        it = s["I_at_threshold"][g]
        shown = "never" if b is None else f"beta={b:.6g} I={it * k:.6g} {args.units}"
        _say(f"{g} threshold: {shown}")
    _say(f"effective cardinality {s['eff_card_range'][0]}..{s['eff_card_range'][1]}; bundle in {args.out}")
    return _finish_sweep(s["n_not_converged"], args.strict)


def cmd_partition(args) -> int:
    if args.channel:
        P = partition_from_channel_rows(dio.load_channel(args.channel), args.rel_tol)
    else:
        p, shape = _load_problem_input(args)
        fam = parse_family(args.family, shape, dio.load_distribution)
        P = partition_from_dib_relation(p, project_to_family(fam, p), args.rel_tol)
    if args.out:
        dio.dump_json(P.to_dict(), args.out)
    _say(f"{len(P)} cells")
    for c in P.cells:
        _say("  " + " ".join(P.labels[i] for i in c))
    return EXIT_OK


def cmd_symmetry(args) -> int:
    from .symmetry import (
        Group,
        Permutation,
        ProductPermutation,
        discover_equivariances,
        divergence_from_symmetric,
        is_channel_equivariance,
        is_channel_invariance,
        is_distribution_invariance,
        orbits_partition,
    )

    if args.action == "check":
        perm = dio._perm(json.loads(args.perm))
        if args.channel:
            ch = dio.load_channel(args.channel)
            ok = is_channel_equivariance(ch, perm) if isinstance(perm, ProductPermutation) else is_channel_invariance(ch, perm)
        elif args.dist:
            ok = is_distribution_invariance(dio.load_distribution(args.dist), perm)
        else:
            raise InputError("check needs --channel or --dist")
        _say("yes" if ok else "no")
        if args.out:
            dio.dump_json({"holds": bool(ok)}, args.out)
        return EXIT_OK
    if args.action == "divergence":
        if not (args.encoder and args.dist and args.group):
            raise InputError("divergence needs --encoder, --dist and --group")
        kappa = dio.load_channel(args.encoder)
        p = dio.load_distribution(args.dist)
        g = _groups([f"G={args.group}"], len(p))["G"]
        d = divergence_from_symmetric(kappa, p, g)
        _say(f"{d * _scale(args.units):.10g} {args.units}")
        if args.out:
            dio.dump_json({"divergence": d, "units": "nats"}, args.out)
        return EXIT_OK
    # discover
    if not args.channel:
        raise InputError("discover needs --channel")
    ch = dio.load_channel(args.channel)
    px = dio.load_distribution(args.dist) if args.dist else None
    g = discover_equivariances(ch, px, budget=args.budget)
    pos = [e.sigma for e in g.elements]
    orb = orbits_partition(g)
    pos_g = Group([s for s in pos if not s.is_identity()], pos, identity=Permutation.identity(len(ch.input_labels)))
    x_orbits = orbits_partition(pos_g, labels=ch.input_labels)
    out = {
        "order": g.order(),
        "elements": [e.to_dict() for e in g.elements],
        "input_orbits": x_orbits.to_dict(),
        "n_joint_orbits": len(orb),
    }
    if args.out:
        dio.dump_json(out, args.out)
    _say(f"group order {g.order()}; {len(x_orbits)} input orbits")
    return EXIT_OK


def cmd_ib(args) -> int:
    from .ib import solve_classic_ib

    j = dio.load_joint(args.joint)
    res = solve_classic_ib(j, args.beta, _solver_cfg(args), t_size=args.t_size)
    if args.out:
        dio.dump_json(res.to_dict(), args.out)
    k = _scale(args.units)
    _say(f"beta={args.beta:.6g} I(X;T)={res.I_XT * k:.10g} I(Y;T)={res.I_YT * k:.10g} {args.units} converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="divib", description="Divergence-preserving bottleneck tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, problem=True):
        if problem:
            p.add_argument("--dist", help="Distribution JSON")
            p.add_argument("--joint", help="Joint JSON (needed for ce / iib)")
            p.add_argument("--family", default="di", help="ce | di | iib | custom:<ptilde.json>")
            p.add_argument("--t-size", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-iters", type=int, default=100_000)
        p.add_argument("--conv-tol", type=float, default=1e-10)
        p.add_argument("--units", choices=("nats", "bits"), default="nats")
        p.add_argument("--out")

    p = sub.add_parser("solve", help="solve at one beta or one divergence target")
    common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("anneal", help="reverse annealing over a beta schedule")
    common(p)
    p.add_argument("--betas", default="geometric:1000,0.01,1000")
    p.add_argument("--group", action="append", help="name=<json or path>; repeatable")
    p.add_argument("--strict", action="store_true", help="exit 2 if any point is not converged")
    p.set_defaults(fn=cmd_anneal)

    p = sub.add_parser("experiment", help="run a packaged experiment")
    p.add_argument("name", choices=("gridworld",))
    common(p, problem=False)
    p.add_argument("--eps1", type=float, default=0.1)
    p.add_argument("--eps2", type=float, default=0.01)
    p.add_argument("--betas", default=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("partition", help="partition of maximal divergence preservation")
    common(p)
    p.add_argument("--channel", help="partition inputs by identical channel rows instead")
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("symmetry", help="symmetry checks and discovery")
    p.add_argument("action", choices=("check", "divergence", "discover"))
    p.add_argument("--channel")
    p.add_argument("--dist")
    p.add_argument("--encoder")
    p.add_argument("--perm", help='JSON: {"images": [...]} or {"sigma": ..., "tau": ...}')
    p.add_argument("--group", help="JSON generators or a path")
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--units", choices=("nats", "bits"), default="nats")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_symmetry)

    p = sub.add_parser("ib", help="classic information bottleneck")
    p.add_argument("action", choices=("solve",))
    p.add_argument("--joint", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--t-size", type=int, default=None)
    common(p, problem=False)
    p.set_defaults(fn=cmd_ib)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        return args.fn(args)
    except InfeasibleLambda as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, DivibError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
