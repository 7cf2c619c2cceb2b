"""Command-line entry point: ``greedyls <command> ...``.

Every command prints a single JSON object on stdout, except ``bench`` which
writes ``results.csv`` and ``manifest.json`` into ``--out``.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import analysis, bench, guarantees, oracle, synthesis
from .errors import GreedyLSError
from .io import dump_json, read_matrix, read_vector


def _stop_args(p, name):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--%s" % name, type=int, help="target cardinality")
    g.add_argument("--eps-t", type=float, help="target residual")


def build_parser():
    ap = argparse.ArgumentParser(prog="greedyls", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="sparse synthesis recovery")
    p.add_argument("algorithm", choices=sorted(synthesis.SOLVERS))
    p.add_argument("--matrix", required=True)
    p.add_argument("--vector", required=True)
    _stop_args(p, "k")

    p = sub.add_parser("analysis", help="cosparse analysis recovery")
    p.add_argument("algorithm", choices=sorted(analysis.SOLVERS))
    p.add_argument("--M", required=True, dest="M")
    p.add_argument("--Omega", required=True, dest="Omega")
    p.add_argument("--y", required=True)
    p.add_argument("--eps-w", type=float)
    _stop_args(p, "l")

    p = sub.add_parser("rip", help="exact RIP constant by enumeration")
    p.add_argument("--matrix", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--budget", type=int, default=guarantees.RIP_BUDGET)

    p = sub.add_parser("omega-rip", help="exact Omega-RIP constant by enumeration")
    p.add_argument("--M", required=True, dest="M")
    p.add_argument("--Omega", required=True, dest="Omega")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--budget", type=int, default=guarantees.OMEGA_RIP_BUDGET)

    p = sub.add_parser("bounds", help="evaluate the closed-form recovery bounds")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--y0-norm-sq", type=float)
    p.add_argument("--eps-t", type=float)
    p.add_argument("--a", type=float, default=guarantees.DEFAULT_CONFIDENCE)

    p = sub.add_parser("oracle", help="exhaustive best (co)support")
    osub = p.add_subparsers(dest="mode", required=True)
    q = osub.add_parser("sparse")
    q.add_argument("--matrix", required=True)
    q.add_argument("--vector", required=True)
    q.add_argument("--k", type=int, required=True)
    q = osub.add_parser("cosparse")
    q.add_argument("--M", required=True, dest="M")
    q.add_argument("--Omega", required=True, dest="Omega")
    q.add_argument("--y", required=True)
    q.add_argument("--l", type=int, required=True)

    p = sub.add_parser("bench", help="seeded Monte-Carlo experiments")
    p.add_argument("kind", choices=bench.KINDS)
    p.add_argument("--config", help="JSON file overriding the defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="fill mean_ms (makes the CSV machine dependent)")
    return ap


def _run(args):
    cmd = args.command
    if cmd == "solve":
        prob = synthesis.SynthesisProblem(read_matrix(args.matrix), read_vector(args.vector),
                                          k=args.k, eps_t=args.eps_t)
        return synthesis.SOLVERS[args.algorithm](prob).to_json()
    if cmd == "analysis":
        prob = analysis.AnalysisProblem(read_matrix(args.M), read_matrix(args.Omega),
                                        read_vector(args.y), l=args.l, eps_t=args.eps_t,
                                        eps_w=args.eps_w)
        return analysis.SOLVERS[args.algorithm](prob).to_json()
    if cmd == "rip":
        return guarantees.rip_constant(read_matrix(args.matrix), args.order, args.budget).to_json()
    if cmd == "omega-rip":
        return guarantees.omega_rip_constant(read_matrix(args.M), read_matrix(args.Omega),
                                             args.order, args.budget).to_json()
    if cmd == "bounds":
        return guarantees.bound_report(args.delta, args.k, n=args.n, sigma=args.sigma,
                                       y0_norm_sq=args.y0_norm_sq, eps_t=args.eps_t,
                                       a=args.a).to_json()
    if cmd == "oracle":
        if args.mode == "sparse":
            return oracle.exhaustive_sparse(read_matrix(args.matrix), read_vector(args.vector),
                                            args.k).to_json()
        return oracle.exhaustive_cosparse(read_matrix(args.M), read_matrix(args.Omega),
                                          read_vector(args.y), args.l).to_json()
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    bench.run_to_dir(args.kind, cfg, args.seed, args.out, args.workers, args.timing)
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        out = _run(args)
    except (GreedyLSError, ValueError, OSError) as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1
    if out is not None:
        dump_json(out, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
