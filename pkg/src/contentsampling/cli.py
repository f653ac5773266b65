"""Command line entry point: ``contentsampling <subcommand> ...``.

Exit codes: 0 ok, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import content as cg
from .estimators import ESTIMATORS, estimate
from .graph import graph_stats, load_edge_list
from .harness import (ExperimentConfig, build_store, compare_estimators, load_config,
                      run_experiment)
from .samplers import SAMPLERS, SampleTrace, SamplerConfig, sample


def _graph_args(p, required=True):
    p.add_argument("--graph", required=required, help="edge-list file")
    p.add_argument("--directed", action="store_true", default=None)
    p.add_argument("--lcc", action="store_true", default=None,
                   help="restrict to the largest connected component")


def _load_graph(args):
    g = load_edge_list(args.graph, directed=bool(args.directed))
    return g.lcc_subgraph() if args.lcc else g


def _experiment_args(p):
    _graph_args(p, required=False)
    p.add_argument("--config", help="flat key = value experiment file")
    p.add_argument("--scheme", choices=cg.SCHEMES)
    p.add_argument("--n-content", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--W", type=int)
    p.add_argument("--p-s", type=float)
    p.add_argument("--labeler")
    p.add_argument("--budget-fraction", type=float)
    p.add_argument("--walkers", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--regen-store-per-run", action="store_true", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="report CSV path")


def _experiment_config(args, parser, **extra) -> ExperimentConfig:
    overrides = dict(graph_path=args.graph, directed=args.directed, restrict_to_lcc=args.lcc,
                     scheme=args.scheme, n_content=args.n_content, alpha=args.alpha, W=args.W,
                     p_S=args.p_s, labeler=args.labeler, budget_fraction=args.budget_fraction,
                     walkers_T=args.walkers, burn_in=args.burn_in, runs=args.runs,
                     base_seed=args.seed, regen_store_per_run=args.regen_store_per_run,
                     output_path=args.out, **extra)
    if args.config:
        cfg = load_config(args.config, **overrides)
    else:
        cfg = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if cfg.graph_path is None:
        parser.error("--graph is required (on the command line or in --config)")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contentsampling",
                                     description="Sample content replicated over graphs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph-stats", help="vertex/edge/LCC counts")
    _graph_args(p)
    p.add_argument("--id-map", help="write original_id,dense_id CSV here")

    p = sub.add_parser("gen-content", help="generate a content store")
    _graph_args(p)
    p.add_argument("--scheme", choices=cg.SCHEMES, default="CDS1")
    p.add_argument("--n-content", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--W", type=int, default=20)
    p.add_argument("--p-s", type=float, default=0.01)
    p.add_argument("--labeler", default="copies")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="run one sampler and dump its trace")
    _graph_args(p)
    p.add_argument("--sampler", choices=SAMPLERS, default="UNI")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--budget", type=int)
    g.add_argument("--budget-fraction", type=float)
    p.add_argument("--steps", type=int, help="record exactly this many steps instead")
    p.add_argument("--walkers", type=int, default=1000)
    p.add_argument("--start", type=int)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="estimate a label distribution from a trace")
    _graph_args(p)
    p.add_argument("--store", help="content store (not needed for VWCE)")
    p.add_argument("--trace", required=True)
    p.add_argument("--estimator", choices=ESTIMATORS, default="WCE")
    p.add_argument("--mle-labels", action="store_true",
                   help="MLE over stored labels instead of copy counts")
    p.add_argument("--M", type=int, help="maximum copy count for MLE")
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="Monte-Carlo NMSE for one setting")
    _experiment_args(p)
    p.add_argument("--sampler", choices=SAMPLERS)
    p.add_argument("--estimator", choices=ESTIMATORS)

    p = sub.add_parser("compare", help="NMSE table across samplers/estimators")
    _experiment_args(p)
    p.add_argument("--samplers", default="UNI")
    p.add_argument("--estimators", default="DCE,SCE,WCE")
    return parser


def _write(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd(args, parser) -> None:
    if args.command == "graph-stats":
        g = load_edge_list(args.graph, directed=bool(args.directed), id_map_path=args.id_map)
        for k, v in graph_stats(g).items():
            print(f"{k}: {v}")
        if g.self_loops_dropped:
            print(f"self-loops dropped: {g.self_loops_dropped}")

    elif args.command == "gen-content":
        g = _load_graph(args)
        cfg = ExperimentConfig(scheme=args.scheme, n_content=args.n_content, alpha=args.alpha,
                               W=args.W, p_S=args.p_s, labeler=args.labeler,
                               directed=bool(args.directed))
        cfg.validate(g)
        build_store(cfg, g, args.seed).save(args.out)

    elif args.command == "sample":
        g = _load_graph(args)
        if args.budget is not None:
            budget = args.budget
        elif args.budget_fraction is not None:
            budget = max(1, round(args.budget_fraction * g.num_vertices))
        else:
            budget = max(1, round(0.01 * g.num_vertices))
        scfg = SamplerConfig(budget=budget, walkers=args.walkers, start=args.start,
                             burn_in=args.burn_in, max_steps=args.steps)
        sample(args.sampler, g, scfg, args.seed).save(args.out)

    elif args.command == "estimate":
        g = _load_graph(args)
        trace = SampleTrace.load(args.trace)
        store = None
        if args.estimator != "VWCE":
            if not args.store:
                parser.error(f"--store is required for {args.estimator}")
            store = cg.ContentStore.load(args.store, num_vertices=g.num_vertices)
        mle = None
        if args.estimator == "MLE" and args.M is not None:
            from .estimators import mle_config_for
            mle = mle_config_for(trace, store, M=args.M)
        est = estimate(args.estimator, trace, store, graph=g, mle=mle,
                       label_mode="labels" if args.mle_labels else "copies")
        _write(est.to_csv(), args.out)

    elif args.command == "experiment":
        cfg = _experiment_config(args, parser, sampler=args.sampler, estimator=args.estimator)
        report = run_experiment(cfg, jobs=args.jobs)
        if not cfg.output_path:
            sys.stdout.write(report.to_csv())
        print(f"wall time: {report.wall_time:.2f}s", file=sys.stderr)

    elif args.command == "compare":
        base = _experiment_config(args, parser)
        cfgs = [base.replace(sampler=s.strip().upper(), estimator=e.strip().upper(),
                             output_path=None)
                for s in args.samplers.split(",") for e in args.estimators.split(",")]
        table = compare_estimators(cfgs, jobs=args.jobs)
        _write(table.to_csv(), args.out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _cmd(args, parser)
    except SystemExit as e:
        return int(e.code or 0)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
