"""Command-line entry point: ``maxlpa <verb> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import analysis, engine, experiments, graph
from .experiments import ConfigError, ExperimentConfig, PPrimeRule

log = logging.getLogger("maxlpa")


def _add_shared(p: argparse.ArgumentParser, table: bool = True) -> None:
    p.add_argument("--n", type=int, action="append", help="node count (repeatable)")
    p.add_argument("--c", type=float, action="append", help="density coefficient c in p = c log n / n (repeatable)")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--p-prime", default="0.6/n", help="inter-block probability: value or 'coef/n'")
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--log-base", choices=sorted(experiments.LOG_BASES), default="2",
                   help="base of log n in p = c log n / n")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    if table:
        p.add_argument("--trials", type=int, default=50)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--summary", default=None, help="also write the summary table/plot data here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxlpa", description="Max-LPA label propagation experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    gen = sub.add_parser("generate", help="sample a graph and write it in edge-list form")
    gen.add_argument("model", choices=["path", "er", "cer"])
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=float, default=None, help="edge (or intra-block) probability")
    gen.add_argument("--c", type=float, default=None, help="use p = c log n / n instead of --p")
    gen.add_argument("--blocks", type=int, default=2, help="number of equal blocks (cer)")
    gen.add_argument("--p-prime", default="0.6/n")
    gen.add_argument("--log-base", choices=sorted(experiments.LOG_BASES), default="2")
    gen.add_argument("--seed", type=int, default=0, help="graph seed")
    gen.add_argument("--out", default="-")
    gen.add_argument("--planted-out", default=None, help="write the block sidecar here (cer)")

    r = sub.add_parser("run", help="one fully logged Max-LPA run")
    r.add_argument("model", choices=["path", "er", "cer", "file"])
    r.add_argument("--n", type=int, default=None)
    r.add_argument("--p", type=float, default=None)
    r.add_argument("--c", type=float, default=None)
    r.add_argument("--blocks", type=int, default=2)
    r.add_argument("--p-prime", default="0.6/n")
    r.add_argument("--log-base", choices=sorted(experiments.LOG_BASES), default="2")
    r.add_argument("--graph", default=None, help="graph file (model 'file')")
    r.add_argument("--planted", default=None, help="block sidecar for a graph file")
    r.add_argument("--graph-seed", type=int, default=0)
    r.add_argument("--label-seed", type=int, default=0)
    r.add_argument("--labels", default=None, help="initial label values, one per node")
    r.add_argument("--max-rounds", type=int, default=None)
    r.add_argument("--trajectory", default=None, help="write per-round labels here")
    r.add_argument("--out", default="-")

    for verb, help_ in [("table1", "single-community counts on G(n, c log n / n)"),
                        ("table2", "exact two-block recovery on clustered graphs"),
                        ("rounds", "mean rounds to a single community per c series")]:
        _add_shared(sub.add_parser(verb, help=help_))

    cc = sub.add_parser("check-conditions", help="evaluate the clustered-graph sufficient conditions")
    cc.add_argument("--n", type=int, required=True)
    cc.add_argument("--blocks", type=int, default=2)
    cc.add_argument("--p", type=float, required=True, help="intra-block probability")
    cc.add_argument("--p-prime", required=True)
    cc.add_argument("--c", type=float, required=True, help="the constant c of the concentration condition")
    cc.add_argument("--out", default="-")
    return ap


class _Output:
    def __init__(self, path: str):
        self.path = path

    def __enter__(self):
        if self.path == "-":
            return sys.stdout
        self.f = open(self.path, "w", encoding="ascii", newline="\n")
        return self.f

    def __exit__(self, *exc):
        if self.path != "-":
            self.f.close()
        return False


def _probability(args, n: int) -> float:
    if args.c is not None:
        return experiments.edge_probability(n, args.c, args.log_base)
    if args.p is None:
        raise ConfigError("need --p or --c")
    return args.p


def _build_graph(args) -> tuple[graph.Graph, Optional[graph.PlantedModel]]:
    seed = graph.Seed(args.graph_seed if hasattr(args, "graph_seed") else args.seed, 0)
    if args.model == "file":
        if not args.graph:
            raise ConfigError("model 'file' needs --graph")
        g = graph.read_graph(args.graph)
        model = None
        if args.planted:
            with open(args.planted, encoding="ascii") as f:
                k = int(f.readline())
            # probabilities are irrelevant for comparison; any valid values do
            model = graph.read_planted(args.planted, [1.0] * k, 0.0)
        return g, model
    if args.n is None:
        raise ConfigError("--n is required")
    if args.model == "path":
        return graph.gen_path(args.n), None
    p = _probability(args, args.n)
    if args.model == "er":
        return graph.gen_er(args.n, p, seed), None
    pp = PPrimeRule.parse(args.p_prime).resolve(args.n)
    model = graph.PlantedModel.equal_blocks(args.n, args.blocks, p, pp)
    return graph.gen_clustered_er(model, seed), model


def cmd_generate(args) -> int:
    g, model = _build_graph(args)
    with _Output(args.out) as f:
        graph.write_graph(g, f)
    if model is not None and args.planted_out:
        graph.write_planted(model, args.planted_out)
    log.info("generated %r", g)
    return 0


def cmd_run(args) -> int:
    g, model = _build_graph(args)
    if args.labels:
        s0 = engine.read_labels(args.labels)
        if s0.n != g.n:
            raise ConfigError(f"label file has {s0.n} values, graph has {g.n} nodes")
    else:
        s0 = engine.init_labels(g.n, args.label_seed)
    result = engine.run(g, s0, args.max_rounds, keep_history=bool(args.trajectory))
    comms = engine.extract_communities(result.final, g)
    report = {
        "n": g.n,
        "m": g.m,
        "connected": graph.is_connected(g),
        "t_star": result.t_star,
        "period": result.period,
        "truncated": result.truncated,
        "communities": len(comms),
        "community_sizes": [int(m.size) for m in comms.members],
        "communities_connected": bool(comms.connected.all()),
        "oscillating_nodes": result.oscillating_nodes().tolist(),
        "final_labels": result.final.labels.tolist(),
    }
    if model is not None:
        report["matches_planted"] = analysis.compare_partition(result.final, model, result).exact_match
    if args.trajectory:
        engine.write_trajectory(result.history, args.trajectory)
    with _Output(args.out) as f:
        json.dump(report, f)
        f.write("\n")
    return 0


def _config(args, kind: str) -> ExperimentConfig:
    if not args.n or not args.c:
        raise ConfigError("need at least one --n and one --c")
    return ExperimentConfig(kind=kind, n_values=args.n, c_values=args.c, trials=args.trials,
                            seed=args.seed, p_prime=PPrimeRule.parse(args.p_prime),
                            max_rounds=args.max_rounds, threads=args.threads, log_base=args.log_base)


def _progress(rec: experiments.TrialRecord) -> None:
    log.info("n=%d c=%g trial=%d rounds=%d communities=%d", rec.n, rec.c, rec.trial,
             rec.rounds, rec.communities)


def cmd_experiment(args) -> int:
    kind = {"table1": "table1", "table2": "table2", "rounds": "rounds"}[args.verb]
    cfg = _config(args, kind)
    cfg.validate()
    records = experiments.run_experiment(cfg, _progress)
    with _Output(args.out) as f:
        experiments.write_csv(records, f)
    summary = experiments.summarize(records)
    if kind == "rounds":
        text = experiments.format_plot_data(experiments.rounds_series(summary))
    else:
        text = experiments.format_table(summary)
    if args.summary:
        with _Output(args.summary) as f:
            f.write(text)
    elif args.out != "-":
        sys.stdout.write(text)
    return 0


def cmd_check_conditions(args) -> int:
    pp = PPrimeRule.parse(args.p_prime).resolve(args.n)
    model = graph.PlantedModel.equal_blocks(args.n, args.blocks, args.p, pp)
    rows = analysis.theorem2_conditions(model, args.c, args.n)
    with _Output(args.out) as f:
        f.write("block,n_i,density_lhs,density_rhs,condition_i,concentration_lhs,concentration_rhs,condition_ii\n")
        for b in rows:
            f.write(f"{b.block},{model.block_sizes[b.block]},{b.density_lhs:.6g},{b.density_rhs:.6g},"
                    f"{int(b.condition_i)},{b.concentration_lhs:.6g},{b.concentration_rhs:.6g},"
                    f"{int(b.condition_ii)}\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"generate": cmd_generate, "run": cmd_run, "check-conditions": cmd_check_conditions}
    try:
        return handlers.get(args.verb, cmd_experiment)(args)
    except (ConfigError, graph.InvalidParameterError, graph.GraphFormatError) as exc:
        ap.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
