"""Command-line front end: `cdsbn <subcommand> [options]`.

Exit codes: 0 success or match, 1 usage error, 2 verification mismatch, 3 I/O.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

from .bench import (ASSERTED_TRENDS, RunParams, ablation_monotone, run_ablation,
                    run_bench, run_trend_suite, write_csv)
from .bitruss import QuerySpec
from .engine import Engine, bbd_baseline, summary_line
from .oracle import OracleCapExceeded, oracle_enumerate
from .workload import (GenConfig, build_graph, gen_queries, generate, generate_workload,
                       load_dataset, load_stream, stream_items)

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_gen(p):
    g = p.add_argument_group("generator (used when no dataset is given)")
    g.add_argument("--config", help="key=value generator config file")
    g.add_argument("--users", type=int, help="|U(G)|")
    g.add_argument("--items", type=int, help="|L(G)|")
    g.add_argument("--degree-dist", choices=("powerlaw", "beta"))
    g.add_argument("--mean-degree", type=float)
    g.add_argument("--min-w", type=int)
    g.add_argument("--max-w", type=int)
    g.add_argument("--keyword-dist", choices=("lognormal", "pareto", "uniform"))
    g.add_argument("--domain", type=int, help="keyword domain size")
    g.add_argument("--kw-per-item", type=int, help="keywords per item")
    g.add_argument("--stream-fraction", type=float)


def _add_data(p):
    d = p.add_argument_group("dataset")
    d.add_argument("--data", help="directory written by `generate`")
    d.add_argument("--edges", help="initial graph file")
    d.add_argument("--format", default="edge-list", choices=("edge-list", "konect"))
    d.add_argument("--keywords", dest="keywords_file", help="item keyword file")
    d.add_argument("--stream", help="stream file (one `user item` per line)")
    _add_gen(p)


def _add_query(p, window=True):
    q = p.add_argument_group("query")
    q.add_argument("--k", type=int, default=4)
    q.add_argument("--r", type=int, default=2)
    q.add_argument("--sigma", type=int, default=3)
    q.add_argument("--q", type=int, default=5, help="number of query keywords")
    q.add_argument("--query", help="explicit comma-separated query keywords")
    q.add_argument("--queries", type=int, default=1, help="number of generated query specs")
    if window:
        q.add_argument("--s", type=int, default=500, help="window size")
        q.add_argument("--warmup", type=int, default=None,
                       help="stream items replayed before querying (default: s)")


def _gen_config(args) -> GenConfig:
    overrides = {"seed": args.seed}
    for flag, key in (("users", "n_users"), ("items", "n_items"), ("degree_dist", "degree_dist"),
                      ("mean_degree", "mean_degree"), ("min_w", "min_w"), ("max_w", "max_w"),
                      ("keyword_dist", "keyword_dist"), ("domain", "keyword_domain"),
                      ("kw_per_item", "keywords_per_item"),
                      ("stream_fraction", "stream_fraction")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "config", None):
        return GenConfig.from_file(args.config, **overrides)
    return GenConfig(**overrides)


def _load(args, capacity):
    """(graph, stream items) from --data / --edges, or freshly generated."""
    data = getattr(args, "data", None)
    edges = getattr(args, "edges", None)
    if data:
        edges = os.path.join(data, "initial.txt")
        kw = os.path.join(data, "keywords.txt")
        st = os.path.join(data, "stream.txt")
        g = load_dataset(edges, "edge-list", kw, capacity, args.seed)
        return g, load_stream(st) if os.path.exists(st) else []
    if edges:
        g = load_dataset(edges, args.format, args.keywords_file, capacity, args.seed)
        return g, load_stream(args.stream) if args.stream else []
    wl = generate_workload(_gen_config(args))
    return build_graph(wl.edges, wl.keywords, capacity), stream_items(wl.stream)


def _specs(args, g):
    if args.query:
        words = frozenset(w.strip() for w in args.query.split(",") if w.strip())
        return [QuerySpec(words, args.k, args.r, args.sigma, g.bits)]
    return gen_queries(g, args.queries, args.q, seed=args.seed, k=args.k, r=args.r,
                       sigma=args.sigma)


def _engine(args, synopsis):
    g, stream = _load(args, args.s)
    eng = Engine(g, synopsis=False, workers=args.threads, r_max=max(3, args.r))
    warm = args.s if args.warmup is None else args.warmup
    warm = min(warm, len(stream))
    for p in stream[:warm]:
        eng.slide(p)
    if synopsis:
        # one batch build is cheaper than maintaining the tree through warm-up
        eng.rebuild_synopsis()
    return eng, stream[warm:]


def _emit(out, text):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args):
    paths = generate(_gen_config(args), args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_load(args):
    g, stream = _load(args, args.s)
    words = {w for a in g.item_attrs.values() for w in a.keywords}
    print(f"users={len(g.user_adj)} items={len(g.item_adj)} edges={g.num_edges} "
          f"keywords={len(words)} stream_items={len(stream)}")
    return EXIT_OK


def cmd_build_synopsis(args):
    g, _ = _load(args, args.s)
    t0 = time.perf_counter()
    eng = Engine(g, gamma=args.gamma, r_max=args.r_max, synopsis=True, workers=1)
    ms = (time.perf_counter() - t0) * 1000
    syn = eng.syn
    leaves = sum(1 for n in syn.nodes.values() if n.leaf)
    print(f"nodes={len(syn.nodes)} leaves={leaves} depth={syn.depth()} users={len(syn.user_agg)} "
          f"gamma={args.gamma} r_max={args.r_max} build_ms={ms:.1f}")
    if args.dump:
        print("\n".join(syn.dump()))
    return EXIT_OK


def cmd_snapshot(args):
    eng, _ = _engine(args, synopsis=True)
    for spec in _specs(args, eng.graph):
        t0 = time.perf_counter()
        res = eng.snapshot(spec)
        ms = (time.perf_counter() - t0) * 1000
        for rec in res.records():
            print(rec)
        print(summary_line(eng.graph.tick, spec, len(res), ms))
    return EXIT_OK


def cmd_bbd(args):
    eng, _ = _engine(args, synopsis=False)
    for spec in _specs(args, eng.graph):
        t0 = time.perf_counter()
        res = bbd_baseline(eng.graph, spec, args.threads)
        ms = (time.perf_counter() - t0) * 1000
        for rec in res.records():
            print(rec)
        print(summary_line(eng.graph.tick, spec, len(res), ms))
    return EXIT_OK


def cmd_continuous(args):
    eng, rest = _engine(args, synopsis=False)
    specs = _specs(args, eng.graph)
    for spec in specs:
        eng.register(spec)
    slides = rest if args.slides is None else rest[:args.slides]
    for i, p in enumerate(slides, 1):
        t0 = time.perf_counter()
        eng.slide(p)
        ms = (time.perf_counter() - t0) * 1000
        if args.every and i % args.every == 0:
            for spec in specs:
                print(summary_line(eng.graph.tick, spec, len(eng.results(spec)), ms))
    for spec in specs:
        res = eng.results(spec)
        for rec in res.records():
            print(rec)
        print(summary_line(eng.graph.tick, spec, len(res), 0.0))
    return EXIT_OK


def _run_params(args):
    return RunParams(s=args.s, k=args.k, r=args.r, sigma=args.sigma, q=args.q,
                     n_queries=args.queries, slides=args.slides, workers=args.threads)


def cmd_bench(args):
    if args.vary is None:
        raise UsageError("bench: --vary NAME VALUES is required")
    name, values = args.vary
    try:
        values = _ints(values)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc))
    rows = run_bench(_gen_config(args), _run_params(args), name, values, runs=args.runs)
    _emit(args.out, write_csv(rows))
    return EXIT_OK


def cmd_ablation(args):
    g, stream = _load(args, args.s)
    eng = Engine(g, synopsis=False, workers=args.threads)
    for p in stream[:min(args.s, len(stream))]:
        eng.slide(p)
    eng.rebuild_synopsis()
    rows = run_ablation(eng, _specs(args, g), dataset=args.data or args.edges or "synthetic",
                        extract=args.extract)
    _emit(args.out, write_csv(rows))
    if not ablation_monotone(rows):
        print("ablation counts not monotone: " + ", ".join(str(r["pruned"]) for r in rows),
              file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_trend(args):
    base = _gen_config(args)
    sweeps = {}
    for spec in args.sweep or ():
        name, _, vals = spec.partition("=")
        try:
            sweeps[name] = _ints(vals)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc))
    if not sweeps:
        raise UsageError("trend: give at least one --sweep NAME=V1,V2,...")
    log = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    rows, verdicts = run_trend_suite(base, _run_params(args), sweeps, reps=args.runs, log=log)
    _emit(args.out, write_csv(rows))
    bad = [n for n, v in verdicts.items() if n in ASSERTED_TRENDS and not v["ok"]]
    for n, v in verdicts.items():
        print(f"{n}: rho={v['rho']} p={v['p']:.3g} expected={'+' if v['expected'] > 0 else '-'} "
              f"{'ok' if v['ok'] else 'FAIL'}", file=sys.stderr)
    return EXIT_MISMATCH if bad else EXIT_OK


def cmd_verify(args):
    """Snapshot, baseline and continuous results against the oracle."""
    if not (args.data or args.edges):
        # oracle-scale defaults unless the user overrides the generator flags
        for flag, val in (("users", 12), ("items", 12), ("mean_degree", 5.0), ("domain", 8),
                          ("kw_per_item", 2), ("max_w", 3), ("stream_fraction", 0.3)):
            if getattr(args, flag) is None:
                setattr(args, flag, val)
        if args.keyword_dist is None:
            args.keyword_dist = "uniform"
    g, stream = _load(args, args.s)
    eng = Engine(g, synopsis=True, workers=args.threads)
    specs = _specs(args, g)
    for spec in specs:
        eng.register(spec)
    problems = []

    def check(label):
        for spec in specs:
            want = set(oracle_enumerate(eng.graph, spec, args.cap))
            for name, got in (("snapshot", eng.snapshot(spec)), ("bbd", eng.bbd(spec)),
                              ("continuous", eng.results(spec))):
                if set(got.signatures()) != want:
                    problems.append(f"{label} {name} [{spec.summary()}]: "
                                    f"{len(got)} results, oracle {len(want)}")

    check("initial")
    for p in stream[:args.slides]:
        eng.slide(p)
        check(f"tick={eng.graph.tick}")
    checked = 1 + min(args.slides, len(stream))
    if problems:
        for line in problems[:20]:
            print(line)
        print(f"MISMATCH ({len(problems)} problems over {checked} states)")
        return EXIT_MISMATCH
    print(f"MATCH ({checked} states, {len(specs)} specs)")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=100, help="logical extraction workers")

    ap = Parser(prog="cdsbn", description="Keyword-aware bitruss communities over "
                                           "streaming weighted bipartite graphs.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("generate", parents=[common], help="write a synthetic workload")
    p.add_argument("--out", required=True, help="output directory")
    _add_gen(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("load", parents=[common], help="load a dataset and print its size")
    _add_data(p)
    p.add_argument("--s", type=int, default=500)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("build-synopsis", parents=[common], help="build the synopsis tree")
    _add_data(p)
    p.add_argument("--s", type=int, default=500)
    p.add_argument("--gamma", type=int, default=32, help="node fan-out")
    p.add_argument("--r-max", type=int, default=3)
    p.add_argument("--dump", action="store_true")
    p.set_defaults(func=cmd_build_synopsis)

    for name, func, text in (("snapshot", cmd_snapshot, "one-off community query"),
                             ("bbd", cmd_bbd, "decomposition baseline query")):
        p = sub.add_parser(name, parents=[common], help=text)
        _add_data(p)
        _add_query(p)
        p.set_defaults(func=func)

    p = sub.add_parser("continuous", parents=[common], help="register queries and stream")
    _add_data(p)
    _add_query(p)
    p.add_argument("--slides", type=int, default=None, help="stream items to process")
    p.add_argument("--every", type=int, default=1, help="print a summary every N slides (0: never)")
    p.set_defaults(func=cmd_continuous)

    p = sub.add_parser("bench", parents=[common], help="timing sweep over one parameter")
    _add_gen(p)
    _add_query(p)
    p.add_argument("--vary", nargs=2, metavar=("NAME", "VALUES"),
                   help="s, k, r, sigma, q, domain, kw_per_item, max_w, n_items or n_users")
    p.add_argument("--runs", type=int, default=10, help="seeded runs per value")
    p.add_argument("--slides", type=int, default=100)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ablation", parents=[common], help="pruned candidates per pruning group")
    _add_data(p)
    _add_query(p)
    p.add_argument("--out")
    p.add_argument("--extract", action="store_true",
                   help="also peel the surviving candidates and count results")
    p.set_defaults(func=cmd_ablation)

    p = sub.add_parser("trend", parents=[common], help="trend-direction suite")
    _add_gen(p)
    _add_query(p)
    p.add_argument("--sweep", action="append", metavar="NAME=V1,V2,...")
    p.add_argument("--runs", type=int, default=3, help="repetitions per point")
    p.add_argument("--slides", type=int, default=50)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("verify", parents=[common], help="cross-check every path against the oracle")
    _add_data(p)
    _add_query(p)
    p.add_argument("--slides", type=int, default=30)
    p.add_argument("--cap", type=int, default=300, help="oracle edge cap")
    p.set_defaults(func=cmd_verify, s=20, q=2, k=3, r=1, sigma=2, queries=2)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be positive")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OracleCapExceeded as exc:
        print(f"cdsbn: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"cdsbn: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
