"""Command-line surface: build, query, verify, bench.

Human-readable tables go to stdout; structured line-delimited records
(schema "spindex/1") go to the path given by --log.  Exit codes: 0 success,
1 verification failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .engines import make_engine
from .graphs import (DimacsError, load_dimacs, read_query_workload,
                     read_update_batch)
from .simulate import WorkloadConfig, calibrate_engine, measure_max_throughput
from .treedec import save_snapshot, load_snapshot, validate_decomposition
from .verify import SUITES, run_suites, suite_oracle

SCHEMA = "spindex/1"

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_IO = 3

TREE_SNAPSHOT_KINDS = {"ch", "dch", "h2h", "dh2h", "mhl"}


class _Log:
    def __init__(self, path):
        self.fh = open(path, "w") if path else None

    def emit(self, record, **fields):
        if self.fh is None:
            return
        obj = {"schema": SCHEMA, "record": record}
        obj.update(fields)
        self.fh.write(json.dumps(obj) + "\n")

    def close(self):
        if self.fh is not None:
            self.fh.close()


def _engine_params(args):
    kind = args.index
    if kind == "pmhl":
        return {"k": args.partitions or 8, "seed": args.seed,
                "workers": args.workers, "interleave": args.interleave}
    if kind == "postmhl":
        return {"tau": args.bandwidth, "ke": args.ke, "beta_l": args.beta_l,
                "beta_u": args.beta_u, "workers": args.workers}
    return {}


def _check_params(parser, args):
    kind = getattr(args, "index", None)
    if kind is None:
        return
    if kind != "pmhl" and args.partitions is not None:
        parser.error("--partitions applies only to --index pmhl")
    if kind != "postmhl":
        for flag, name in ((args.bandwidth_set, "--bandwidth"),
                          (args.ke_set, "--ke")):
            if flag:
                parser.error(f"{name} applies only to --index postmhl")
    if kind == "pmhl" and args.partitions is None:
        args.partitions = 8


def _load_graph(path):
    try:
        return load_dimacs(path)
    except OSError as exc:
        print(f"cannot read graph: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    except DimacsError as exc:
        print(f"malformed graph file: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def cmd_build(args, log):
    net = _load_graph(args.graph)
    t0 = time.perf_counter()
    engine = make_engine(args.index, net, **_engine_params(args))
    t_c = time.perf_counter() - t0
    entries = engine.entry_count()
    print(f"index      {args.index}")
    print(f"vertices   {net.n}")
    print(f"edges      {net.m}")
    print(f"t_c        {t_c:.4f} s")
    print(f"entries    {entries}")
    report = {"index": args.index, "n": net.n, "m": net.m,
              "t_c": t_c, "entries": entries}
    steps = getattr(getattr(engine, "idx", None), "build_steps", None)
    if steps:
        report["steps"] = steps
        for name, stamp in steps.items():
            print(f"  step {name:<10} {stamp:.4f} s")
    log.emit("build", **report)
    if args.snapshot:
        if args.index not in TREE_SNAPSHOT_KINDS:
            print("snapshots are supported for tree-based kinds only "
                  "(ch, h2h, mhl)", file=sys.stderr)
            return EXIT_USAGE
        try:
            save_snapshot(engine.mhl.tree, args.snapshot)
        except OSError as exc:
            print(f"cannot write snapshot: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"snapshot   {args.snapshot}")
    return EXIT_OK


def cmd_query(args, log):
    net = _load_graph(args.graph)
    engine = make_engine(args.index, net, **_engine_params(args))
    if args.apply:
        try:
            batch = read_update_batch(args.apply)
        except OSError as exc:
            print(f"cannot read batch: {exc}", file=sys.stderr)
            return EXIT_IO
        engine.apply_batch(batch)
    try:
        pairs = read_query_workload(args.pairs)
    except OSError as exc:
        print(f"cannot read queries: {exc}", file=sys.stderr)
        return EXIT_IO
    stage = args.stage or engine.stages[-1]
    if stage not in engine.stages:
        print(f"stage {stage} not offered by {args.index} "
              f"(has {', '.join(engine.stages)})", file=sys.stderr)
        return EXIT_USAGE
    for s, t in pairs:
        d = engine.query(s, t, stage)
        print(f"{s} {t} {d}")
        log.emit("query", s=s, t=t, distance=None if d == float("inf") else d,
                 stage=stage)
    return EXIT_OK


def cmd_verify(args, log):
    names = args.suite.split(",") if args.suite else None
    if names:
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            print(f"unknown suite(s): {', '.join(unknown)} "
                  f"(have {', '.join(SUITES)})", file=sys.stderr)
            return EXIT_USAGE
    failures = 0
    if args.snapshot_in:
        try:
            tree = load_snapshot(args.snapshot_in)
            violations = []
            if args.graph:
                violations = validate_decomposition(_load_graph(args.graph), tree)
        except Exception as exc:
            violations = [f"snapshot unreadable: {exc}"]
        status = "pass" if not violations else "FAIL"
        print(f"suite snapshot-file        {status}")
        for v in violations[:10]:
            print(f"    {v}")
        log.emit("verify", suite="snapshot-file", ok=not violations,
                 violations=violations[:10])
        failures += bool(violations)
    ok, results = run_suites(names)
    for name, msgs in results.items():
        status = "pass" if not msgs else "FAIL"
        print(f"suite {name:<20} {status}")
        for m in msgs[:10]:
            print(f"    {m}")
        log.emit("verify", suite=name, ok=not msgs, violations=msgs[:10])
        failures += bool(msgs)
    if args.graph and (names is None or "oracle" in names):
        net = _load_graph(args.graph)
        if net.n <= 256:
            passed, msgs = suite_oracle(graphs=[net])
            status = "pass" if passed else "FAIL"
            print(f"suite oracle(supplied)     {status}")
            log.emit("verify", suite="oracle-supplied", ok=passed,
                     violations=msgs[:10])
            failures += not passed
        else:
            print("supplied graph too large for the oracle suite; skipped")
    return EXIT_OK if not failures and ok else EXIT_VERIFY


def cmd_bench(args, log):
    net = _load_graph(args.graph)
    kinds = args.engines.split(",") if args.engines else [args.index]
    if not kinds or kinds == [None]:
        print("bench needs --index or --engines", file=sys.stderr)
        return EXIT_USAGE
    cfg = WorkloadConfig(interval=args.interval, volume=args.updates,
                         qos=args.qos, arrival=args.arrival,
                         horizon=args.horizon, seed=args.seed,
                         clock=args.clock)
    print(f"{'engine':<12}{'t_c':>10}{'entries':>12}{'t_u':>12}"
          f"{'rate':>12}{'analytic':>12}")
    for kind in kinds:
        saved_index = args.index
        args.index = kind
        engine = make_engine(kind, net.copy(), **_engine_params(args))
        args.index = saved_index
        calibration = None
        if cfg.clock == "virtual":
            calibration = calibrate_engine(engine, engine.net, cfg)
            log.emit("calibration", engine=kind, **calibration.as_dict())
        report = measure_max_throughput(engine, engine.net, cfg, calibration)
        for probe in report.probes:
            log.emit("probe", engine=kind, **probe)
        t_u = report.probes[-1]["t_u"] if report.probes else 0.0
        log.emit("report", engine=kind, t_c=engine.build_time,
                 entries=engine.entry_count(), **report.as_dict())
        print(f"{kind:<12}{engine.build_time:>10.3f}{engine.entry_count():>12}"
              f"{t_u:>12.4f}{report.rate:>12.2f}{report.analytic:>12.2f}"
              f"{'  OVERLOAD' if report.overload else ''}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spindex",
        description="Dynamic shortest-distance indexes for road networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph_required=True):
        p.add_argument("--graph", required=graph_required,
                       help="DIMACS .gr input")
        p.add_argument("--index", default=None,
                       choices=["bidijkstra", "ch", "h2h", "mhl", "pmhl",
                                "postmhl"])
        p.add_argument("--partitions", "-k", type=int, default=None,
                       help="partition count (pmhl)")
        p.add_argument("--ke", type=int, default=16,
                       help="target partition count (postmhl)")
        p.add_argument("--bandwidth", type=int, default=100,
                       help="max boundary bag width tau (postmhl)")
        p.add_argument("--beta-l", type=float, default=0.2)
        p.add_argument("--beta-u", type=float, default=1.0)
        p.add_argument("--interleave", default="block",
                       choices=["block", "roundrobin"])
        p.add_argument("--workers", "-p", type=int, default=1)
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--log", default=None,
                       help="write line-delimited records here")

    b = sub.add_parser("build", help="build an index, report t_c and size")
    common(b)
    b.add_argument("--snapshot", default=None, help="write tree snapshot")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer a query file")
    common(q)
    q.add_argument("--pairs", required=True, help="query file (s t per line)")
    q.add_argument("--apply", default=None, help="update batch to apply first")
    q.add_argument("--stage", default=None, help="query stage, e.g. Q3")
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("verify", help="run verification suites")
    common(v, graph_required=False)
    v.add_argument("--suite", default=None,
                   help=f"comma list from: {', '.join(SUITES)}")
    v.add_argument("--snapshot-in", default=None,
                   help="validate a tree snapshot file")
    v.set_defaults(func=cmd_verify)

    be = sub.add_parser("bench", help="measure maximum query throughput")
    common(be)
    be.add_argument("--engines", default=None,
                    help="comma list of engine kinds for paired runs")
    be.add_argument("--interval", type=float, default=120.0,
                    help="update period (seconds)")
    be.add_argument("--updates", type=int, default=1000,
                    help="updates per batch")
    be.add_argument("--qos", type=float, default=1.0,
                    help="average response time bound (seconds)")
    be.add_argument("--arrival", type=float, default=1.0,
                    help="starting query arrival rate")
    be.add_argument("--horizon", type=int, default=10)
    be.add_argument("--clock", default="wall", choices=["wall", "virtual"])
    be.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.bandwidth_set = any(a.startswith("--bandwidth")
                             for a in (argv or sys.argv[1:]))
    args.ke_set = any(a.startswith("--ke") for a in (argv or sys.argv[1:]))
    if args.command in ("build", "query") and args.index is None:
        parser.error("--index is required")
    if getattr(args, "index", None) is not None:
        _check_params(parser, args)
    log = _Log(args.log)
    try:
        return args.func(args, log)
    finally:
        log.close()


if __name__ == "__main__":
    sys.exit(main())
