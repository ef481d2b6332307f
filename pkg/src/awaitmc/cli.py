"""Command-line interface.

Subcommands::

    awaitmc check PROGRAM      verify one program (file path or --case NAME)
    awaitmc optimize PROGRAM   search for maximally relaxed barrier modes
    awaitmc corpus             run the built-in cases against expectations
    awaitmc dump-graph FILE    render a stored counterexample as GraphViz

Exit codes: 0 success / expectations met, 1 violation found, 2 usage or
input error, 3 search inconclusive (budget exhausted).

All output is deterministic: structured output never includes timings, and
every collection is emitted in a fixed order, so two runs over the same
input are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .corpus import builtin_cases, get_case
from .explorer import ExploreOptions, Verdict, explore
from .graph import ExecutionGraph, graph_from_obj, graph_to_obj
from .lang import Program
from .memmodel import MODELS
from .optimizer import Optimizer, apply_assignment, count_modes
from .surface import SurfaceError, parse_program

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

# Environment overrides for the default search caps (flags still win).
ENV_MAX_GRAPHS = "AWAITMC_MAX_GRAPHS"
ENV_MAX_SECONDS = "AWAITMC_MAX_SECONDS"


def _default_caps() -> tuple[int, float]:
    max_graphs = int(os.environ.get(ENV_MAX_GRAPHS, 1_000_000))
    max_seconds = float(os.environ.get(ENV_MAX_SECONDS, 300.0))
    return max_graphs, max_seconds


def _load_program(args) -> tuple[Program, list[str]]:
    if args.case:
        case = get_case(args.case)
        program = case.program()
        names = [t.name for t in program.threads]
        return program, names
    if not args.program:
        raise SurfaceError("a program file or --case is required")
    with open(args.program) as fh:
        program = parse_program(fh.read())
    return program, [t.name for t in program.threads]


def _verdict_payload(verdict: Verdict, names: list[str]) -> dict:
    payload: dict = {"verdict": verdict.kind}
    stats = verdict.stats
    payload["stats"] = {
        "popped": stats.popped,
        "explored": stats.explored,
        "duplicates": stats.duplicates,
        "inconsistent": stats.inconsistent,
        "wasteful": stats.wasteful,
        "complete": stats.complete,
        "bound_violations": list(stats.bound_violations),
    }
    if verdict.kind == "safety-violation":
        payload["error_event"] = list(verdict.error_event)
        payload["graph"] = graph_to_obj(verdict.graph)
    elif verdict.kind == "at-violation":
        payload["blocked_read"] = list(verdict.blocked_read)
        payload["graph"] = graph_to_obj(verdict.graph)
    elif verdict.kind == "inconclusive":
        payload["reason"] = verdict.reason
    elif verdict.kind == "fragment-error":
        payload["violations"] = [
            {"thread": v.thread, "iteration": v.iteration, "step": v.step, "reason": v.reason}
            for v in verdict.violations
        ]
    return payload


def _render_text(verdict: Verdict, names: list[str]) -> str:
    lines = [f"verdict: {verdict.kind}"]
    s = verdict.stats
    lines.append(
        f"graphs: popped={s.popped} explored={s.explored} complete={s.complete} "
        f"duplicates={s.duplicates} inconsistent={s.inconsistent} wasteful={s.wasteful}"
    )
    if verdict.kind in ("safety-violation", "at-violation"):
        what = (
            "failed assertion"
            if verdict.kind == "safety-violation"
            else "await never terminates (blocked read marked ⚡)"
        )
        lines.append(f"counterexample ({what}):")
        lines.append(verdict.graph.dump_text(names).rstrip("\n"))
    elif verdict.kind == "inconclusive":
        lines.append(f"reason: {verdict.reason}")
    elif verdict.kind == "fragment-error":
        for v in verdict.violations:
            lines.append(f"unsupported input: thread {v.thread} step {v.step}: {v.reason}")
    return "\n".join(lines) + "\n"


def _exit_code(verdict: Verdict) -> int:
    if verdict.kind == "success":
        return EXIT_OK
    if verdict.kind == "inconclusive":
        return EXIT_INCONCLUSIVE
    if verdict.kind == "fragment-error":
        return EXIT_USAGE
    return EXIT_VIOLATION


def cmd_check(args) -> int:
    program, names = _load_program(args)
    opts = ExploreOptions(
        max_graphs=args.max_graphs,
        max_seconds=args.max_seconds,
        all_violations=args.all_violations,
    )
    verdict = explore(program, args.model, opts)
    if args.format == "text":
        sys.stdout.write(_render_text(verdict, names))
    elif args.format == "structured":
        payload = _verdict_payload(verdict, names)
        payload["model"] = args.model
        payload["threads"] = names
        sys.stdout.write(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    elif args.format == "graph-file":
        if verdict.kind in ("safety-violation", "at-violation"):
            payload = {"threads": names, "graph": graph_to_obj(verdict.graph)}
            sys.stdout.write(json.dumps(payload, indent=1, sort_keys=True) + "\n")
        else:
            sys.stdout.write(json.dumps({"verdict": verdict.kind}) + "\n")
    return _exit_code(verdict)


def cmd_optimize(args) -> int:
    program, names = _load_program(args)
    opts = ExploreOptions(max_graphs=args.max_graphs, max_seconds=args.max_seconds)
    opt = Optimizer(program, args.model, pins=args.pin, explore_options=opts)
    try:
        result = opt.run(args.strategy)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    out_lines = [f"strategy: {result.strategy}", f"sites: {len(result.sites)}"]
    if result.pinned:
        out_lines.append("pinned: " + " ".join(s.name(program) for s in result.pinned))
    for i, assignment in enumerate(result.minimal):
        relaxed = apply_assignment(program, assignment)
        n_acq, n_rel, n_sc = count_modes(relaxed)
        out_lines.append(f"assignment {i}: acq={n_acq} rel={n_rel} sc={n_sc}")
        for site in sorted(assignment, key=lambda s: s.name(program)):
            out_lines.append(f"  {site.name(program)}: {assignment[site].value}")
    if args.audit:
        for probe in result.audit:
            desc = " ".join(f"{k}={v}" for k, v in probe.assignment.items())
            out_lines.append(f"probe [{probe.verdict}] {desc}")
    sys.stdout.write("\n".join(out_lines) + "\n")
    return EXIT_OK if result.minimal else EXIT_VIOLATION


def cmd_corpus(args) -> int:
    failures = 0
    for case in builtin_cases():
        program = case.program()
        for model, expected in sorted(case.expected.items()):
            opts = ExploreOptions(max_graphs=args.max_graphs, max_seconds=args.max_seconds)
            verdict = explore(program, model, opts)
            ok = verdict.kind == expected
            status = "ok" if ok else "FAIL"
            print(f"{status:4s} {case.name} [{model}]: {verdict.kind} (expected {expected})")
            if not ok:
                failures += 1
    return EXIT_OK if failures == 0 else EXIT_VIOLATION


def cmd_dump_graph(args) -> int:
    with open(args.file) as fh:
        payload = json.load(fh)
    if "graph" not in payload:
        sys.stderr.write("error: file contains no counterexample graph\n")
        return EXIT_USAGE
    g = graph_from_obj(payload["graph"])
    names = payload.get("threads")
    if args.format == "dot":
        sys.stdout.write(g.dump_dot(names))
    else:
        sys.stdout.write(g.dump_text(names))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="awaitmc",
        description="model checker for await-loop termination under weak memory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    default_graphs, default_seconds = _default_caps()

    def add_cap_args(p):
        p.add_argument("--max-graphs", type=int, default=default_graphs,
                       help=f"search cap (default 1000000, or ${ENV_MAX_GRAPHS})")
        p.add_argument("--max-seconds", type=float, default=default_seconds,
                       help=f"time cap (default 300, or ${ENV_MAX_SECONDS})")

    def add_program_args(p):
        p.add_argument("program", nargs="?", help="surface-dialect program file")
        p.add_argument("--case", help="name of a built-in case instead of a file")
        p.add_argument("--model", default="ramm", choices=sorted(MODELS))
        add_cap_args(p)

    p_check = sub.add_parser("check", help="verify safety and await termination")
    add_program_args(p_check)
    p_check.add_argument("--all-violations", action="store_true")
    p_check.add_argument(
        "--format", default="text", choices=("text", "structured", "graph-file")
    )
    p_check.set_defaults(func=cmd_check)

    p_opt = sub.add_parser("optimize", help="search for weakest verifying barriers")
    add_program_args(p_opt)
    p_opt.add_argument("--strategy", default="greedy", choices=("greedy", "exhaustive"))
    p_opt.add_argument("--pin", action="append", default=[],
                       help="site name (or prefix) to freeze; repeatable")
    p_opt.add_argument("--audit", action="store_true", help="print every probe")
    p_opt.set_defaults(func=cmd_optimize)

    p_corpus = sub.add_parser("corpus", help="run the built-in cases")
    add_cap_args(p_corpus)
    p_corpus.set_defaults(func=cmd_corpus)

    p_dump = sub.add_parser("dump-graph", help="render a stored counterexample")
    p_dump.add_argument("file", help="structured/graph-file output of `check`")
    p_dump.add_argument("--format", default="dot", choices=("dot", "text"))
    p_dump.set_defaults(func=cmd_dump_graph)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SurfaceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
