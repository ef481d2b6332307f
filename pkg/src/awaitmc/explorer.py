"""Stateless exploration of all consistent, non-wasteful executions.

The algorithm keeps a stack of execution graphs, starting from the graph
holding only the initializing writes.  Popping a graph:

1. discard it if it was already explored, is inconsistent under the chosen
   model, or is wasteful;
2. replay the program against it; if no thread awaits an extension, the
   graph is maximal: report a stuck (stagnant) placeholder read as an
   await-termination violation, otherwise record a completed execution;
3. otherwise extend the lowest-indexed awaiting thread by one event:

   * reads push one copy per existing same-location write, plus — inside an
     await — one copy with the placeholder source;
   * writes push one copy per modification-order slot, plus *revisits*: for
     every existing same-location read outside the new write's causal past,
     the causally-closed prefix copy in which that read now reads the new
     write (resolving placeholder reads too);
   * rmws combine both: the read source forces the write part's slot;
   * fences, no-ops and await bookkeeping events extend in place;
   * an error event is a safety violation and is reported immediately.

Exploration succeeds when the stack runs dry; resource caps make the result
inconclusive instead.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .graph import (
    INIT_THREAD,
    ErrorLabel,
    EventId,
    ExecutionGraph,
    FenceLabel,
    ReadLabel,
    UpdateLabel,
    WriteLabel,
    is_read,
    is_write,
    mem_loc,
    read_value,
    rmw_write_value,
    written_value,
)
from .lang import (
    Await,
    ErrorTpl,
    FenceTpl,
    Mode,
    NopTpl,
    Program,
    ReadTpl,
    Step,
    UpdateTpl,
    WriteTpl,
)
from .loopmeta import (
    bounded_effect_violations,
    is_stagnant,
    is_wasteful,
    thread_iterations,
)
from .memmodel import Model, get_model
from .replay import ReplayOutcome, ThreadStatus, replay


@dataclass
class ExploreOptions:
    max_graphs: int = 1_000_000
    max_seconds: float = 300.0
    all_violations: bool = False
    wasteful_filter: bool = True
    check_bounded_effect: bool = True
    collect_complete: bool = False
    on_explored: Optional[Callable[[ExecutionGraph], None]] = None


@dataclass
class SearchStats:
    popped: int = 0
    explored: int = 0
    duplicates: int = 0
    inconsistent: int = 0
    wasteful: int = 0
    complete: int = 0
    max_stack: int = 0
    bound_violations: list[str] = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class Success:
    stats: SearchStats
    complete_graphs: list[ExecutionGraph] = field(default_factory=list)

    kind = "success"


@dataclass
class SafetyViolation:
    graph: ExecutionGraph
    error_event: EventId
    stats: SearchStats
    all_found: list = field(default_factory=list)
    complete_graphs: list[ExecutionGraph] = field(default_factory=list)

    kind = "safety-violation"


@dataclass
class ATViolation:
    graph: ExecutionGraph
    blocked_read: EventId
    stats: SearchStats
    all_found: list = field(default_factory=list)
    complete_graphs: list[ExecutionGraph] = field(default_factory=list)

    kind = "at-violation"


@dataclass
class Inconclusive:
    reason: str
    stats: SearchStats

    kind = "inconclusive"


@dataclass
class FragmentError:
    """The input is outside the supported fragment (bounded effect fails)."""

    violations: list
    stats: SearchStats

    kind = "fragment-error"


Verdict = Union[Success, SafetyViolation, ATViolation, Inconclusive, FragmentError]


def _await_spans(program: Program, tid: int) -> list[tuple[int, int]]:
    """Statement ranges [k-n, k] of each await in thread ``tid``."""
    out = []
    for k, stmt in enumerate(program.threads[tid].body):
        if isinstance(stmt, Await):
            out.append((k - stmt.length, k))
    return out


def _inside_await(program: Program, tid: int, k: int) -> bool:
    return any(lo <= k <= hi for lo, hi in _await_spans(program, tid))


def static_fragment_scan(program: Program) -> list[str]:
    """Cheap syntactic screen: plain stores inside await bodies can never
    satisfy the bounded-effect requirement if the loop retries."""
    issues = []
    for tid, thread in enumerate(program.threads):
        for lo, hi in _await_spans(program, tid):
            for k in range(lo, hi):
                stmt = thread.body[k]
                if isinstance(stmt, Step):
                    for tpl in stmt.event.templates():
                        if isinstance(tpl, WriteTpl):
                            issues.append(
                                f"{thread.name}[{k}]: store inside an await body"
                            )
    return issues


def _revisit_graphs(
    g: ExecutionGraph,
    wid: EventId,
    label,
    rf_src: Optional[EventId] = None,
) -> list[ExecutionGraph]:
    """All graphs in which an existing read is redirected to the new write.

    The revisited read keeps only its causal past plus the writer's; events
    added "after" the read that are not needed by the writer are dropped and
    will be re-explored.  Reads causally before the writer cannot be
    revisited (the writer depends on them).  ``rf_src`` is the read source of
    the new write if it is an rmw: it pins the write's slot and must survive
    the cut.
    """
    loc = mem_loc(label)
    roots = list(g.po_prefix(wid))
    if rf_src is not None and rf_src[0] != INIT_THREAD:
        roots.append(rf_src)
    writer_prefix = g.porf_prefix(roots)
    out = []
    for r in sorted(g.rf):
        if r == wid or mem_loc(g.events[r]) != loc:
            continue
        if r in writer_prefix or r[0] == wid[0]:
            continue
        keep = g.porf_prefix([r]) | writer_prefix
        cut = g.restricted(keep)
        order = cut.mo[loc]
        if rf_src is not None:
            if rf_src not in cut.events and rf_src[0] != INIT_THREAD:
                continue
            positions = [order.index(rf_src) + 1]
            rf_kw = rf_src
        else:
            # place the new write in every slot of the restricted order
            positions = list(range(1, len(order) + 1))
            rf_kw = None
        for pos in positions:
            g2 = cut.add_event(wid, label, rf=rf_kw, mo_pos=pos)
            g2 = g2.set_rf(r, wid)
            out.append(g2)
    return out


def _push_read(
    stack: list[ExecutionGraph],
    g: ExecutionGraph,
    eid: EventId,
    tpl: ReadTpl,
    in_await: bool,
) -> None:
    if in_await:
        stack.append(g.add_event(eid, ReadLabel(tpl.loc, tpl.mode, None), rf=None))
    for w in reversed(g.mo[tpl.loc]):
        label = ReadLabel(tpl.loc, tpl.mode, written_value(g.events[w]))
        stack.append(g.add_event(eid, label, rf=w))


def _push_write(
    stack: list[ExecutionGraph],
    g: ExecutionGraph,
    eid: EventId,
    label: WriteLabel,
) -> None:
    order = g.mo[label.loc]
    for pos in range(1, len(order) + 1):
        stack.append(g.add_event(eid, label, mo_pos=pos))
    stack.extend(_revisit_graphs(g, eid, label))


def _push_update(
    stack: list[ExecutionGraph],
    g: ExecutionGraph,
    eid: EventId,
    tpl: UpdateTpl,
    operands: tuple[int, ...],
    in_await: bool,
) -> None:
    order = g.mo[tpl.loc]
    for w in order:
        rv = written_value(g.events[w])
        wv = rmw_write_value(tpl.kind, operands, rv)
        label = UpdateLabel(tpl.loc, tpl.mode, tpl.fail_mode, tpl.kind, operands, rv, wv)
        if wv is None:
            stack.append(g.add_event(eid, label, rf=w))
        else:
            pos = order.index(w) + 1  # atomicity: right after the source
            g2 = g.add_event(eid, label, rf=w, mo_pos=pos)
            stack.append(g2)
            stack.extend(_revisit_graphs(g, eid, label, rf_src=w))
    if in_await:
        label = UpdateLabel(tpl.loc, tpl.mode, tpl.fail_mode, tpl.kind, operands, None, None)
        stack.append(g.add_event(eid, label, rf=None))


def explore(
    program: Program,
    model: Union[Model, str] = "ramm",
    options: Optional[ExploreOptions] = None,
) -> Verdict:
    if isinstance(model, str):
        model = get_model(model)
    opts = options or ExploreOptions()
    stats = SearchStats()
    start_time = time.monotonic()
    start_graph = ExecutionGraph.initial(program.shared_init)
    stack: list[ExecutionGraph] = [start_graph]
    seen: set = set()
    violations: list[Verdict] = []
    complete_graphs: list[ExecutionGraph] = []
    total_stmts = program.total_statements()

    def finish(verdict: Verdict) -> Verdict:
        stats.seconds = time.monotonic() - start_time
        return verdict

    while stack:
        stats.max_stack = max(stats.max_stack, len(stack))
        if stats.popped >= opts.max_graphs:
            return finish(Inconclusive(f"graph budget of {opts.max_graphs} exhausted", stats))
        if time.monotonic() - start_time > opts.max_seconds:
            return finish(Inconclusive(f"time budget of {opts.max_seconds}s exhausted", stats))
        g = stack.pop()
        stats.popped += 1
        key = g.canonical_key()
        if key in seen:
            stats.duplicates += 1
            continue
        seen.add(key)
        if not model.consistent(g):
            stats.inconsistent += 1
            continue
        if opts.wasteful_filter and is_wasteful(program, g):
            stats.wasteful += 1
            continue
        outcome = replay(program, g)
        if not outcome.consistent:
            stats.inconsistent += 1
            continue
        stats.explored += 1
        if opts.on_explored is not None:
            opts.on_explored(g)
        if opts.check_bounded_effect:
            be = bounded_effect_violations(program, g)
            if be:
                return finish(FragmentError(be, stats))
        _check_bounds(program, g, outcome, total_stmts, stats)

        if not outcome.runnable:
            if outcome.blocked:
                if is_stagnant(program, g, model):
                    blocked_tid = outcome.blocked[0]
                    rid = (blocked_tid, g.thread_len(blocked_tid) - 1)
                    verdict = ATViolation(g, rid, stats)
                    if opts.all_violations:
                        violations.append(verdict)
                        continue
                    return finish(verdict)
                continue
            stats.complete += 1
            if opts.collect_complete:
                complete_graphs.append(g)
            continue

        tid = min(outcome.runnable)
        trace = outcome.traces[tid]
        t = trace.steps
        k = trace.positions[-1]
        env = trace.states[-1]
        eid: EventId = (tid, t)
        stmt = program.threads[tid].body[k]

        if isinstance(stmt, Await):
            stack.append(g.add_event(eid, FenceLabel(Mode.RLX)))
            continue
        tpl = stmt.event.fire(env)
        if isinstance(tpl, NopTpl):
            stack.append(g.add_event(eid, FenceLabel(Mode.RLX)))
        elif isinstance(tpl, FenceTpl):
            stack.append(g.add_event(eid, FenceLabel(tpl.mode)))
        elif isinstance(tpl, ErrorTpl):
            g2 = g.add_event(eid, ErrorLabel())
            verdict = SafetyViolation(g2, eid, stats)
            if opts.all_violations:
                violations.append(verdict)
                continue
            return finish(verdict)
        elif isinstance(tpl, ReadTpl):
            _push_read(stack, g, eid, tpl, _inside_await(program, tid, k))
        elif isinstance(tpl, WriteTpl):
            label = WriteLabel(tpl.loc, tpl.mode, tpl.value.eval(env))
            _push_write(stack, g, eid, label)
        elif isinstance(tpl, UpdateTpl):
            operands = tuple(a.eval(env) for a in tpl.args)
            _push_update(stack, g, eid, tpl, operands, _inside_await(program, tid, k))
        else:  # pragma: no cover
            raise AssertionError(tpl)

    if violations:
        first = violations[0]
        first.all_found = violations  # type: ignore[attr-defined]
        first.complete_graphs = complete_graphs  # type: ignore[attr-defined]
        return finish(first)
    return finish(Success(stats, complete_graphs))


def _check_bounds(
    program: Program,
    g: ExecutionGraph,
    outcome: ReplayOutcome,
    total_stmts: int,
    stats: SearchStats,
) -> None:
    """Record violations of the structural bounds every explored graph must
    satisfy: at most one write per program statement overall, and per await
    fewer failed iterations than writes it could read from."""
    n_writes = sum(
        1 for e, l in g.events.items() if e[0] != INIT_THREAD and is_write(l)
    )
    if n_writes > total_stmts:
        stats.bound_violations.append(
            f"{n_writes} writes exceeds the statement total {total_stmts}"
        )
    for tid, trace in enumerate(outcome.traces):
        its = thread_iterations(program, trace, tid)
        per_await: dict[int, int] = {}
        for it in its:
            if it.failed:
                per_await[it.await_stmt] = per_await.get(it.await_stmt, 0) + 1
        for k, failed_count in per_await.items():
            locs = _polled_locations(program, tid, k)
            # writes the await could ever read from: the initializing write
            # plus every program statement that can write the location
            readable = len(locs) + sum(
                _potential_writers(program, loc) for loc in locs
            )
            if failed_count > max(0, readable - 1):
                stats.bound_violations.append(
                    f"thread {tid} await {k}: {failed_count} failed iterations, "
                    f"only {readable} potential writes"
                )


def _potential_writers(program: Program, loc: str) -> int:
    count = 0
    for thread in program.threads:
        for stmt in thread.body:
            if isinstance(stmt, Step):
                if any(
                    isinstance(tpl, (WriteTpl, UpdateTpl)) and tpl.loc == loc
                    for tpl in stmt.event.templates()
                ):
                    count += 1
    return count


def _polled_locations(program: Program, tid: int, await_stmt: int) -> set[str]:
    body = program.threads[tid].body
    stmt = body[await_stmt]
    assert isinstance(stmt, Await)
    locs: set[str] = set()
    for k in range(await_stmt - stmt.length, await_stmt):
        s = body[k]
        if isinstance(s, Step):
            for tpl in s.event.templates():
                if isinstance(tpl, (ReadTpl, UpdateTpl)):
                    locs.add(tpl.loc)
    return locs
