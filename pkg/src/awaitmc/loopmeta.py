"""Await-loop metadata over replayed executions.

From a thread's replay trace we recover the *iterations* of its await
loops: maximal step ranges ``[start, end]`` whose last step executes an
``Await`` statement.  An iteration *failed* if the await's condition held
and control jumped back.

On top of iterations this module provides:

* wastefulness — an execution is wasteful if some failed iteration reads
  from exactly the same sources as the following iteration (it could be cut
  out without changing anything);
* register reads-from (``rrf``) — a syntactic over-approximation of which
  later steps depend on the registers a step assigned;
* the bounded-effect check — failed iterations must not write (except
  rewriting the current value) and their register effects must stay inside
  the iteration;
* stagnancy — no blocked thread can be unblocked by reading any existing
  write without producing an inconsistent or wasteful execution;
* the iteration cut ``g - (T, q)`` used to justify filtering wasteful
  executions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .graph import (
    INIT_THREAD,
    EventId,
    ExecutionGraph,
    UpdateLabel,
    is_read,
    is_write,
    mem_loc,
    written_value,
)
from .lang import Await, Program, ReadTpl, Statement, Step, UpdateTpl, truthy
from .replay import ReplayOutcome, ThreadStatus, ThreadTrace, replay


@dataclass(frozen=True)
class Iteration:
    thread: int
    ordinal: int  # q-th await step of this thread
    await_stmt: int  # statement index of the Await
    start: int  # first step of the iteration body
    end: int  # step executing the Await
    failed: bool


def thread_iterations(program: Program, trace: ThreadTrace, tid: int) -> list[Iteration]:
    body = program.threads[tid].body
    out: list[Iteration] = []
    for t, k in enumerate(trace.stmt_indices):
        stmt = body[k]
        if isinstance(stmt, Await):
            failed = truthy(stmt.cond, trace.states[t])
            out.append(
                Iteration(
                    thread=tid,
                    ordinal=len(out),
                    await_stmt=k,
                    start=t - stmt.length,
                    end=t,
                    failed=failed,
                )
            )
    return out


def iterations(program: Program, g: ExecutionGraph) -> dict[int, list[Iteration]]:
    outcome = replay(program, g)
    return {
        tid: thread_iterations(program, trace, tid) for tid, trace in enumerate(outcome.traces)
    }


# ---------------------------------------------------------------------------
# Wastefulness
# ---------------------------------------------------------------------------


def _iteration_wasteful(
    g: ExecutionGraph, tid: int, it: Iteration, nxt: Iteration
) -> bool:
    """Did the failed iteration ``it`` read the same sources as ``nxt``?

    Only meaningful when ``nxt`` directly follows ``it`` at the same await.
    A read in ``it`` whose counterpart in ``nxt`` is missing, is not a read,
    or has a different source makes the pair non-redundant.
    """
    length = it.end - it.start
    for m in range(length + 1):
        e1 = (tid, it.start + m)
        if not is_read(g.events[e1]):
            continue
        e2 = (tid, nxt.start + m)
        if e2 not in g.events or not is_read(g.events[e2]):
            return False
        if g.rf.get(e1) != g.rf.get(e2):
            return False
    return True


def wasteful_pairs(program: Program, g: ExecutionGraph) -> list[tuple[Iteration, Iteration]]:
    out = []
    for tid, its in iterations(program, g).items():
        for it, nxt in zip(its, its[1:]):
            if it.failed and nxt.end - nxt.start == it.end - it.start:
                if _iteration_wasteful(g, tid, it, nxt):
                    out.append((it, nxt))
    return out


def is_wasteful(program: Program, g: ExecutionGraph) -> bool:
    return bool(wasteful_pairs(program, g))


# ---------------------------------------------------------------------------
# Register reads-from (syntactic dependence)
# ---------------------------------------------------------------------------


def _step_domain(program: Program, trace: ThreadTrace, tid: int, t: int) -> frozenset[str]:
    stmt = program.threads[tid].body[trace.stmt_indices[t]]
    if isinstance(stmt, Await):
        return frozenset()
    return stmt.update.domain(trace.states[t], trace.read_results[t])


def _step_deps(program: Program, trace: ThreadTrace, tid: int, t: int) -> frozenset[str]:
    stmt = program.threads[tid].body[trace.stmt_indices[t]]
    if isinstance(stmt, Await):
        return stmt.cond.free_regs()
    return stmt.event.free_regs() | stmt.update.free_regs()


def rrf_edges(program: Program, trace: ThreadTrace, tid: int) -> list[tuple[int, int]]:
    """Pairs (t, u), u >= t, where step u may depend on registers that step t
    assigned and no step in between reassigned."""
    n = trace.steps
    domains = [_step_domain(program, trace, tid, t) for t in range(n)]
    deps = [_step_deps(program, trace, tid, t) for t in range(n)]
    out = []
    for t in range(n):
        visible = set(domains[t])
        for u in range(t, n):
            if u > t:
                visible -= domains[u - 1] if u - 1 > t else set()
            if visible & deps[u]:
                out.append((t, u))
            if not visible:
                break
    return out


# ---------------------------------------------------------------------------
# Bounded effect
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundedEffectViolation:
    thread: int
    iteration: int
    step: int
    reason: str


def bounded_effect_violations(program: Program, g: ExecutionGraph) -> list[BoundedEffectViolation]:
    """Check the executed failed iterations of ``g``.

    A failed iteration must not contain a write event that changes its
    location's value, and every register dependence sourced inside it must
    land inside the same iteration (the await's own condition counts as
    inside).
    """
    outcome = replay(program, g)
    out: list[BoundedEffectViolation] = []
    for tid, trace in enumerate(outcome.traces):
        its = thread_iterations(program, trace, tid)
        failed = [it for it in its if it.failed]
        if not failed:
            continue
        edges = rrf_edges(program, trace, tid)
        for it in failed:
            for t in range(it.start, it.end):
                label = g.events.get((tid, t))
                if label is not None and is_write(label):
                    loc = mem_loc(label)
                    order = g.mo[loc]
                    prev = order[order.index((tid, t)) - 1]
                    if written_value(label) != written_value(g.events[prev]):
                        out.append(
                            BoundedEffectViolation(
                                tid, it.ordinal, t, "failed iteration writes a new value"
                            )
                        )
            for t, u in edges:
                if it.start <= t < it.end and not (it.start <= u <= it.end):
                    out.append(
                        BoundedEffectViolation(
                            tid, it.ordinal, t, f"register effect escapes to step {u}"
                        )
                    )
    return out


# ---------------------------------------------------------------------------
# Stagnancy
# ---------------------------------------------------------------------------


def _can_proceed(program: Program, g: ExecutionGraph, tid: int, model, depth: int = 0) -> bool:
    """Can thread ``tid`` make useful progress reading only existing writes?

    Extends the graph along the thread's deterministic continuation
    (bookkeeping events), branching over the existing writes for every read
    it encounters, and declares progress once the thread terminates, emits
    a write/rmw/error, or keeps spinning non-wastefully.
    """
    if depth > 64:  # safety net; wasteful filtering bounds real recursions
        return True
    if not model.consistent(g):
        return False
    if is_wasteful(program, g):
        return False
    trace = replay(program, g).traces[tid]
    if trace.status is ThreadStatus.TERMINATED:
        return True
    if trace.status is not ThreadStatus.AWAITING:
        return False
    eid: EventId = (tid, trace.steps)
    k = trace.positions[-1]
    env = trace.states[-1]
    stmt = program.threads[tid].body[k]
    from .graph import FenceLabel, ReadLabel
    from .lang import FenceTpl, Mode, NopTpl

    if isinstance(stmt, Await):
        g2 = g.add_event(eid, FenceLabel(Mode.RLX))
        return _can_proceed(program, g2, tid, model, depth + 1)
    tpl = stmt.event.fire(env)
    if isinstance(tpl, (NopTpl, FenceTpl)):
        mode = tpl.mode if isinstance(tpl, FenceTpl) else Mode.RLX
        g2 = g.add_event(eid, FenceLabel(mode))
        return _can_proceed(program, g2, tid, model, depth + 1)
    if isinstance(tpl, ReadTpl):
        for w in g.mo[tpl.loc]:
            label = ReadLabel(tpl.loc, tpl.mode, written_value(g.events[w]))
            if _can_proceed(program, g.add_event(eid, label, rf=w), tid, model, depth + 1):
                return True
        return False
    # a write, rmw or error is progress beyond mere spinning
    return True


def is_stagnant(program: Program, g: ExecutionGraph, model) -> bool:
    """No blocked thread can be helped by an existing write.

    Holds when some thread has not terminated, every such thread sits on a
    placeholder-source read inside an await, and re-pointing any blocked
    read at any existing same-location write (continuing through the
    await's bookkeeping to see whether the loop would just repeat itself)
    yields an execution that is inconsistent or wasteful.
    """
    outcome = replay(program, g)
    if not outcome.consistent:
        return False
    unterminated = [
        tid
        for tid, trace in enumerate(outcome.traces)
        if trace.status is not ThreadStatus.TERMINATED
    ]
    if not unterminated:
        return False
    if outcome.runnable:
        return False
    if any(outcome.traces[tid].status is not ThreadStatus.BLOCKED for tid in unterminated):
        return False
    for tid in unterminated:
        rid: EventId = (tid, g.thread_len(tid) - 1)
        assert g.rf.get(rid, 0) is None
        loc = mem_loc(g.events[rid])
        for w in g.mo[loc]:
            if w == rid:
                continue
            candidate = g.set_rf(rid, w)
            if _can_proceed(program, candidate, tid, model):
                return False
    return True


# ---------------------------------------------------------------------------
# Iteration cut
# ---------------------------------------------------------------------------


def cut_iteration(program: Program, g: ExecutionGraph, tid: int, ordinal: int) -> ExecutionGraph:
    """Remove iteration ``ordinal`` of thread ``tid`` and renumber.

    Intended for failed iterations without (value-changing) writes: if a
    removed write event is read from outside the removed range the cut is
    rejected.
    """
    its = iterations(program, g)[tid]
    it = its[ordinal]
    lo, hi = it.start, it.end
    removed = {(tid, t) for t in range(lo, hi + 1)}

    def rename(e: EventId) -> EventId:
        if e[0] == tid and e[1] > hi:
            return (tid, e[1] - (hi - lo + 1))
        return e

    events = {}
    for e, label in g.events.items():
        if e in removed:
            continue
        events[rename(e)] = label
    rf = {}
    for r, w in g.rf.items():
        if r in removed:
            continue
        if w is not None and w in removed:
            raise ValueError("cannot cut: a removed write is read from outside the iteration")
        rf[rename(r)] = rename(w) if w is not None else None
    mo = {
        loc: tuple(rename(e) for e in order if e not in removed) for loc, order in g.mo.items()
    }
    return ExecutionGraph(events, rf, mo)
