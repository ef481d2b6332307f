"""Deterministic replay of a program thread against an execution graph.

Given a graph, each thread's behaviour is fully determined: control starts
at statement 0, every step consumes the graph event at the thread's next
index (reads take their value from the recorded source), and awaits jump
backwards while their condition holds.  Replay stops when

* control leaves the thread's text (the thread *terminated*),
* the graph has no event at the next index (the thread is *awaiting* an
  extension),
* the next read has a placeholder source (the thread is *blocked*), or
* the graph event does not match what the program emits at that point
  (the graph is not an execution of this program).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .graph import (
    ErrorLabel,
    EventId,
    ExecutionGraph,
    FenceLabel,
    Label,
    ReadLabel,
    UpdateLabel,
    WriteLabel,
    is_read,
    read_value,
)
from .lang import (
    Await,
    ErrorTpl,
    EventTemplate,
    FenceTpl,
    Mode,
    NopTpl,
    Program,
    ReadTpl,
    Statement,
    Step,
    Thread,
    UpdateTpl,
    WriteTpl,
    truthy,
)


class ThreadStatus(enum.Enum):
    TERMINATED = "terminated"  # control left the program text
    AWAITING = "awaiting"  # graph has no event at the next index yet
    BLOCKED = "blocked"  # stuck on a placeholder-source read
    MISMATCH = "mismatch"  # graph event disagrees with the program


@dataclass
class ThreadTrace:
    """Replay record of one thread.

    ``positions[t]`` is the statement index before step ``t`` and
    ``states[t]`` the register state; both have one more entry than the
    number of steps taken.  ``stmt_indices[t]`` is the statement executed at
    step ``t`` and ``read_results[t]`` the value its read returned (if any).
    """

    status: ThreadStatus
    positions: list[int] = field(default_factory=list)
    states: list[dict[str, int]] = field(default_factory=list)
    stmt_indices: list[int] = field(default_factory=list)
    read_results: list[Optional[int]] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.stmt_indices)


def _expected_label(tpl: EventTemplate, env: dict[str, int]) -> Label:
    """The label a step emits, with read values left to be checked separately."""
    if isinstance(tpl, (NopTpl,)):
        return FenceLabel(Mode.RLX)
    if isinstance(tpl, FenceTpl):
        return FenceLabel(tpl.mode)
    if isinstance(tpl, ErrorTpl):
        return ErrorLabel()
    if isinstance(tpl, WriteTpl):
        return WriteLabel(tpl.loc, tpl.mode, tpl.value.eval(env))
    raise AssertionError(tpl)


def replay_thread(program: Program, g: ExecutionGraph, tid: int) -> ThreadTrace:
    thread = program.threads[tid]
    env = thread.init_env()
    k = 0
    trace = ThreadTrace(ThreadStatus.AWAITING)
    trace.positions.append(k)
    trace.states.append(dict(env))
    n_graph = g.thread_len(tid)
    t = 0
    while True:
        if k >= len(thread.body):
            trace.status = ThreadStatus.TERMINATED
            return trace
        if t >= n_graph:
            trace.status = ThreadStatus.AWAITING
            return trace
        eid: EventId = (tid, t)
        actual = g.events[eid]
        stmt = thread.body[k]
        read_result: Optional[int] = None

        if isinstance(stmt, Await):
            if actual != FenceLabel(Mode.RLX):
                trace.status = ThreadStatus.MISMATCH
                return trace
            k_next = k - stmt.length if truthy(stmt.cond, env) else k + 1
        else:
            tpl = stmt.event.fire(env)
            if isinstance(tpl, ReadTpl):
                if not (
                    isinstance(actual, ReadLabel)
                    and actual.loc == tpl.loc
                    and actual.mode == tpl.mode
                ):
                    trace.status = ThreadStatus.MISMATCH
                    return trace
                if actual.value is None:
                    trace.stmt_indices.append(k)
                    trace.read_results.append(None)
                    trace.positions.append(k)
                    trace.states.append(dict(env))
                    trace.status = ThreadStatus.BLOCKED
                    return trace
                read_result = actual.value
            elif isinstance(tpl, UpdateTpl):
                operands = tuple(a.eval(env) for a in tpl.args)
                if not (
                    isinstance(actual, UpdateLabel)
                    and actual.loc == tpl.loc
                    and actual.mode == tpl.mode
                    and actual.fail_mode == tpl.fail_mode
                    and actual.kind == tpl.kind
                    and actual.operands == operands
                ):
                    trace.status = ThreadStatus.MISMATCH
                    return trace
                if actual.read_value is None:
                    trace.stmt_indices.append(k)
                    trace.read_results.append(None)
                    trace.positions.append(k)
                    trace.states.append(dict(env))
                    trace.status = ThreadStatus.BLOCKED
                    return trace
                expected_wv = tpl.write_value(actual.read_value, env)
                if actual.write_value != expected_wv:
                    trace.status = ThreadStatus.MISMATCH
                    return trace
                read_result = actual.read_value
            else:
                if actual != _expected_label(tpl, env):
                    trace.status = ThreadStatus.MISMATCH
                    return trace
            env = stmt.update.apply(env, read_result)
            k_next = k + 1

        trace.stmt_indices.append(k)
        trace.read_results.append(read_result)
        k = k_next
        t += 1
        trace.positions.append(k)
        trace.states.append(dict(env))
        if isinstance(actual, ErrorLabel):
            # an error event ends the thread (assertion failed)
            trace.status = ThreadStatus.TERMINATED
            return trace


@dataclass
class ReplayOutcome:
    traces: list[ThreadTrace]
    consistent: bool  # graph events = exactly what the program generates
    runnable: list[int]  # threads awaiting an extension
    blocked: list[int]  # threads stuck on a placeholder read
    has_error: bool

    @property
    def complete(self) -> bool:
        return self.consistent and not self.runnable and not self.blocked


def replay(program: Program, g: ExecutionGraph) -> ReplayOutcome:
    traces = [replay_thread(program, g, tid) for tid in range(len(program.threads))]
    consistent = True
    runnable = []
    blocked = []
    has_error = False
    for tid, trace in enumerate(traces):
        if trace.status is ThreadStatus.MISMATCH:
            consistent = False
            continue
        # no superfluous events: the graph holds exactly the replayed prefix
        if g.thread_len(tid) != trace.steps:
            consistent = False
        if trace.status is ThreadStatus.AWAITING:
            runnable.append(tid)
        elif trace.status is ThreadStatus.BLOCKED:
            blocked.append(tid)
        if any(isinstance(g.events[(tid, t)], ErrorLabel) for t in range(g.thread_len(tid))):
            has_error = True
    return ReplayOutcome(traces, consistent, runnable, blocked, has_error)
