"""Independent sequential-consistency oracle.

A direct operational interpreter over programs: shared memory is a plain
dict, threads interleave one statement at a time, and reads return the
current memory value.  It shares no code with the graph-based explorer, so
agreement between the two is meaningful evidence.

Intended for await-free (hence terminating) programs; programs with awaits
may diverge under unfair schedules, so :func:`reachable_finals` refuses
them.
"""

from __future__ import annotations

from dataclasses import dataclass

from awaitmc.lang import (
    Await,
    ErrorTpl,
    FenceTpl,
    NopTpl,
    Program,
    ReadTpl,
    Step,
    UpdateTpl,
    WriteTpl,
    truthy,
)

TERMINATED = -1


@dataclass(frozen=True)
class _State:
    mem: tuple[tuple[str, int], ...]
    positions: tuple[int, ...]
    envs: tuple[tuple[tuple[str, int], ...], ...]
    error: bool


def _initial(program: Program) -> _State:
    return _State(
        mem=tuple(program.shared_init),
        positions=tuple(0 for _ in program.threads),
        envs=tuple(tuple(t.registers) for t in program.threads),
        error=False,
    )


def _step(program: Program, state: _State, tid: int) -> _State:
    thread = program.threads[tid]
    pos = state.positions[tid]
    env = dict(state.envs[tid])
    mem = dict(state.mem)
    error = state.error
    stmt = thread.body[pos]

    if isinstance(stmt, Await):
        pos = pos - stmt.length if truthy(stmt.cond, env) else pos + 1
    else:
        assert isinstance(stmt, Step)
        tpl = stmt.event.fire(env)
        read_result = None
        if isinstance(tpl, ReadTpl):
            read_result = mem[tpl.loc]
        elif isinstance(tpl, WriteTpl):
            mem[tpl.loc] = tpl.value.eval(env)
        elif isinstance(tpl, UpdateTpl):
            read_result = mem[tpl.loc]
            written = tpl.write_value(read_result, env)
            if written is not None:
                mem[tpl.loc] = written
        elif isinstance(tpl, (FenceTpl, NopTpl)):
            pass
        elif isinstance(tpl, ErrorTpl):
            error = True
            pos = len(thread.body)  # the thread stops here
        else:  # pragma: no cover
            raise AssertionError(tpl)
        if not isinstance(tpl, ErrorTpl):
            env = stmt.update.apply(env, read_result)
            pos = pos + 1

    positions = list(state.positions)
    positions[tid] = TERMINATED if pos >= len(thread.body) else pos
    envs = list(state.envs)
    envs[tid] = tuple(sorted(env.items()))
    return _State(tuple(sorted(mem.items())), tuple(positions), tuple(envs), error)


def reachable_finals(program: Program) -> tuple[set[frozenset[tuple[str, int]]], bool]:
    """All reachable final memories under interleaving semantics.

    Returns ``(finals, any_error)`` where each final is a frozenset of
    ``(location, value)`` pairs.
    """
    for thread in program.threads:
        if any(isinstance(s, Await) for s in thread.body):
            raise ValueError("oracle only supports await-free programs")

    finals: set[frozenset[tuple[str, int]]] = set()
    any_error = False
    seen: set[_State] = set()
    stack = [_initial(program)]
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        runnable = [t for t, p in enumerate(state.positions) if p != TERMINATED]
        if not runnable:
            finals.add(frozenset(state.mem))
            any_error = any_error or state.error
            continue
        for tid in runnable:
            stack.append(_step(program, state, tid))
    return finals, any_error
