"""Core representation of the tiny concurrent assembly-like input language.

A :class:`Program` is a fixed set of threads, each a straight-line list of
statements.  The only control flow that survives lowering is the backward
jump of an :class:`Await` statement; branches and bounded loops from the
surface syntax (see :mod:`awaitmc.surface`) are compiled into guarded
statements and unrolled sequences.

A :class:`Step` statement pairs a guarded *event template* (which shared
memory access, fence, no-op or error the step emits, as a function of the
local register state) with a guarded *register update* (how the local state
evolves, possibly using the value returned by a read).  An :class:`Await`
statement emits a bookkeeping no-op event and jumps back ``n`` statements
while its condition holds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence, Union

Value = int


class Mode(enum.Enum):
    """Access/fence ordering modes, ordered by the usual C11-style lattice.

    ``rlx`` is the bottom, ``sc`` the top; ``rel`` and ``acq`` are
    incomparable with each other.
    """

    RLX = "rlx"
    REL = "rel"
    ACQ = "acq"
    SC = "sc"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.value

    @property
    def strength(self) -> int:
        """Rank used for deterministic ordering; not a total order on modes."""
        return {Mode.RLX: 0, Mode.REL: 1, Mode.ACQ: 1, Mode.SC: 2}[self]


def mode_leq(a: Mode, b: Mode) -> bool:
    """Lattice order: ``a`` is no stronger than ``b``."""
    return a == b or a is Mode.RLX or b is Mode.SC


def is_release(mode: Mode) -> bool:
    return mode in (Mode.REL, Mode.SC)


def is_acquire(mode: Mode) -> bool:
    return mode in (Mode.ACQ, Mode.SC)


# ---------------------------------------------------------------------------
# Expressions over the local register state
# ---------------------------------------------------------------------------


class Expr:
    """Base class for register expressions.

    Expressions are evaluated against a register environment (a mapping from
    register names to integers).  The special :class:`ReadResult` leaf refers
    to the value returned by the read part of the current statement, if any.
    """

    def eval(self, env: Mapping[str, Value], read_result: Optional[Value] = None) -> Value:
        raise NotImplementedError

    def free_regs(self) -> frozenset[str]:
        raise NotImplementedError

    def uses_read_result(self) -> bool:
        return False


@dataclass(frozen=True)
class Const(Expr):
    value: Value

    def eval(self, env, read_result=None):
        return self.value

    def free_regs(self):
        return frozenset()

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Reg(Expr):
    name: str

    def eval(self, env, read_result=None):
        return env[self.name]

    def free_regs(self):
        return frozenset((self.name,))

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class ReadResult(Expr):
    """The value obtained by the read part of the enclosing statement."""

    def eval(self, env, read_result=None):
        if read_result is None:
            raise ValueError("statement has no read result")
        return read_result

    def free_regs(self):
        return frozenset()

    def uses_read_result(self):
        return True

    def __str__(self):
        return "$val"


_BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "and": lambda a, b: int(bool(a) and bool(b)),
    "or": lambda a, b: int(bool(a) or bool(b)),
    "|": lambda a, b: a | b,
    "&": lambda a, b: a & b,
}


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in _BINOPS:
            raise ValueError(f"unknown operator {self.op!r}")

    def eval(self, env, read_result=None):
        return _BINOPS[self.op](
            self.left.eval(env, read_result), self.right.eval(env, read_result)
        )

    def free_regs(self):
        return self.left.free_regs() | self.right.free_regs()

    def uses_read_result(self):
        return self.left.uses_read_result() or self.right.uses_read_result()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def eval(self, env, read_result=None):
        return int(not self.arg.eval(env, read_result))

    def free_regs(self):
        return self.arg.free_regs()

    def uses_read_result(self):
        return self.arg.uses_read_result()

    def __str__(self):
        return f"(not {self.arg})"


TRUE = Const(1)
FALSE = Const(0)


def truthy(e: Expr, env: Mapping[str, Value], read_result: Optional[Value] = None) -> bool:
    return bool(e.eval(env, read_result))


# ---------------------------------------------------------------------------
# Event templates
# ---------------------------------------------------------------------------


class RmwKind(enum.Enum):
    XCHG = "xchg"
    FAA = "faa"
    OR = "or"
    CAS = "cas"

    def __str__(self):  # pragma: no cover - trivial
        return self.value


@dataclass(frozen=True)
class ReadTpl:
    loc: str
    mode: Mode


@dataclass(frozen=True)
class WriteTpl:
    loc: str
    value: Expr
    mode: Mode


@dataclass(frozen=True)
class UpdateTpl:
    """Atomic read-modify-write.

    ``args`` holds one operand expression for xchg/faa/or and the pair
    (expected, new) for cas.  ``fail_mode`` is the ordering of the read-only
    event a failed cas degenerates to; for the other kinds it is unused.
    """

    loc: str
    kind: RmwKind
    args: tuple[Expr, ...]
    mode: Mode
    fail_mode: Mode = Mode.RLX

    def write_value(self, read_value: Value, env: Mapping[str, Value]) -> Optional[Value]:
        """The value the write part stores, or None if the rmw does not write
        (a cas whose expected value does not match)."""
        if self.kind is RmwKind.XCHG:
            return self.args[0].eval(env)
        if self.kind is RmwKind.FAA:
            return read_value + self.args[0].eval(env)
        if self.kind is RmwKind.OR:
            return read_value | self.args[0].eval(env)
        if self.kind is RmwKind.CAS:
            if read_value == self.args[0].eval(env):
                return self.args[1].eval(env)
            return None
        raise AssertionError(self.kind)


@dataclass(frozen=True)
class FenceTpl:
    mode: Mode


@dataclass(frozen=True)
class ErrorTpl:
    """Emits an error event: the program's safety property failed here."""


@dataclass(frozen=True)
class NopTpl:
    """Emits nothing observable (modelled as a relaxed fence event)."""


EventTemplate = Union[ReadTpl, WriteTpl, UpdateTpl, FenceTpl, ErrorTpl, NopTpl]


@dataclass(frozen=True)
class GuardedEvent:
    """A list of (guard, template) cases; the first true guard fires.

    The last guard must be the literal constant 1 so the case split is
    syntactically exhaustive.
    """

    cases: tuple[tuple[Expr, EventTemplate], ...]

    def __post_init__(self):
        if not self.cases:
            raise ValueError("guarded event needs at least one case")
        if self.cases[-1][0] != TRUE:
            raise ValueError("last event guard must be the literal 1")

    def fire(self, env: Mapping[str, Value]) -> EventTemplate:
        for guard, tpl in self.cases:
            if truthy(guard, env):
                return tpl
        raise AssertionError("unreachable: exhaustive guards")

    def free_regs(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for guard, tpl in self.cases:
            out |= guard.free_regs()
            for e in _tpl_exprs(tpl):
                out |= e.free_regs()
        return out

    def templates(self) -> Iterator[EventTemplate]:
        for _, tpl in self.cases:
            yield tpl


def _tpl_exprs(tpl: EventTemplate) -> tuple[Expr, ...]:
    if isinstance(tpl, WriteTpl):
        return (tpl.value,)
    if isinstance(tpl, UpdateTpl):
        return tpl.args
    return ()


@dataclass(frozen=True)
class GuardedUpdate:
    """Guarded register assignments; the first true guard fires.

    Each case is a tuple of (register, expression) assignments applied
    simultaneously.  Expressions may refer to the read result of the
    statement's read/rmw event.  An empty ``cases`` means the state is
    unchanged.
    """

    cases: tuple[tuple[Expr, tuple[tuple[str, Expr], ...]], ...] = ()

    def __post_init__(self):
        if self.cases and self.cases[-1][0] != TRUE:
            raise ValueError("last update guard must be the literal 1")
        for _, assigns in self.cases:
            regs = [r for r, _ in assigns]
            if len(regs) != len(set(regs)):
                raise ValueError("duplicate register in simultaneous assignment")

    def apply(
        self, env: Mapping[str, Value], read_result: Optional[Value] = None
    ) -> dict[str, Value]:
        new = dict(env)
        for guard, assigns in self.cases:
            if truthy(guard, env, read_result):
                for reg, expr in assigns:
                    new[reg] = expr.eval(env, read_result)
                return new
        return new

    def domain(self, env: Mapping[str, Value], read_result: Optional[Value] = None) -> frozenset[str]:
        """Registers actually assigned when fired against ``env``."""
        for guard, assigns in self.cases:
            if truthy(guard, env, read_result):
                return frozenset(r for r, _ in assigns)
        return frozenset()

    def free_regs(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for guard, assigns in self.cases:
            out |= guard.free_regs()
            for _, expr in assigns:
                out |= expr.free_regs()
        return out

    def assigned_regs(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for _, assigns in self.cases:
            out |= frozenset(r for r, _ in assigns)
        return out


NO_UPDATE = GuardedUpdate(())


# ---------------------------------------------------------------------------
# Statements, threads, programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    event: GuardedEvent
    update: GuardedUpdate = NO_UPDATE


@dataclass(frozen=True)
class Await:
    """Jump back ``length`` statements while ``cond`` holds.

    The statement itself emits a relaxed-fence bookkeeping event.  The
    ``length`` statements preceding it form the loop body.
    """

    length: int
    cond: Expr


Statement = Union[Step, Await]


@dataclass(frozen=True)
class Thread:
    name: str
    registers: tuple[tuple[str, Value], ...]
    body: tuple[Statement, ...]

    def init_env(self) -> dict[str, Value]:
        return dict(self.registers)


@dataclass(frozen=True)
class Program:
    threads: tuple[Thread, ...]
    shared_init: tuple[tuple[str, Value], ...]

    @property
    def locations(self) -> tuple[str, ...]:
        return tuple(loc for loc, _ in self.shared_init)

    def shared_init_map(self) -> dict[str, Value]:
        return dict(self.shared_init)

    def total_statements(self) -> int:
        return sum(len(t.body) for t in self.threads)


def simple_event(tpl: EventTemplate) -> GuardedEvent:
    return GuardedEvent(((TRUE, tpl),))


def simple_update(*assigns: tuple[str, Expr]) -> GuardedUpdate:
    if not assigns:
        return NO_UPDATE
    return GuardedUpdate(((TRUE, tuple(assigns)),))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _statement_locations(stmt: Statement) -> Iterator[str]:
    if isinstance(stmt, Step):
        for tpl in stmt.event.templates():
            if isinstance(tpl, (ReadTpl, WriteTpl, UpdateTpl)):
                yield tpl.loc


def validate(program: Program) -> list[str]:
    """Return a list of human-readable diagnostics; empty means valid.

    Checks: all accessed locations are declared with initial values, register
    reads cannot precede any possible assignment or declaration, await bodies
    stay within the thread and do not contain further awaits, and guard lists
    end in a literal-true catch-all (enforced structurally on construction).
    """
    issues: list[str] = []
    declared = {loc for loc, _ in program.shared_init}
    seen_locs = set()
    names = [t.name for t in program.threads]
    if len(names) != len(set(names)):
        issues.append("duplicate thread names")
    for t in program.threads:
        known = {r for r, _ in t.registers}
        for i, stmt in enumerate(t.body):
            where = f"{t.name}[{i}]"
            for loc in _statement_locations(stmt):
                seen_locs.add(loc)
                if loc not in declared:
                    issues.append(f"{where}: access to undeclared location {loc!r}")
            if isinstance(stmt, Await):
                if stmt.length > i:
                    issues.append(f"{where}: await body extends before start of thread")
                for j in range(max(0, i - stmt.length), i):
                    if isinstance(t.body[j], Await):
                        issues.append(f"{where}: nested await (body contains await at {j})")
                used = stmt.cond.free_regs()
                if stmt.cond.uses_read_result():
                    issues.append(f"{where}: await condition cannot use a read result")
                bad = used - known
                if bad:
                    issues.append(f"{where}: await reads unassigned registers {sorted(bad)}")
            else:
                used = stmt.event.free_regs() | stmt.update.free_regs()
                bad = used - known
                if bad:
                    issues.append(f"{where}: reads unassigned registers {sorted(bad)}")
                known |= stmt.update.assigned_regs()
    for loc in declared - seen_locs:
        # Unused declarations are fine; initial writes still appear.
        pass
    return issues


# ---------------------------------------------------------------------------
# Serialization (stable, machine-parseable pretty form)
# ---------------------------------------------------------------------------


def _expr_to_obj(e: Expr):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Reg):
        return {"reg": e.name}
    if isinstance(e, ReadResult):
        return {"val": True}
    if isinstance(e, BinOp):
        return {"op": e.op, "l": _expr_to_obj(e.left), "r": _expr_to_obj(e.right)}
    if isinstance(e, Not):
        return {"not": _expr_to_obj(e.arg)}
    raise TypeError(type(e))


def _expr_from_obj(o) -> Expr:
    if isinstance(o, int):
        return Const(o)
    if "reg" in o:
        return Reg(o["reg"])
    if "val" in o:
        return ReadResult()
    if "op" in o:
        return BinOp(o["op"], _expr_from_obj(o["l"]), _expr_from_obj(o["r"]))
    if "not" in o:
        return Not(_expr_from_obj(o["not"]))
    raise ValueError(o)


def _tpl_to_obj(tpl: EventTemplate):
    if isinstance(tpl, ReadTpl):
        return {"kind": "read", "loc": tpl.loc, "mode": tpl.mode.value}
    if isinstance(tpl, WriteTpl):
        return {"kind": "write", "loc": tpl.loc, "mode": tpl.mode.value,
                "value": _expr_to_obj(tpl.value)}
    if isinstance(tpl, UpdateTpl):
        return {"kind": "update", "loc": tpl.loc, "mode": tpl.mode.value,
                "rmw": tpl.kind.value, "fail_mode": tpl.fail_mode.value,
                "args": [_expr_to_obj(a) for a in tpl.args]}
    if isinstance(tpl, FenceTpl):
        return {"kind": "fence", "mode": tpl.mode.value}
    if isinstance(tpl, ErrorTpl):
        return {"kind": "error"}
    if isinstance(tpl, NopTpl):
        return {"kind": "nop"}
    raise TypeError(type(tpl))


def _tpl_from_obj(o) -> EventTemplate:
    kind = o["kind"]
    if kind == "read":
        return ReadTpl(o["loc"], Mode(o["mode"]))
    if kind == "write":
        return WriteTpl(o["loc"], _expr_from_obj(o["value"]), Mode(o["mode"]))
    if kind == "update":
        return UpdateTpl(o["loc"], RmwKind(o["rmw"]),
                         tuple(_expr_from_obj(a) for a in o["args"]),
                         Mode(o["mode"]), Mode(o["fail_mode"]))
    if kind == "fence":
        return FenceTpl(Mode(o["mode"]))
    if kind == "error":
        return ErrorTpl()
    if kind == "nop":
        return NopTpl()
    raise ValueError(kind)


def program_to_obj(program: Program) -> dict:
    def stmt_obj(stmt: Statement):
        if isinstance(stmt, Await):
            return {"await": {"length": stmt.length, "cond": _expr_to_obj(stmt.cond)}}
        return {
            "step": {
                "event": [[_expr_to_obj(g), _tpl_to_obj(t)] for g, t in stmt.event.cases],
                "update": [
                    [_expr_to_obj(g), [[r, _expr_to_obj(e)] for r, e in assigns]]
                    for g, assigns in stmt.update.cases
                ],
            }
        }

    return {
        "shared": [[loc, v] for loc, v in program.shared_init],
        "threads": [
            {
                "name": t.name,
                "registers": [[r, v] for r, v in t.registers],
                "body": [stmt_obj(s) for s in t.body],
            }
            for t in program.threads
        ],
    }


def program_from_obj(obj: dict) -> Program:
    def stmt_from(o) -> Statement:
        if "await" in o:
            a = o["await"]
            return Await(a["length"], _expr_from_obj(a["cond"]))
        s = o["step"]
        event = GuardedEvent(tuple((_expr_from_obj(g), _tpl_from_obj(t)) for g, t in s["event"]))
        update = GuardedUpdate(
            tuple(
                (_expr_from_obj(g), tuple((r, _expr_from_obj(e)) for r, e in assigns))
                for g, assigns in s["update"]
            )
        )
        return Step(event, update)

    return Program(
        threads=tuple(
            Thread(
                name=t["name"],
                registers=tuple((r, v) for r, v in t["registers"]),
                body=tuple(stmt_from(s) for s in t["body"]),
            )
            for t in obj["threads"]
        ),
        shared_init=tuple((loc, v) for loc, v in obj["shared"]),
    )


def program_to_text(program: Program) -> str:
    """Stable serialization of the lowered core form (JSON)."""
    import json

    return json.dumps(program_to_obj(program), indent=1, sort_keys=False) + "\n"


def program_from_text(text: str) -> Program:
    import json

    return program_from_obj(json.loads(text))


def pretty_program(program: Program) -> str:
    """Human-readable listing of the lowered core form (display only)."""
    lines = [f"shared {loc} = {v}" for loc, v in program.shared_init]
    for t in program.threads:
        regs = ", ".join(f"{r}={v}" for r, v in t.registers)
        lines.append(f"thread {t.name} [{regs}]")
        for i, stmt in enumerate(t.body):
            if isinstance(stmt, Await):
                lines.append(f"  {i:3d}: await({stmt.length}) while {stmt.cond}")
                continue
            ev = " | ".join(f"{g} -> {_pretty_tpl(tpl)}" for g, tpl in stmt.event.cases)
            up = " | ".join(
                f"{g} -> {{{', '.join(f'{r} := {e}' for r, e in assigns)}}}"
                for g, assigns in stmt.update.cases
            )
            lines.append(f"  {i:3d}: {ev}" + (f"   ; {up}" if up else ""))
    return "\n".join(lines) + "\n"


def _pretty_tpl(tpl: EventTemplate) -> str:
    if isinstance(tpl, ReadTpl):
        return f"R^{tpl.mode}({tpl.loc})"
    if isinstance(tpl, WriteTpl):
        return f"W^{tpl.mode}({tpl.loc}, {tpl.value})"
    if isinstance(tpl, UpdateTpl):
        args = ", ".join(str(a) for a in tpl.args)
        return f"U^{tpl.mode}[{tpl.kind}]({tpl.loc}, {args})"
    if isinstance(tpl, FenceTpl):
        return f"F^{tpl.mode}"
    if isinstance(tpl, ErrorTpl):
        return "ERROR"
    if isinstance(tpl, NopTpl):
        return "NOP"
    raise TypeError(type(tpl))
