"""Parser and lowering for the human-writable surface dialect.

The surface form is line-oriented::

    shared locked = 0

    thread T1 [r1 = 0]:
        store_rel locked, 1
        do:
            load_acq r1, locked
        await_while r1 == 1
        if r1 == 0:
            store_rlx locked, 2
        end
    end

Statements: ``load_m r, loc`` / ``store_m loc, e`` / ``xchg_m r, loc, e`` /
``faa_m r, loc, e`` / ``or_m r, loc, e`` / ``cas_m[_mf] r, loc, exp, new`` /
``fence_m`` / ``let r = e`` / ``assert e`` / ``nop`` / ``do:`` ...
``await_while e`` / ``if e:`` ... [``else:`` ...] ``end`` /
``for r in a..b:`` ... ``end``  (``m`` one of rlx/rel/acq/sc).

Lowering produces the straight-line core form: branches become guarded
statements driven by a synthesized branch register, bounded ``for`` loops
are unrolled with the increment folded into each iteration's last step, and
``do``/``await_while`` becomes the body steps followed by an ``Await``.
Awaits must appear at thread top level (no nesting, no awaits under ``if``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .lang import (
    Await,
    BinOp,
    Const,
    ErrorTpl,
    Expr,
    FenceTpl,
    GuardedEvent,
    GuardedUpdate,
    Mode,
    NopTpl,
    Not,
    NO_UPDATE,
    Program,
    ReadResult,
    ReadTpl,
    Reg,
    RmwKind,
    Statement,
    Step,
    Thread,
    TRUE,
    UpdateTpl,
    WriteTpl,
    validate,
)


class SurfaceError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# Expression parsing (precedence climbing)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<=|>=|<|>|\+|-|\*|\||&|\(|\)))"
)

_PRECEDENCE = [
    ("or",),
    ("and",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("|", "&"),
    ("+", "-"),
    ("*",),
]


def _tokenize(src: str, line: Optional[int]) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            if src[pos:].strip():
                raise SurfaceError(f"cannot tokenize {src[pos:].strip()!r}", line)
            break
        tokens.append(m.group(m.lastgroup))
        pos = m.end()
    return tokens


class _ExprParser:
    def __init__(self, tokens: list[str], line: Optional[int]):
        self.tokens = tokens
        self.i = 0
        self.line = line

    def peek(self) -> Optional[str]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise SurfaceError("unexpected end of expression", self.line)
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self._binary(0)
        if self.peek() is not None:
            raise SurfaceError(f"trailing tokens after expression: {self.peek()!r}", self.line)
        return e

    def _binary(self, level: int) -> Expr:
        if level >= len(_PRECEDENCE):
            return self._unary()
        left = self._binary(level + 1)
        while self.peek() in _PRECEDENCE[level]:
            op = self.next()
            right = self._binary(level + 1)
            left = BinOp(op, left, right)
        return left

    def _unary(self) -> Expr:
        tok = self.peek()
        if tok == "not":
            self.next()
            return Not(self._unary())
        if tok == "-":
            self.next()
            inner = self._unary()
            return BinOp("-", Const(0), inner)
        return self._atom()

    def _atom(self) -> Expr:
        tok = self.next()
        if tok == "(":
            e = self._binary(0)
            if self.next() != ")":
                raise SurfaceError("missing closing parenthesis", self.line)
            return e
        if re.fullmatch(r"-?\d+", tok):
            return Const(int(tok))
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            return Reg(tok)
        raise SurfaceError(f"unexpected token {tok!r} in expression", self.line)


def parse_expr(src: str, line: Optional[int] = None) -> Expr:
    return _ExprParser(_tokenize(src, line), line).parse()


# ---------------------------------------------------------------------------
# Lowering helpers
# ---------------------------------------------------------------------------


def _conj(a: Optional[Expr], b: Expr) -> Expr:
    return b if a is None else BinOp("and", a, b)


def _guarded_event(guard: Optional[Expr], tpl) -> GuardedEvent:
    if guard is None:
        return GuardedEvent(((TRUE, tpl),))
    return GuardedEvent(((guard, tpl), (TRUE, NopTpl())))


def _guarded_update(guard: Optional[Expr], assigns: tuple[tuple[str, Expr], ...]) -> GuardedUpdate:
    if not assigns:
        return NO_UPDATE
    if guard is None:
        return GuardedUpdate(((TRUE, assigns),))
    return GuardedUpdate(((guard, assigns), (TRUE, ())))


_MODES = {m.value: m for m in Mode}


def _split_mnemonic(word: str, line: int) -> tuple[str, list[Mode]]:
    parts = word.split("_")
    modes = []
    while len(parts) > 1 and parts[-1] in _MODES:
        modes.insert(0, _MODES[parts[-1]])
        parts.pop()
    return "_".join(parts), modes


@dataclass
class _Ctx:
    lines: list[tuple[int, str]]
    pos: int = 0
    fresh: int = 0

    def done(self) -> bool:
        return self.pos >= len(self.lines)

    def peek(self) -> tuple[int, str]:
        return self.lines[self.pos]

    def take(self) -> tuple[int, str]:
        out = self.lines[self.pos]
        self.pos += 1
        return out


def _merge_increment(stmt: Statement, reg: str, guard: Optional[Expr]) -> Optional[Statement]:
    """Fold ``reg := reg + 1`` (under guard) into a step's update if possible."""
    if not isinstance(stmt, Step):
        return None
    inc = (reg, BinOp("+", Reg(reg), Const(1)))
    up = stmt.update
    if up == NO_UPDATE:
        return Step(stmt.event, _guarded_update(guard, (inc,)))
    if guard is None and len(up.cases) == 1 and up.cases[0][0] == TRUE:
        g, assigns = up.cases[0]
        if reg in (r for r, _ in assigns):
            return None
        return Step(stmt.event, GuardedUpdate(((g, assigns + (inc,)),)))
    if (
        guard is not None
        and len(up.cases) == 2
        and up.cases[0][0] == guard
        and up.cases[1] == (TRUE, ())
        and reg not in (r for r, _ in up.cases[0][1])
    ):
        return Step(stmt.event, GuardedUpdate(((guard, up.cases[0][1] + (inc,)), (TRUE, ()))))
    return None


# ---------------------------------------------------------------------------
# Statement-block lowering
# ---------------------------------------------------------------------------

_BLOCK_ENDERS = ("end", "else:", "await_while")


def _lower_block(
    ctx: _Ctx,
    guard: Optional[Expr],
    out: list[Statement],
    synth_regs: list[tuple[str, int]],
    top_level: bool,
) -> None:
    """Lower statements until a block terminator; terminator is not consumed."""
    while not ctx.done():
        lineno, text = ctx.peek()
        head = text.split(None, 1)[0]
        if head in ("end", "else:") or head.startswith("await_while"):
            return
        ctx.take()
        rest = text[len(head):].strip()

        if head == "do:":
            if not top_level:
                raise SurfaceError("await loops must be at thread top level", lineno)
            body: list[Statement] = []
            _lower_block(ctx, guard, body, synth_regs, top_level=False)
            if ctx.done():
                raise SurfaceError("do: block missing await_while", lineno)
            endline, endtext = ctx.take()
            if not endtext.startswith("await_while"):
                raise SurfaceError("do: block must end with await_while", endline)
            cond = parse_expr(endtext[len("await_while"):].strip(), endline)
            out.extend(body)
            out.append(Await(len(body), cond))
            continue

        if head == "if":
            if not rest.endswith(":"):
                raise SurfaceError("if statement must end with ':'", lineno)
            cond = parse_expr(rest[:-1], lineno)
            breg = f"b{ctx.fresh}_"
            ctx.fresh += 1
            synth_regs.append((breg, 0))
            out.append(
                Step(
                    _guarded_event(None, NopTpl()),
                    _guarded_update(guard, ((breg, cond),)),
                )
            )
            then_guard = _conj(guard, BinOp("!=", Reg(breg), Const(0)))
            _lower_block(ctx, then_guard, out, synth_regs, top_level=False)
            if ctx.done():
                raise SurfaceError("if block missing end", lineno)
            endline, endtext = ctx.take()
            if endtext == "else:":
                else_guard = _conj(guard, BinOp("==", Reg(breg), Const(0)))
                _lower_block(ctx, else_guard, out, synth_regs, top_level=False)
                if ctx.done():
                    raise SurfaceError("else block missing end", lineno)
                endline, endtext = ctx.take()
            if endtext != "end":
                raise SurfaceError(f"expected end, got {endtext!r}", endline)
            continue

        if head == "for":
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s+in\s+(-?\d+)\s*\.\.\s*(-?\d+)\s*:", rest)
            if not m:
                raise SurfaceError("for syntax: for r in a..b:", lineno)
            reg, lo, hi = m.group(1), int(m.group(2)), int(m.group(3))
            if hi < lo:
                raise SurfaceError("empty or negative for range", lineno)
            body = []
            _lower_block(ctx, guard, body, synth_regs, top_level=False)
            if ctx.done() or ctx.take()[1] != "end":
                raise SurfaceError("for block missing end", lineno)
            out.append(
                Step(_guarded_event(None, NopTpl()), _guarded_update(guard, ((reg, Const(lo)),)))
            )
            for _ in range(hi - lo):
                iteration = list(body)
                merged = _merge_increment(iteration[-1], reg, guard) if iteration else None
                if merged is not None:
                    iteration[-1] = merged
                else:
                    iteration.append(
                        Step(
                            _guarded_event(None, NopTpl()),
                            _guarded_update(guard, ((reg, BinOp("+", Reg(reg), Const(1))),)),
                        )
                    )
                out.extend(iteration)
            continue

        out.append(_lower_simple(head, rest, guard, lineno))


def _lower_simple(head: str, rest: str, guard: Optional[Expr], lineno: int) -> Statement:
    if head == "nop":
        return Step(_guarded_event(None, NopTpl()))
    if head == "let":
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)", rest)
        if not m:
            raise SurfaceError("let syntax: let r = expr", lineno)
        return Step(
            _guarded_event(None, NopTpl()),
            _guarded_update(guard, ((m.group(1), parse_expr(m.group(2), lineno)),)),
        )
    if head == "assert":
        cond = parse_expr(rest, lineno)
        fail = _conj(guard, Not(cond))
        return Step(GuardedEvent(((fail, ErrorTpl()), (TRUE, NopTpl()))))

    name, modes = _split_mnemonic(head, lineno)
    ops = [p.strip() for p in rest.split(",")] if rest else []

    if name == "fence":
        if len(modes) != 1 or ops:
            raise SurfaceError("fence syntax: fence_m", lineno)
        return Step(_guarded_event(guard, FenceTpl(modes[0])))

    if name == "load":
        if len(modes) != 1 or len(ops) != 2:
            raise SurfaceError("load syntax: load_m r, loc", lineno)
        reg, loc = ops
        return Step(
            _guarded_event(guard, ReadTpl(loc, modes[0])),
            _guarded_update(guard, ((reg, ReadResult()),)),
        )

    if name == "store":
        if len(modes) != 1 or len(ops) != 2:
            raise SurfaceError("store syntax: store_m loc, expr", lineno)
        loc, value = ops
        return Step(_guarded_event(guard, WriteTpl(loc, parse_expr(value, lineno), modes[0])))

    if name in ("xchg", "faa", "or"):
        if len(modes) != 1 or len(ops) != 3:
            raise SurfaceError(f"{name} syntax: {name}_m r, loc, expr", lineno)
        reg, loc, arg = ops
        tpl = UpdateTpl(loc, RmwKind(name), (parse_expr(arg, lineno),), modes[0])
        return Step(
            _guarded_event(guard, tpl),
            _guarded_update(guard, ((reg, ReadResult()),)),
        )

    if name == "cas":
        if len(modes) not in (1, 2) or len(ops) != 4:
            raise SurfaceError("cas syntax: cas_m[_mf] r, loc, expected, new", lineno)
        reg, loc, expected, new = ops
        fail_mode = modes[1] if len(modes) == 2 else Mode.RLX
        tpl = UpdateTpl(
            loc,
            RmwKind.CAS,
            (parse_expr(expected, lineno), parse_expr(new, lineno)),
            modes[0],
            fail_mode,
        )
        return Step(
            _guarded_event(guard, tpl),
            _guarded_update(guard, ((reg, ReadResult()),)),
        )

    raise SurfaceError(f"unknown statement {head!r}", lineno)


# ---------------------------------------------------------------------------
# Top level
# ---------------------------------------------------------------------------


def parse_program(source: str) -> Program:
    """Parse and lower a surface-dialect program; raises SurfaceError."""
    raw = []
    for i, line in enumerate(source.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            raw.append((i, stripped))

    shared: list[tuple[str, int]] = []
    threads: list[Thread] = []
    pos = 0
    while pos < len(raw):
        lineno, text = raw[pos]
        m = re.fullmatch(r"shared\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?\d+)", text)
        if m:
            shared.append((m.group(1), int(m.group(2))))
            pos += 1
            continue
        m = re.fullmatch(r"thread\s+([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[(.*)\])?\s*:", text)
        if m:
            name = m.group(1)
            regs: list[tuple[str, int]] = []
            if m.group(2):
                for item in m.group(2).split(","):
                    rm = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?\d+)\s*", item)
                    if not rm:
                        raise SurfaceError(f"bad register declaration {item!r}", lineno)
                    regs.append((rm.group(1), int(rm.group(2))))
            pos += 1
            body_lines = []
            depth = 1
            while pos < len(raw):
                _, t = raw[pos]
                if t.endswith(":") and t.split(None, 1)[0] in ("if", "for") or t == "do:":
                    depth += 1
                elif t == "end":
                    depth -= 1
                    if depth == 0:
                        break
                elif t.startswith("await_while"):
                    depth -= 1
                body_lines.append(raw[pos])
                pos += 1
            if pos >= len(raw):
                raise SurfaceError(f"thread {name} missing end", lineno)
            pos += 1  # consume 'end'
            ctx = _Ctx(body_lines)
            out: list[Statement] = []
            synth: list[tuple[str, int]] = []
            _lower_block(ctx, None, out, synth, top_level=True)
            if not ctx.done():
                bad_line, bad_text = ctx.peek()
                raise SurfaceError(f"unexpected {bad_text!r}", bad_line)
            threads.append(Thread(name, tuple(regs) + tuple(synth), tuple(out)))
            continue
        raise SurfaceError(f"expected shared declaration or thread block, got {text!r}", lineno)

    program = Program(tuple(threads), tuple(shared))
    issues = validate(program)
    if issues:
        raise SurfaceError("invalid program: " + "; ".join(issues))
    return program
