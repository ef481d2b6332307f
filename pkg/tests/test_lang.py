"""Core language: expressions, validation, lowering, serialization."""

import random

import pytest
from hypothesis import given, strategies as st

from awaitmc.lang import (
    Await,
    BinOp,
    Const,
    Mode,
    Not,
    Reg,
    ReadResult,
    ReadTpl,
    RmwKind,
    Step,
    UpdateTpl,
    WriteTpl,
    mode_leq,
    program_from_text,
    program_to_text,
    truthy,
    validate,
)
from awaitmc.surface import SurfaceError, parse_expr, parse_program

from gen_programs import random_program


# -- expressions ------------------------------------------------------------


def test_expr_eval_basics():
    env = {"a": 3, "b": 0}
    assert BinOp("+", Reg("a"), Const(4)).eval(env) == 7
    assert BinOp("==", Reg("b"), Const(0)).eval(env) == 1
    assert BinOp("and", Reg("a"), Reg("b")).eval(env) == 0
    assert Not(Reg("b")).eval(env) == 1
    assert ReadResult().eval(env, read_result=9) == 9
    with pytest.raises(ValueError):
        ReadResult().eval(env)


def test_parse_expr_precedence():
    env = {"r1": 2, "r2": 0}
    e = parse_expr("r1 == 2 and not (r2 == 1) or 0")
    assert truthy(e, env)
    assert parse_expr("1 + 2 * 3").eval({}) == 7
    assert parse_expr("r1 - 1").eval(env) == 1
    assert parse_expr("-1 + 2").eval({}) == 1


def test_mode_lattice():
    assert mode_leq(Mode.RLX, Mode.ACQ)
    assert mode_leq(Mode.REL, Mode.SC)
    assert mode_leq(Mode.ACQ, Mode.ACQ)
    assert not mode_leq(Mode.REL, Mode.ACQ)
    assert not mode_leq(Mode.ACQ, Mode.REL)
    assert not mode_leq(Mode.SC, Mode.REL)


# -- surface lowering -------------------------------------------------------


def test_if_lowering_guards_body():
    prog = parse_program(
        """
shared x = 0
thread T [r = 1]:
    if r == 1:
        store_rlx x, 5
    end
end
"""
    )
    # branch-flag assignment plus the guarded store
    body = prog.threads[0].body
    assert len(body) == 2
    store = body[1]
    assert isinstance(store, Step)
    guard, tpl = store.event.cases[0]
    assert isinstance(tpl, WriteTpl)
    assert guard != Const(1)  # guarded by the branch flag


def test_for_lowering_unrolls():
    prog = parse_program(
        """
shared x = 0
thread T [i = 0, s = 0]:
    for i in 0..3:
        let s = s + i
    end
    store_rlx x, s
end
"""
    )
    # init step + 3 unrolled bodies (increment folded in) + final store
    assert len(prog.threads[0].body) == 5
    from sc_oracle import reachable_finals

    finals, err = reachable_finals(prog)
    assert not err
    assert finals == {frozenset({("x", 3)})}


def test_await_only_top_level():
    with pytest.raises(SurfaceError):
        parse_program(
            """
shared x = 0
thread T [r = 0]:
    if r == 0:
        do:
            load_rlx r, x
        await_while r == 0
    end
end
"""
        )


def test_parse_errors():
    with pytest.raises(SurfaceError):
        parse_program("shared x = 0\nthread T []:\n    frobnicate x\nend\n")
    with pytest.raises(SurfaceError):
        parse_program("thread T []:\nend\nthread T []:\nend\n")


# -- validation -------------------------------------------------------------


def test_validate_undeclared_location():
    from awaitmc.lang import Program, Thread, simple_event, simple_update

    good = Program(
        (Thread("T", (("r", 0),),
                (Step(simple_event(ReadTpl("x", Mode.RLX)),
                      simple_update(("r", ReadResult()))),)),),
        (("x", 0),),
    )
    assert validate(good) == []
    bad = Program(
        (Thread("T", (("r", 0),),
                (Step(simple_event(ReadTpl("y", Mode.RLX)),
                      simple_update(("r", ReadResult()))),)),),
        (("x", 0),),
    )
    assert any("undeclared" in i for i in validate(bad))
    # the surface parser rejects the same program up front
    with pytest.raises(SurfaceError):
        parse_program("shared x = 0\nthread T [r = 0]:\n    load_rlx r, y\nend\n")


def test_validate_unassigned_register():
    from awaitmc.lang import Program, Thread, simple_event

    bad = Program(
        (Thread("T", (), (Step(simple_event(WriteTpl("x", Reg("q"), Mode.RLX))),)),),
        (("x", 0),),
    )
    assert any("unassigned" in i for i in validate(bad))
    with pytest.raises(SurfaceError):
        parse_program("shared x = 0\nthread T [r = 0]:\n    store_rlx x, q\nend\n")


# -- rmw write values -------------------------------------------------------


def test_update_write_values():
    env = {}
    faa = UpdateTpl("x", RmwKind.FAA, (Const(2),), Mode.RLX)
    assert faa.write_value(5, env) == 7
    cas = UpdateTpl("x", RmwKind.CAS, (Const(5), Const(9)), Mode.RLX)
    assert cas.write_value(5, env) == 9
    assert cas.write_value(4, env) is None
    xchg = UpdateTpl("x", RmwKind.XCHG, (Const(3),), Mode.RLX)
    assert xchg.write_value(5, env) == 3


# -- serialization ----------------------------------------------------------


def test_roundtrip_surface_program():
    prog = parse_program(
        """
shared x = 0
shared y = 1
thread T [r = 0]:
    do:
        load_acq r, x
    await_while r == 0
    cas_sc_acq r, y, 1, 2
    fence_sc
    assert r == 1
end
"""
    )
    assert program_from_text(program_to_text(prog)) == prog


@given(st.integers(min_value=0, max_value=10_000))
def test_roundtrip_random_programs(seed):
    prog = random_program(random.Random(seed))
    assert program_from_text(program_to_text(prog)) == prog
