"""Built-in verification cases and the lock-client generator.

Each case is a surface-dialect program together with the expected verdict
per memory model.  The spinlock scenarios use fixed thread roles; node ids
are plain integer constants (ALICE = 1, BOB = 2, null = 0) held in
registers and compared against constants.  The queue-lock node fields are
flattened into one shared location per (node, field) pair.

Critical sections detect broken mutual exclusion by writing the thread's id
to a scratch location and asserting it reads back unchanged: any interleaved
write from another critical section shows up as a foreign id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lang import Program
from .surface import parse_program


@dataclass(frozen=True)
class Case:
    name: str
    source: str
    expected: dict  # model name -> verdict kind
    description: str = ""

    def program(self) -> Program:
        return parse_program(self.source)


def _cs_block(tid: int) -> str:
    """Critical-section body: id-stamp check plus a counter increment."""
    return f"""\
    store_rlx c, {tid}
    load_rlx chk, c
    assert chk == {tid}
    load_rlx s, x
    store_rlx x, s + 1
"""


MCS_PARTIAL = """\
# One path through a partial MCS-style handover: T1 waits for `locked`
# to be cleared, T2 waits for the queue flag `q` before clearing it.
shared locked = 0
shared q = 0

thread T1 [r1 = 0]:
    store_rlx locked, 1
    store_rel q, 1
    do:
        load_rlx r1, locked
    await_while r1 == 1
end

thread T2 [r2 = 0]:
    do:
        load_acq r2, q
    await_while r2 == 0
    store_rlx locked, 0
end
"""

MCS_PARTIAL_RLX = MCS_PARTIAL.replace("store_rel q", "store_rlx q").replace(
    "load_acq r2", "load_rlx r2"
)

MCS_PARTIAL_NOQ = """\
# The handover with the queue flag removed: T2 clears `locked` directly.
shared locked = 0

thread T1 [r1 = 0]:
    store_rlx locked, 1
    do:
        load_rlx r1, locked
    await_while r1 == 1
end

thread T2:
    store_rlx locked, 0
end
"""


def _ttas_thread(name: str, tid: int, attempts: int) -> str:
    lines = [f"thread {name} [r = 0, got = 0, prev = 1, chk = 0, s = 0]:"]
    for _ in range(attempts):
        lines += [
            "    do:",
            "        if got == 0:",
            "            load_rlx r, lock",
            "        end",
            "    await_while got == 0 and r == 1",
            "    if got == 0:",
            "        xchg_acq prev, lock, 1",
            "        if prev == 0:",
            "            let got = 1",
            "        end",
            "    end",
        ]
    lines.append(_cs_block(tid).rstrip("\n"))
    lines += ["    store_rel lock, 0", "end"]
    return "\n".join(lines) + "\n"


TTAS = (
    "# Test-and-test-and-set lock; the retry loop is unrolled (two threads,\n"
    "# one acquisition each, so two attempts suffice).\n"
    "shared lock = 0\nshared c = 0\nshared x = 0\n\n"
    + _ttas_thread("T1", 1, attempts=2)
    + "\n"
    + _ttas_thread("T2", 2, attempts=2)
)


def _ticket_thread(name: str, tid: int) -> str:
    return f"""\
thread {name} [t = 0, r = 0, chk = 0, s = 0]:
    faa_rlx t, next_ticket, 1
    do:
        load_acq r, owner
    await_while r != t
{_cs_block(tid)}    store_rel owner, t + 1
end
"""


TICKET = (
    "# Ticket lock: fetch-and-add a ticket, spin until `owner` reaches it.\n"
    "shared next_ticket = 0\nshared owner = 0\nshared c = 0\nshared x = 0\n\n"
    + _ticket_thread("T1", 1)
    + "\n"
    + _ticket_thread("T2", 2)
)


DPDK_MCS_BUG = """\
# MCS queue lock handover, flattened to the two-node scenario: Bob holds
# the lock, Alice enqueues behind him.  Alice's link-in store to Bob's
# next pointer is relaxed and Bob's poll of it is relaxed, so nothing
# orders Bob's clearing of alice_locked after Alice's setting of it.
shared tail = 2
shared alice_next = 0
shared bob_next = 0
shared alice_locked = 0

thread alice [prev = 0, r = 0]:
    store_rlx alice_next, 0
    store_rlx alice_locked, 1
    xchg_sc prev, tail, 1
    store_rlx bob_next, 1
    do:
        load_acq r, alice_locked
    await_while r == 1
end

thread bob [n = 0]:
    do:
        load_rlx n, bob_next
    await_while n == 0
    store_rel alice_locked, 0
end
"""

DPDK_MCS_FIXED = DPDK_MCS_BUG.replace(
    "Alice's link-in store to Bob's", "Alice's link-in store releases and"
).replace(
    "# next pointer is relaxed and Bob's poll of it is relaxed, so nothing\n"
    "# orders Bob's clearing of alice_locked after Alice's setting of it.",
    "# Bob's poll acquires, ordering the handover correctly.",
).replace("store_rlx bob_next, 1", "store_rel bob_next, 1").replace(
    "load_rlx n, bob_next", "load_acq n, bob_next"
)


HUAWEI_MCS_BUG = """\
# MCS variant with fence-based publication: Bob holds the lock and
# increments x in his critical section, then hands over to Alice.  Alice's
# spin read of her own flag is plain, with no acquire after the loop, so
# her critical section is not ordered after Bob's: both increments can
# read the initial x and the final count check fails.
shared tail = 2
shared alice_next = 0
shared bob_next = 0
shared alice_spin = 0
shared x = 0

thread alice [prev = 0, r = 0, s1 = 0, s2 = 0]:
    store_rlx alice_next, 0
    store_rlx alice_spin, 1
    fence_sc
    xchg_acq prev, tail, 1
    store_rlx bob_next, 1
    fence_sc
    do:
        load_rlx r, alice_spin
    await_while r == 1
    load_rlx s1, x
    store_rlx x, s1 + 1
    load_rlx s2, x
    assert s2 == 2
end

thread bob [n = 0, s = 0]:
    load_rlx s, x
    store_rlx x, s + 1
    do:
        load_rlx n, bob_next
    await_while n == 0
    fence_sc
    store_rlx alice_spin, 0
end
"""

HUAWEI_MCS_FIXED = HUAWEI_MCS_BUG.replace(
    "load_rlx r, alice_spin", "load_acq r, alice_spin"
).replace(
    "# spin read of her own flag is plain, with no acquire after the loop, so\n"
    "# her critical section is not ordered after Bob's: both increments can\n"
    "# read the initial x and the final count check fails.",
    "# spin read of her own flag acquires, ordering her critical section\n"
    "# after Bob's.",
)


STORE_BUFFERING = """\
# Store buffering with an observer: T2 records what it read of x in z
# (offset by one so "unwritten" is distinguishable).  Under an
# interleaving-based model T1 cannot see both its own read of y as 0 and
# z recording that T2 read x as 0; under the weak model it can.
shared x = 0
shared y = 0
shared z = 0

thread T1 [r1 = 0, r3 = 0]:
    store_rlx x, 1
    load_rlx r1, y
    load_rlx r3, z
    assert not (r1 == 0 and r3 == 1)
end

thread T2 [r2 = 0]:
    store_rlx y, 1
    load_rlx r2, x
    store_rlx z, r2 + 1
end
"""


def _cas_lock_thread(name: str, tid: int) -> str:
    return f"""\
thread {name} [got = 1, chk = 0, s = 0]:
    cas_acq got, val, 0, 1
    if got == 0:
{_indent(_cs_block(tid), 4)}        store_rel val, 0
    end
end
"""


def _indent(text: str, by: int) -> str:
    pad = " " * by
    return "".join(pad + line + "\n" for line in text.splitlines())


CAS_LOCK_FASTPATH = (
    "# Reduced queued-spinlock model: only the uncontended compare-and-swap\n"
    "# fast path of each thread (contenders simply skip their critical\n"
    "# section).  A deliberately approximate stand-in for the full lock.\n"
    "shared val = 0\nshared c = 0\nshared x = 0\n\n"
    + _cas_lock_thread("T1", 1)
    + "\n"
    + _cas_lock_thread("T2", 2)
)


def builtin_cases() -> list[Case]:
    return [
        Case("mcs-partial", MCS_PARTIAL, {"ramm": "success"},
             "handover with release/acquire on the queue flag"),
        Case("mcs-partial-rlx", MCS_PARTIAL_RLX, {"ramm": "at-violation"},
             "handover with the queue flag fully relaxed: T1 spins forever"),
        Case("mcs-partial-noq", MCS_PARTIAL_NOQ, {"ramm": "at-violation"},
             "handover variant without the queue flag: T2 may clear `locked` "
             "before T1 sets it, leaving T1 spinning on its own write"),
        Case("ttas", TTAS, {"ramm": "success"},
             "test-and-test-and-set lock, retry loop unrolled"),
        Case("ticket", TICKET, {"ramm": "success"}, "ticket lock"),
        Case("dpdk-mcs-bug", DPDK_MCS_BUG, {"ramm": "at-violation"},
             "queue-lock handover with a relaxed link-in store"),
        Case("dpdk-mcs-fixed", DPDK_MCS_FIXED, {"ramm": "success"},
             "queue-lock handover with release link-in / acquire poll"),
        Case("huawei-mcs-bug", HUAWEI_MCS_BUG, {"ramm": "safety-violation"},
             "fence-based queue lock missing an acquire after the spin"),
        Case("huawei-mcs-fixed", HUAWEI_MCS_FIXED, {"ramm": "success"},
             "fence-based queue lock with the acquiring spin read"),
        Case("store-buffering", STORE_BUFFERING,
             {"sc": "success", "ramm": "safety-violation"},
             "store-buffering litmus: weak outcome only under the weak model"),
        Case("cas-lock-fastpath", CAS_LOCK_FASTPATH, {"ramm": "success"},
             "approximate queued-spinlock fast path"),
    ]


def get_case(name: str) -> Case:
    for case in builtin_cases():
        if case.name == name:
            return case
    raise KeyError(name)


# ---------------------------------------------------------------------------
# Client generator
# ---------------------------------------------------------------------------


def generate_client(primitive: str, threads: int = 2, acquisitions: int = 1) -> str:
    """Surface source for ``threads`` threads each acquiring a lock
    ``acquisitions`` times with an id-stamp critical section."""
    if primitive == "ticket":
        parts = ["shared next_ticket = 0", "shared owner = 0", "shared c = 0", "shared x = 0", ""]
        for i in range(threads):
            body = [f"thread T{i + 1} [t = 0, r = 0, chk = 0, s = 0]:"]
            for _ in range(acquisitions):
                body += [
                    "    faa_rlx t, next_ticket, 1",
                    "    do:",
                    "        load_acq r, owner",
                    "    await_while r != t",
                    _cs_block(i + 1).rstrip("\n"),
                    "    store_rel owner, t + 1",
                ]
            body.append("end")
            parts.append("\n".join(body))
            parts.append("")
        return "\n".join(parts)
    if primitive == "ttas":
        if acquisitions != 1:
            raise ValueError("ttas clients support a single acquisition per thread")
        parts = ["shared lock = 0", "shared c = 0", "shared x = 0", ""]
        for i in range(threads):
            parts.append(_ttas_thread(f"T{i + 1}", i + 1, attempts=threads))
        return "\n".join(parts)
    if primitive == "cas":
        if acquisitions != 1:
            raise ValueError("cas clients support a single acquisition per thread")
        parts = ["shared val = 0", "shared c = 0", "shared x = 0", ""]
        for i in range(threads):
            parts.append(_cas_lock_thread(f"T{i + 1}", i + 1))
        return "\n".join(parts)
    raise ValueError(f"unknown primitive {primitive!r} (ticket, ttas, cas)")
