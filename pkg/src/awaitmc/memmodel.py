"""Consistency predicates over execution graphs.

Two models are provided:

* ``sc`` — sequential consistency, decided by brute-force search for a
  single interleaving that respects program order, makes every read return
  the latest write to its location, and consumes each location's writes in
  modification order.  Deliberately simple; it doubles as an oracle for the
  weaker model.

* ``ramm`` — a release/acquire-style axiomatic model: per-location
  coherence, rmw atomicity, irreflexive happens-before, a global order over
  sc accesses, and the extra path rule forbidding cycles of the shape
  po;[W^rel];rf;[R^acq];po;mo.

Reads whose source is still the placeholder constrain nothing in either
model.
"""

from __future__ import annotations

from typing import Optional

from .graph import (
    INIT_THREAD,
    ErrorLabel,
    EventId,
    ExecutionGraph,
    FenceLabel,
    InitLabel,
    ReadLabel,
    UpdateLabel,
    WriteLabel,
    is_read,
    is_write,
    label_mode,
    mem_loc,
    read_value,
    written_value,
)
from .lang import Mode, is_acquire, is_release


# ---------------------------------------------------------------------------
# Sequential consistency by interleaving search
# ---------------------------------------------------------------------------


def cons_sc(g: ExecutionGraph) -> bool:
    """Is there a total order of program events witnessing the graph under SC?

    State search over (next event index per thread); because writes must be
    consumed in modification order, the memory contents are a function of the
    per-thread positions, so visited position vectors can be memoized.
    """
    tids = g.thread_ids()
    lens = [g.thread_len(t) for t in tids]
    mo_index = {loc: {e: i for i, e in enumerate(order)} for loc, order in g.mo.items()}

    def consumed_writes(pos: tuple[int, ...]) -> dict[str, int]:
        """How many mo slots are used per location, given thread positions."""
        used = {loc: 1 for loc in g.mo}  # initializing writes
        for ti, t in enumerate(tids):
            for i in range(pos[ti]):
                label = g.events[(t, i)]
                if is_write(label):
                    used[mem_loc(label)] += 1
        return used

    seen: set[tuple[int, ...]] = set()

    def step(pos: tuple[int, ...]) -> bool:
        if all(p == n for p, n in zip(pos, lens)):
            return True
        if pos in seen:
            return False
        seen.add(pos)
        used = consumed_writes(pos)
        for ti, t in enumerate(tids):
            if pos[ti] >= lens[ti]:
                continue
            eid = (t, pos[ti])
            label = g.events[eid]
            ok = True
            if is_read(label) and g.rf.get(eid) is not None:
                loc = mem_loc(label)
                # latest write = last consumed mo slot of this location
                if g.mo[loc][used[loc] - 1] != g.rf[eid]:
                    ok = False
            if ok and is_write(label):
                loc = mem_loc(label)
                if mo_index[loc][eid] != used[loc]:
                    ok = False
            if ok:
                nxt = list(pos)
                nxt[ti] += 1
                if step(tuple(nxt)):
                    return True
        return False

    return step(tuple(0 for _ in tids))


# ---------------------------------------------------------------------------
# Release/acquire axiomatic model
# ---------------------------------------------------------------------------


def _fr_edges(g: ExecutionGraph) -> list[tuple[EventId, EventId]]:
    """from-read: read -> every write mo-after the read's source."""
    out = []
    for r, w in g.rf.items():
        if w is None:
            continue
        loc = mem_loc(g.events[r])
        order = g.mo[loc]
        i = order.index(w)
        for later in order[i + 1 :]:
            if later != r:  # an rmw does not fr-precede its own write part
                out.append((r, later))
    return out


def _cyclic(nodes: list[EventId], edges: list[tuple[EventId, EventId]]) -> bool:
    succ: dict[EventId, list[EventId]] = {n: [] for n in nodes}
    for a, b in edges:
        if a in succ and b in succ:
            succ[a].append(b)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    for root in nodes:
        if color[root] != WHITE:
            continue
        stack: list[tuple[EventId, int]] = [(root, 0)]
        color[root] = GREY
        while stack:
            n, i = stack[-1]
            if i < len(succ[n]):
                stack[-1] = (n, i + 1)
                m = succ[n][i]
                if color[m] == GREY:
                    return True
                if color[m] == WHITE:
                    color[m] = GREY
                    stack.append((m, 0))
            else:
                color[n] = BLACK
                stack.pop()
    return False


def _coherent(g: ExecutionGraph, hb) -> bool:
    fr = _fr_edges(g)
    for loc, order in g.mo.items():
        nodes = [e for e, l in g.events.items() if mem_loc(l) == loc]
        # drop unresolved reads: they constrain nothing
        nodes = [e for e in nodes if not (is_read(g.events[e]) and g.rf.get(e) is None)]
        node_set = set(nodes)
        edges: list[tuple[EventId, EventId]] = []
        edges.extend(zip(order, order[1:]))
        for r, w in g.rf.items():
            if w is not None and r in node_set and mem_loc(g.events[r]) == loc:
                edges.append((w, r))
        edges.extend((a, b) for a, b in fr if mem_loc(g.events[a]) == loc)
        for a in nodes:
            for b in nodes:
                if a != b and b in hb[a]:
                    edges.append((a, b))
        if _cyclic(nodes, edges):
            return False
    return True


def _atomic(g: ExecutionGraph) -> bool:
    for r, w in g.rf.items():
        label = g.events[r]
        if not isinstance(label, UpdateLabel) or label.write_value is None or w is None:
            continue
        order = g.mo[label.loc]
        if order.index(r) != order.index(w) + 1:
            return False
    return True


def _sc_order_exists(g: ExecutionGraph, hb) -> bool:
    """A total order over sc events extending hb and per-location coherence
    exists iff their union restricted to sc events is acyclic."""
    sc_events = [e for e, l in g.events.items() if label_mode(l) is Mode.SC]
    if len(sc_events) < 2:
        return True
    sc_set = set(sc_events)
    edges = []
    for a in sc_events:
        for b in hb[a]:
            if b in sc_set:
                edges.append((a, b))
    for loc, order in g.mo.items():
        for i, a in enumerate(order):
            for b in order[i + 1 :]:
                if a in sc_set and b in sc_set:
                    edges.append((a, b))
    for r, w in g.rf.items():
        if w is not None and r in sc_set and w in sc_set:
            edges.append((w, r))
    for a, b in _fr_edges(g):
        if a in sc_set and b in sc_set:
            edges.append((a, b))
    return not _cyclic(sc_events, edges)


def _no_rel_acq_mo_cycle(g: ExecutionGraph) -> bool:
    """Forbid cycles of the shape po ; [W^rel] ; rf ; [R^acq] ; po ; mo."""
    for r, w in g.rf.items():
        if w is None or w[0] == INIT_THREAD:
            continue
        wl = g.events[w]
        if not is_write(wl) or not is_release(label_mode(wl)):
            continue
        rl = g.events[r]
        if not is_acquire(label_mode(rl)):
            continue
        starts = g.po_prefix(w)  # po edge ending in the release write
        if not starts:
            continue
        start_set = set(starts)
        rtid, ridx = r
        for i in range(ridx + 1, g.thread_len(rtid)):
            b = (rtid, i)
            bl = g.events[b]
            if not is_write(bl):
                continue
            order = g.mo[mem_loc(bl)]
            for later in order[order.index(b) + 1 :]:
                if later in start_set:
                    return False
    return True


def cons_ramm(g: ExecutionGraph) -> bool:
    hb = g.hb()
    for e in g.events:
        if e in hb[e]:
            return False
    if not _coherent(g, hb):
        return False
    if not _atomic(g):
        return False
    if not _sc_order_exists(g, hb):
        return False
    if not _no_rel_acq_mo_cycle(g):
        return False
    return True


class Model:
    def __init__(self, name: str, predicate):
        self.name = name
        self._predicate = predicate

    def consistent(self, g: ExecutionGraph) -> bool:
        return self._predicate(g)


MODELS = {
    "sc": Model("sc", cons_sc),
    "ramm": Model("ramm", cons_ramm),
}


def get_model(name: str) -> Model:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r} (expected one of {sorted(MODELS)})")
