"""Symbolic level walks for lifts of g0 too large to materialize.

On a chain of m fibers the lift of g0 is, in global coordinates, a walk
on the integer levels 0..m*q (unit = mu) with V = steps_per_cell equal
steps per mu-cell, reflected at the two ends of the chain.  The walk is
kept as a short list of zigzag blocks Z(a, b); every block is a memoized
recursion, so crookedness and range questions cost time in the number of
distinct blocks rather than in the number of pieces.

A block stands for the vertices of zigzag(a, b) *after* the first one.
"""
from bisect import bisect_left, bisect_right
from functools import lru_cache

import numpy as np

from .continuum import Arc
from .crooked import CrookednessVerdict, candidate_arcs, passage_is_doubled
from .errors import BudgetError, DomainError, ParameterError
from .scalar import ZERO, Q, fmt, q

# automaton states
IDLE, UP0, UP_HI, UP_OK, DN0, DN_LO, DN_OK, VIOL = range(8)
# vertex labels: at/below a, in (a, a+delta], middle, [b-delta, b), at/above b
LAB_B, LAB_LO, LAB_MID, LAB_HI, LAB_T = range(5)

_TR = np.empty((5, 8), dtype=np.int8)
for _s in range(8):
    _TR[LAB_MID, _s] = _s
    _TR[LAB_B, _s] = VIOL if _s in (DN0, DN_LO, VIOL) else UP0
    _TR[LAB_T, _s] = VIOL if _s in (UP0, UP_HI, VIOL) else DN0
    _TR[LAB_HI, _s] = {UP0: UP_HI, DN_LO: DN_OK}.get(_s, _s)
    _TR[LAB_LO, _s] = {UP_HI: UP_OK, DN0: DN_LO}.get(_s, _s)


@lru_cache(maxsize=None)
def steps(n):
    n = abs(n)
    if n <= 2:
        return n
    return 2 * steps(n - 1) + steps(n - 2)


def _straddles(a, b, top):
    lo, hi = min(a, b), max(a, b)
    return lo < 0 < hi or lo < top < hi


def fold_node(a, b, top):
    """Block for zigzag(a, b) reflected into [0, top]."""
    lo, hi = min(a, b), max(a, b)
    if _straddles(a, b, top):
        return ("F", a, b, top)
    if hi <= 0:
        return ("Z", -a, -b)
    if lo >= top:
        return ("Z", 2 * top - a, 2 * top - b)
    return ("Z", a, b)


def children(node):
    """Sub-blocks of a Z or F node, or None for a leaf."""
    if node[0] == "L":
        return None
    a, b = node[1], node[2]
    if abs(b - a) <= 2:
        return None
    s = 1 if b > a else -1
    kids = ((a, b - s), (b - s, a + s), (a + s, b))
    if node[0] == "Z":
        return tuple(("Z", x, y) for x, y in kids)
    top = node[3]
    return tuple(fold_node(x, y, top) for x, y in kids)


def leaf_levels(node):
    if node[0] == "L":
        return node[1]
    a, b = node[1], node[2]
    s = 1 if b > a else -1
    out = tuple(range(a + s, b + s, s)) if a != b else ()
    if node[0] == "F":
        out = tuple(_fold_level(v, node[3]) for v in out)
    return out


def length(node):
    if node[0] == "L":
        return len(node[1])
    return steps(node[2] - node[1])


def level_range(node):
    """Exact (min, max) of the consumed vertices."""
    if node[0] == "L":
        return min(node[1]), max(node[1])
    a, b = node[1], node[2]
    lo, hi = (a + 1, b) if b > a else (b, a - 1)
    if node[0] == "Z" or lo > hi:
        return lo, hi
    top = node[3]
    # every level between lo and hi is visited, so fold the interval
    vals = [_fold_level(lo, top), _fold_level(hi, top)]
    if lo < 0 < hi:
        vals.append(0)
    if lo < top < hi:
        vals.append(top)
    return min(vals), max(vals)


def _fold_level(v, top):
    if v < 0:
        return -v
    if v > top:
        return 2 * top - v
    return v


class LevelWalk:
    """Folded level walk of one chain: start level plus top-level blocks."""

    def __init__(self, start, nodes, top, steps_per_cell):
        self.start = start
        self.nodes = nodes
        self.top = top
        self.V = steps_per_cell
        self.offsets = []
        n = 0
        for node in nodes:
            self.offsets.append(n)
            n += length(node)
        self.n = n

    def level_at(self, idx):
        if idx == 0:
            return self.start
        if not 0 < idx <= self.n:
            raise DomainError(f"vertex {idx} outside walk of {self.n} steps")
        k = bisect_right(self.offsets, idx - 1) - 1
        node, rel = self.nodes[k], idx - self.offsets[k]
        while True:
            kids = children(node)
            if kids is None:
                return leaf_levels(node)[rel - 1]
            for kid in kids:
                ln = length(kid)
                if rel <= ln:
                    node = kid
                    break
                rel -= ln

    def range_between(self, i, j):
        """(min, max) level over vertices i..j inclusive."""
        lo = hi = self.level_at(i)
        if j == i:
            return lo, hi
        res = [lo, hi]

        def visit(node, off):
            # consumed vertices are off+1 .. off+length
            end = off + length(node)
            if end <= i or off >= j:
                return
            if off >= i and end <= j:
                a, b = level_range(node)
                res[0] = min(res[0], a)
                res[1] = max(res[1], b)
                return
            kids = children(node)
            if kids is None:
                for k, v in enumerate(leaf_levels(node), start=1):
                    if i < off + k <= j:
                        res[0] = min(res[0], v)
                        res[1] = max(res[1], v)
                return
            for kid in kids:
                visit(kid, off)
                off += length(kid)

        k0 = max(0, bisect_right(self.offsets, i) - 1)
        k1 = bisect_right(self.offsets, j - 1)
        for k in range(k0, k1):
            visit(self.nodes[k], self.offsets[k])
        return res[0], res[1]

    def find_last(self, before, lo, hi):
        """Largest vertex index < before whose level lies in [lo, hi], or None."""

        def visit(node, off):
            if off + 1 >= before:
                return None
            a, b = level_range(node)
            if b < lo or a > hi:
                return None
            kids = children(node)
            if kids is None:
                best = None
                for k, v in enumerate(leaf_levels(node), start=1):
                    if off + k < before and lo <= v <= hi:
                        best = off + k
                return best
            offs = []
            o = off
            for kid in kids:
                offs.append(o)
                o += length(kid)
            for kid, o in reversed(list(zip(kids, offs))):
                r = visit(kid, o)
                if r is not None:
                    return r
            return None

        k1 = min(len(self.nodes), bisect_right(self.offsets, before - 1))
        for k in range(k1 - 1, -1, -1):
            r = visit(self.nodes[k], self.offsets[k])
            if r is not None:
                return r
        if before > 0 and lo <= self.start <= hi:
            return 0
        return None

    def levels(self, i, j):
        """Materialize levels of vertices i..j (small windows only)."""
        out = []
        if i == 0:
            out.append(self.start)

        def visit(node, off):
            end = off + length(node)
            if end <= i - 1 or off >= j:
                return
            kids = children(node)
            if kids is None:
                for k, v in enumerate(leaf_levels(node), start=1):
                    if i <= off + k <= j:
                        out.append(v)
                return
            for kid in kids:
                visit(kid, off)
                off += length(kid)

        for node, off in zip(self.nodes, self.offsets):
            visit(node, off)
        return out

    def displacement_bounds(self):
        """Exact (min, max) of level*V - index over all vertices."""
        lo = hi = self.start * self.V
        for node, off in zip(self.nodes, self.offsets):
            dmin, dmax = _disp(node, self.V)
            lo = min(lo, dmin - off)
            hi = max(hi, dmax - off)
        return lo, hi


@lru_cache(maxsize=None)
def _disp_z(d, V):
    """(min, max) over consumed vertices k of (level_k - a)*V - k for Z(0, d)."""
    kids = children(("Z", 0, d))
    if kids is None:
        vals = [lv * V - k for k, lv in enumerate(leaf_levels(("Z", 0, d)), start=1)]
        return (min(vals), max(vals)) if vals else (0, 0)
    lo = hi = None
    off = 0
    for kid in kids:
        a, b = kid[1], kid[2]
        m0, m1 = _disp_z(b - a, V)
        m0 += a * V - off
        m1 += a * V - off
        lo = m0 if lo is None else min(lo, m0)
        hi = m1 if hi is None else max(hi, m1)
        off += length(kid)
    return lo, hi


@lru_cache(maxsize=None)
def _disp(node, V):
    """(min, max) of level*V - k over consumed vertices, k counted from 1."""
    if node[0] == "Z":
        lo, hi = _disp_z(node[2] - node[1], V)
        return lo + node[1] * V, hi + node[1] * V
    kids = children(node)
    if kids is None:
        vals = [lv * V - k for k, lv in enumerate(leaf_levels(node), start=1)]
        return min(vals), max(vals)
    lo = hi = None
    off = 0
    for kid in kids:
        m0, m1 = _disp(kid, V)
        lo = m0 - off if lo is None else min(lo, m0 - off)
        hi = m1 - off if hi is None else max(hi, m1 - off)
        off += length(kid)
    return lo, hi


def _labels(keys, v):
    ra, rl, ru, rb = keys[:, 0], keys[:, 1], keys[:, 2], keys[:, 3]
    lab = np.full(len(keys), LAB_MID, dtype=np.int8)
    lab[v >= ru] = LAB_HI
    lab[v < rl] = LAB_LO
    lab[v < ra] = LAB_B
    lab[v >= rb] = LAB_T
    return lab


class _Automaton:
    """Per-block state transitions for a batch of threshold keys."""

    def __init__(self, keys):
        self.keys = keys
        self.memo = {}
        self._lab = {}
        self.ident = np.tile(np.arange(8, dtype=np.int8), (len(keys), 1))

    def lab(self, v):
        out = self._lab.get(v)
        if out is None:
            out = self._lab[v] = _labels(self.keys, v)
        return out

    def table(self, node):
        t = self.memo.get(node)
        if t is not None:
            return t
        kids = children(node)
        if kids is None:
            t = self.ident
            for v in leaf_levels(node):
                t = _TR[self.lab(v)[:, None], t]
        else:
            t = self.table(kids[0])
            for kid in kids[1:]:
                t = np.take_along_axis(self.table(kid), t, axis=1)
        self.memo[node] = t
        return t

    def run(self, walk):
        rows = np.arange(len(self.keys))
        state = _TR[self.lab(walk.start), IDLE]
        for node in walk.nodes:
            state = self.table(node)[rows, state]
        return state


def _key(a, b, delta):
    """Rank thresholds of (a, b) on the integer levels (floor/ceil form)."""
    return (
        int(a // 1) + 1,
        int((a + delta) // 1) + 1,
        -int((-(b - delta)) // 1),
        -int((-b) // 1),
    )


class SymbolicLift:
    """Lift of g0 to a chain model, held as folded level walks."""

    def __init__(self, model, params):
        self.model = model
        self.params = params
        qq, p, V = int(params.q), int(params.p), params.steps_per_cell
        self.q, self.p, self.V = qq, p, V
        self.walks = []
        for ch in model.chains:
            top = ch.length * qq
            nodes = []
            for k, fw in enumerate(ch.forward):
                for j in range(qq):
                    s = k * qq + j
                    legs = (s, s + p, s - p, s + 1) if fw else (s, s + 1 + p, s + 1 - p, s + 1)
                    for a, b in zip(legs, legs[1:]):
                        nodes.append(fold_node(a, b, top))
            self.walks.append(LevelWalk(0, nodes, top, V))

    def __repr__(self):
        return f"SymbolicLift(q={self.q}, p={self.p}, {self.pieces_bound} unit steps)"

    @property
    def pieces_bound(self):
        return sum(w.n for w in self.walks)

    def scale(self):
        """Positions are vertex indices over q*V; levels are over q."""
        return self.q * self.V

    def position(self, idx):
        return Q(idx, self.q * self.V)

    def value(self, c, x):
        """Exact lifted value at chain position x (global coordinates)."""
        w = self.walks[c]
        n = x * self.q * self.V
        k = int(n // 1)
        if k == n:
            return Q(w.level_at(k), self.q)
        y0, y1 = w.level_at(k), w.level_at(k + 1)
        return Q(y0, self.q) + (n - k) * Q(y1 - y0, self.q)

    def displacement_sup(self):
        """Exact sup over t of |g(t) - t| in chain units."""
        best = 0
        for w in self.walks:
            lo, hi = w.displacement_bounds()
            best = max(best, -lo, hi)
        return Q(best, self.q * self.V)

    # -- crookedness ------------------------------------------------------

    def crookedness(self, eps, delta, budget=None, batch=512):
        import time

        from .crooked import DEFAULT_CANDIDATE_BUDGET

        t0 = time.perf_counter()
        eps, delta = q(eps), q(delta)
        if eps <= ZERO or delta <= ZERO:
            raise ParameterError("eps and delta must be positive")
        if eps <= 2 * delta:
            return CrookednessVerdict(True, eps, delta, 0, vacuous=True)
        budget = DEFAULT_CANDIDATE_BUDGET if budget is None else budget
        el, dl = eps * self.q, delta * self.q
        plan, total = [], 0
        for c, w in enumerate(self.walks):
            levels = [Q(v) for v in range(w.top + 1)]
            cands = candidate_arcs(levels, Q(w.top), el, dl)
            total += len(cands)
            if total > budget:
                raise BudgetError(
                    f"{total}+ candidate arcs exceed the budget of {budget}",
                    required=total, budget=budget,
                    report={"eps": fmt(eps), "delta": fmt(delta), "chain": c},
                )
            plan.append((c, w, cands))
        checked = 0
        distinct = 0
        for c, w, cands in plan:
            order, first = [], {}
            for n, (a, b) in enumerate(cands):
                key = _key(a, b, dl)
                if key not in first:
                    first[key] = n
                    order.append(key)
            distinct += len(order)
            for s in range(0, len(order), batch):
                chunk = np.array(order[s:s + batch], dtype=np.int64)
                final = _Automaton(chunk).run(w)
                bad = np.flatnonzero(final == VIOL)
                if len(bad):
                    key = tuple(int(v) for v in chunk[bad[0]])
                    n = first[key]
                    a, b = cands[n]
                    witness = self._witness(c, w, key, a, b, dl)
                    return CrookednessVerdict(
                        False, eps, delta, checked + n + 1, witness=witness,
                        elapsed=time.perf_counter() - t0,
                        stats={"distinct_cells": distinct, "symbolic": True},
                    )
            checked += len(cands)
        return CrookednessVerdict(
            True, eps, delta, checked, elapsed=time.perf_counter() - t0,
            stats={"distinct_cells": distinct, "symbolic": True},
        )

    def _witness(self, c, w, key, a, b, dl):
        auto = _Automaton(np.array([key], dtype=np.int64))
        state = int(_TR[auto.lab(w.start), IDLE][0])
        j = None
        for node, off in zip(w.nodes, w.offsets):
            nxt = int(auto.table(node)[0, state])
            if nxt == VIOL:
                j = _descend(auto, node, off, state)
                break
            state = nxt
        ra, rl, ru, rb = key
        vj = w.level_at(j)
        up = vj >= rb
        i = w.find_last(j, -1, ra - 1) if up else w.find_last(j, rb, w.top + 1)
        start_level, end_level = (a, b) if up else (b, a)
        x0 = _cross(self, w, i, start_level)
        x1 = _cross(self, w, j - 1, end_level)
        model = self.model
        A = Arc(model, c, a / self.q, b / self.q)
        C = Arc(model, c, x0, x1)
        checked = None
        if j - i <= 200_000:
            lv = w.levels(i, j)
            xs = [self.position(n) for n in range(i, j + 1)]
            ys = [Q(v, self.q) for v in lv]
            checked = not passage_is_doubled(
                xs, ys, C.lo, C.hi, (a + dl) / self.q, (b - dl) / self.q
            )
        return {
            "A": A,
            "C": C,
            "reason": "the only passage of C across A reaches the far end of "
            "K(A, delta) without returning, so K(A, delta) is covered once",
            "vertices": [i, j],
            "independently_checked": checked,
        }


def _descend(auto, node, off, state):
    kids = children(node)
    if kids is None:
        for k, v in enumerate(leaf_levels(node), start=1):
            state = int(_TR[auto.lab(v)[0], state])
            if state == VIOL:
                return off + k
        raise AssertionError("violation not reproduced inside leaf")
    for kid in kids:
        nxt = int(auto.table(kid)[0, state])
        if nxt == VIOL:
            return _descend(auto, kid, off, state)
        state = nxt
        off += length(kid)
    raise AssertionError("violation not reproduced inside block")


def _cross(lift, w, i, level):
    """Point on the step i -> i+1 where the walk passes ``level``."""
    y0, y1 = w.level_at(i), w.level_at(i + 1)
    if y0 == level:
        return lift.position(i)
    if y1 == level:
        return lift.position(i + 1)
    return lift.position(i) + (level - y0) / (y1 - y0) * lift.position(1)
