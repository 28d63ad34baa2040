"""(eps, delta)-crookedness: decision procedure, split helper, grid falsifier.

For an arc A = [a, b] with 2*delta < b - a < eps it is enough to look at
the minimal arcs C with f(C) = A: stretches of the domain running from a
point at level a to a point at level b (or back) while staying strictly
between.  Such a C carries two disjoint subarcs onto K(A, delta) =
[a + delta, b - delta] exactly when, after first reaching the far core
end, the path returns to the near one before finishing.

The verdict for (a, b) only depends on how a, a + delta, b - delta and b
sit relative to the finitely many turning values of f, so one
representative per cell of that arrangement decides all arcs.
"""
import random
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .continuum import Arc, k_operators
from .errors import BudgetError, ParameterError
from .fibmap import chain_range, preimage_arc_components
from .plmap import evaluate, preimage_lists
from .scalar import Q, ZERO, fmt, q

DEFAULT_CANDIDATE_BUDGET = 2_000_000


@dataclass
class CrookednessVerdict:
    crooked: bool
    eps: object
    delta: object
    candidates_checked: int
    witness: dict = None
    vacuous: bool = False
    elapsed: float = 0.0
    stats: dict = field(default_factory=dict)

    def to_json(self, timing=False):
        out = {
            "parameters": {"eps": fmt(self.eps), "delta": fmt(self.delta)},
            "crooked": self.crooked,
            "vacuous": self.vacuous,
            "candidates_checked": self.candidates_checked,
        }
        if timing:
            out["elapsed_seconds"] = round(self.elapsed, 3)
        if self.stats:
            out["stats"] = self.stats
        if self.witness is not None:
            w = self.witness
            out["witness"] = {
                "A": w["A"].to_json(),
                "C": w["C"].to_json(),
                "A_global": [fmt(w["A"].start), fmt(w["A"].end)],
                "C_global": [fmt(w["C"].start), fmt(w["C"].end)],
                "reason": w["reason"],
            }
        return out


def turning_vertices(xs, ys):
    """Drop nodes the map passes through monotonically."""
    keep_x, keep_y = [xs[0]], [ys[0]]
    for i in range(1, len(xs) - 1):
        a, b, c = keep_y[-1], ys[i], ys[i + 1]
        if (a < b < c) or (a > b > c):
            continue
        keep_x.append(xs[i])
        keep_y.append(b)
    keep_x.append(xs[-1])
    keep_y.append(ys[-1])
    return keep_x, keep_y


def _cells(points, lo, hi):
    """Points and open gaps of [lo, hi] cut at ``points``."""
    pts = sorted(set(p for p in points if lo <= p <= hi) | {lo, hi})
    out = []
    for i, p in enumerate(pts):
        out.append((p, p))
        if i + 1 < len(pts):
            out.append((p, pts[i + 1]))
    return out


def _representative(ca, cb, two_delta, eps):
    """Some (a, b) with a in ca, b in cb and 2 delta < b - a < eps."""
    a_pt = ca[0] == ca[1]
    b_pt = cb[0] == cb[1]
    if a_pt and b_pt:
        d = cb[0] - ca[0]
        return (ca[0], cb[0]) if two_delta < d < eps else None
    d_lo = max(cb[0] - ca[1], two_delta)
    d_hi = min(cb[1] - ca[0], eps)
    if not d_lo < d_hi:
        return None
    d = (d_lo + d_hi) / 2
    if a_pt:
        return ca[0], ca[0] + d
    if b_pt:
        return cb[0] - d, cb[0]
    lo = max(ca[0], cb[0] - d)
    hi = min(ca[1], cb[1] - d)
    a = (lo + hi) / 2
    return a, a + d


def candidate_arcs(values, m, eps, delta, limit=None):
    """Representative (a, b) pairs, sorted, one per arrangement cell."""
    two_delta = 2 * delta
    a_cells = _cells(list(values) + [v - delta for v in values], ZERO, m)
    b_cells = _cells(list(values) + [v + delta for v in values], ZERO, m)
    b_lo = [c[0] for c in b_cells]
    out = []
    for ca in a_cells:
        # b-cells that can meet the strip a + 2 delta < b < a + eps
        j0 = max(0, bisect_left(b_lo, ca[0] + two_delta) - 2)
        j1 = bisect_right(b_lo, ca[1] + eps) + 1
        for cb in b_cells[j0:j1]:
            rep = _representative(ca, cb, two_delta, eps)
            if rep is not None:
                out.append(rep)
        if limit is not None and len(out) > limit:
            raise BudgetError(
                f"more than {limit} candidate arcs",
                required=len(out),
                budget=limit,
                report={"eps": fmt(eps), "delta": fmt(delta)},
            )
    out.sort()
    return out


class _ChainScan:
    """Rank-encoded turning sequence of one source chain."""

    def __init__(self, chain, xs, ys, levels):
        self.chain = chain
        self.xs, self.ys = turning_vertices(xs, ys)
        self.full = (xs, ys)
        rank = {v: i for i, v in enumerate(levels)}
        self.r = np.fromiter((rank[y] for y in self.ys), dtype=np.int64, count=len(self.ys))
        self.idx = np.arange(len(self.r), dtype=np.int64)

    def first_bad(self, ra, rl, ru, rb):
        """(i, j, upward) of the first crossing without a return, or None."""
        r = self.r
        bot = r < ra
        top = r >= rb
        ext = np.flatnonzero(bot | top)
        if len(ext) < 2:
            return None
        is_top = top[ext]
        turn = np.flatnonzero(is_top[1:] != is_top[:-1])
        if len(turn) == 0:
            return None
        n = len(r)
        lo = (~bot) & (r < rl)
        hi = (~top) & (r >= ru)
        big = np.where(hi, self.idx, n)
        next_hi = np.minimum.accumulate(big[::-1])[::-1]
        big = np.where(lo, self.idx, n)
        next_lo = np.minimum.accumulate(big[::-1])[::-1]
        prev_lo = np.maximum.accumulate(np.where(lo, self.idx, -1))
        prev_hi = np.maximum.accumulate(np.where(hi, self.idx, -1))
        i = ext[turn]
        j = ext[turn + 1]
        up = ~is_top[turn]
        nxt = np.where(up, next_hi[np.minimum(i + 1, n - 1)], next_lo[np.minimum(i + 1, n - 1)])
        prv = np.where(up, prev_lo[np.maximum(j - 1, 0)], prev_hi[np.maximum(j - 1, 0)])
        bad = np.flatnonzero(~(nxt < prv))
        if len(bad) == 0:
            return None
        k = bad[0]
        return int(i[k]), int(j[k]), bool(up[k])

    def crossing_arc(self, model, i, j, up, a, b):
        xs, ys = self.xs, self.ys
        start_level, end_level = (a, b) if up else (b, a)
        x0 = self._solve(xs[i], xs[i + 1], start_level, last=True)
        x1 = self._solve(xs[j - 1], xs[j], end_level, last=False)
        return Arc(model, self.chain, x0, x1)

    def _solve(self, lo, hi, level, last):
        """Last (or first) point of [lo, hi] at ``level``; f is monotone there."""
        fx, fy = self.full
        k0, k1 = bisect_left(fx, lo), bisect_right(fx, hi)
        pts = []
        for k in range(k0, k1 - 1):
            x0, x1, y0, y1 = fx[k], fx[k + 1], fy[k], fy[k + 1]
            if y0 == level:
                pts.append(x0)
            if y1 == level:
                pts.append(x1)
            elif (y0 - level) * (y1 - level) < 0:
                pts.append(x0 + (level - y0) * (x1 - x0) / (y1 - y0))
        return max(pts) if last else min(pts)


def is_crooked(f, eps, delta, budget=None):
    """Decide (eps, delta)-crookedness of a fiber-routed map."""
    if hasattr(f, "crookedness"):
        return f.crookedness(eps, delta, budget)
    t0 = time.perf_counter()
    eps, delta = q(eps), q(delta)
    if eps <= ZERO or delta <= ZERO:
        raise ParameterError("eps and delta must be positive")
    budget = DEFAULT_CANDIDATE_BUDGET if budget is None else budget
    if eps <= 2 * delta:
        return CrookednessVerdict(True, eps, delta, 0, vacuous=True, elapsed=time.perf_counter() - t0)
    model = f.model
    plan = []
    total = 0
    for tc, ch in enumerate(model.chains):
        sources = [(c, xs, ys) for c, (t, xs, ys) in enumerate(f.chains) if t == tc]
        if not sources:
            continue
        values = set()
        for _, xs, ys in sources:
            values.update(turning_vertices(xs, ys)[1])
        levels = sorted(values)
        cands = candidate_arcs(levels, q(ch.length), eps, delta, limit=budget - total)
        total += len(cands)
        if total > budget:
            raise BudgetError(
                f"{total}+ candidate arcs exceed the budget of {budget}",
                required=total,
                budget=budget,
                report={"eps": fmt(eps), "delta": fmt(delta), "chain": tc},
            )
        plan.append((tc, levels, sources, cands))
    checked = 0
    unique = 0
    for tc, levels, sources, cands in plan:
        scans = [_ChainScan(c, xs, ys, levels) for c, xs, ys in sources]
        seen = set()
        for a, b in cands:
            checked += 1
            key = (
                bisect_right(levels, a),
                bisect_right(levels, a + delta),
                bisect_left(levels, b - delta),
                bisect_left(levels, b),
            )
            if key in seen:
                continue
            seen.add(key)
            unique += 1
            for scan in scans:
                hit = scan.first_bad(*key)
                if hit is None:
                    continue
                i, j, up = hit
                A = Arc(model, tc, a, b)
                C = scan.crossing_arc(model, i, j, up, a, b)
                witness = {
                    "A": A,
                    "C": C,
                    "reason": "the only passage of C across A reaches the far end of "
                    "K(A, delta) without returning, so K(A, delta) is covered once",
                }
                return CrookednessVerdict(
                    False, eps, delta, checked, witness=witness,
                    elapsed=time.perf_counter() - t0, stats={"distinct_cells": unique},
                )
    return CrookednessVerdict(
        True, eps, delta, checked, elapsed=time.perf_counter() - t0,
        stats={"distinct_cells": unique},
    )


# -- exact subarc search (independent of the rank scan) ----------------------


def restrict(xs, ys, lo, hi):
    """Nodes/values of a PL function restricted to [lo, hi]."""
    i, j = bisect_right(xs, lo), bisect_left(xs, hi)
    rx = [lo] + list(xs[i:j]) + [hi]
    ry = [evaluate(xs, ys, lo)] + list(ys[i:j]) + [evaluate(xs, ys, hi)]
    if lo == hi:
        return [lo], [ry[0]]
    return rx, ry


def transition_arcs(xs, ys, lo, hi):
    """Minimal subarcs mapped exactly onto [lo, hi], left to right."""
    if len(xs) < 2:
        return []
    floor_ = min(min(ys), lo) - 1
    ceil_ = max(max(ys), hi) + 1
    below = [(a, b, "L") for a, b in preimage_lists(xs, ys, floor_, lo)]
    above = [(a, b, "H") for a, b in preimage_lists(xs, ys, hi, ceil_)]
    events = sorted(below + above)
    out = []
    for (a0, b0, t0), (a1, b1, t1) in zip(events, events[1:]):
        if t0 != t1:
            out.append((b0, a1))
    return out


def disjoint_pair(first, second):
    """Disjoint members of two lists of closed intervals, or None."""
    for one, two in ((first, second), (second, first)):
        if not one or not two:
            continue
        e = min(one, key=lambda iv: (iv[1], iv[0]))
        later = [iv for iv in two if iv[0] > e[1]]
        if later:
            pair = (e, min(later))
            return pair if one is first else (pair[1], pair[0])
    return None


def _minimal_crossings(xs, ys, a, b):
    return transition_arcs(xs, ys, a, b)


def passage_is_doubled(xs, ys, c0, c1, lo, hi):
    rx, ry = restrict(xs, ys, c0, c1)
    arcs = transition_arcs(rx, ry, lo, hi)
    return disjoint_pair(arcs, arcs) is not None


def verify_witness(f, witness, eps, delta):
    """Re-check a negative witness from scratch."""
    eps, delta = q(eps), q(delta)
    A, C = witness["A"], witness["C"]
    lam = A.hi - A.lo
    if not (2 * delta < lam < eps):
        return False
    tc, xs, ys = f.chains[C.chain]
    if tc != A.chain or chain_range(xs, ys, C.lo, C.hi) != (A.lo, A.hi):
        return False
    return not passage_is_doubled(xs, ys, C.lo, C.hi, A.lo + delta, A.hi - delta)


def crooked_split(f, eps, delta, A):
    """Per preimage component C: disjoint subarcs onto K1(A, delta), K2(A, delta)."""
    eps, delta = q(eps), q(delta)
    lam = A.hi - A.lo
    if not (2 * delta < lam < eps):
        raise ParameterError(f"need 2 delta < lambda(A) < eps, lambda(A) = {fmt(lam)}")
    k1, k2, _ = k_operators(A, delta)
    out = []
    for C in preimage_arc_components(f, A):
        tc, xs, ys = f.chains[C.chain]
        rx, ry = restrict(xs, ys, C.lo, C.hi)
        t1 = transition_arcs(rx, ry, k1.lo, k1.hi)
        t2 = transition_arcs(rx, ry, k2.lo, k2.hi)
        pair = disjoint_pair(t1, t2)
        if pair is None:
            raise ParameterError(f"no disjoint K1/K2 subarcs inside {C}: map is not crooked at A")
        c1 = Arc(f.model, C.chain, *pair[0])
        c2 = Arc(f.model, C.chain, *pair[1])
        out.append((C, c1, c2))
    return out


def grid_falsifier(f, eps, delta, resolution=64, seed=0, max_arcs=4000, random_arcs=200):
    """Search sampled arcs for a crookedness violation; never certifies.

    Arcs come from the 1/resolution grid of each chain (subsampled with
    the seed when there are more than ``max_arcs``) plus random rational
    arcs.  Returns a witness dict or None.
    """
    eps, delta = q(eps), q(delta)
    if resolution < 2:
        raise ParameterError("resolution must be at least 2")
    if eps <= 2 * delta:
        return None
    rng = random.Random(seed)
    model = f.model
    for tc, ch in enumerate(model.chains):
        sources = [(c, xs, ys) for c, (t, xs, ys) in enumerate(f.chains) if t == tc]
        if not sources:
            continue
        m = ch.length
        n = m * resolution
        step = q(1) / resolution
        arcs = []
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                lam = (j - i) * step
                if lam >= eps:
                    break
                if lam > 2 * delta:
                    arcs.append((i * step, j * step))
        if len(arcs) > max_arcs:
            arcs = rng.sample(arcs, max_arcs)
        for _ in range(random_arcs):
            den = rng.randint(2, 4 * resolution)
            lam_num = rng.randint(1, den * m)
            lam = Q(lam_num, den)
            if not (2 * delta < lam < eps) or lam > m:
                continue
            a = Q(rng.randint(0, den * m - lam_num), den)
            arcs.append((a, a + lam))
        arcs.sort()
        for a, b in arcs:
            for c, xs, ys in sources:
                for x0, x1 in _minimal_crossings(xs, ys, a, b):
                    if not passage_is_doubled(xs, ys, x0, x1, a + delta, b - delta):
                        return {
                            "A": Arc(model, tc, a, b),
                            "C": Arc(model, c, x0, x1),
                            "reason": "sampled arc with a single covering of K(A, delta)",
                        }
    return None
