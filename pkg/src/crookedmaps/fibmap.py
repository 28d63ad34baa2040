"""Fiber-routed piecewise-linear self-maps of a fibered model.

A map is stored per chain as one continuous PL function from the chain's
global coordinate into the global coordinate of its target chain.  The
per-fiber lap/target form used for interchange is derived on demand.
"""
from bisect import bisect_left, bisect_right

from .continuum import Arc, ModelPoint
from .errors import BudgetError, DomainError, RoutingError
from .plmap import canonical, compose_count, compose_lists, evaluate, preimage_lists, slopes
from .scalar import ONE, ZERO, default_budget, floor_q, fmt, q


class _Infinite:
    """Value of d_lambda when some image pair lies in different components."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITE"

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INFINITE = _Infinite()


class FiberRoutedMap:
    __slots__ = ("model", "chains")

    def __init__(self, model, chains):
        """``chains[c] = (target_chain, xs, ys)`` in global coordinates."""
        self.model = model
        out = []
        for c, (tc, xs, ys) in enumerate(chains):
            m = model.chains[c].length
            mt = model.chains[tc].length
            if xs[0] != ZERO or xs[-1] != m:
                raise DomainError(f"chain {c} map must cover [0, {m}]")
            if min(ys) < ZERO or max(ys) > mt:
                raise RoutingError(f"chain {c} leaves its target chain")
            xs, ys = canonical(list(xs), list(ys))
            out.append((tc, tuple(xs), tuple(ys)))
        if len(out) != len(model.chains):
            raise DomainError("one map per chain required")
        self.chains = tuple(out)

    def __eq__(self, other):
        if not isinstance(other, FiberRoutedMap):
            return NotImplemented
        return self.model == other.model and self.chains == other.chains

    def __hash__(self):
        return hash(self.chains)

    def __repr__(self):
        return f"FiberRoutedMap({self.pieces} pieces on {self.model!r})"

    @property
    def pieces(self):
        return sum(len(xs) - 1 for _, xs, _ in self.chains)

    def __call__(self, p):
        return fr_eval(self, p)

    # -- per-fiber lap form -------------------------------------------------

    def laps(self):
        """{fiber: [(u, v, slope, intercept, target), ...]} in beta terms."""
        model = self.model
        out = {z: [] for z in model.fibers}
        for c, (tc, xs, ys) in enumerate(self.chains):
            ch, tch = model.chains[c], model.chains[tc]
            xs, ys = _split(xs, ys, ch.length, tch.length)
            for i in range(len(xs) - 1):
                t0, t1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
                k = floor_q((t0 + t1) / 2)
                kt = min(floor_q((y0 + y1) / 2), tch.length - 1)
                z, fw = ch.fibers[k], ch.forward[k]
                zt, fwt = tch.fibers[kt], tch.forward[kt]
                u = t0 - k if fw else k + 1 - t0
                v = t1 - k if fw else k + 1 - t1
                bu = y0 - kt if fwt else kt + 1 - y0
                bv = y1 - kt if fwt else kt + 1 - y1
                if u > v:
                    u, v, bu, bv = v, u, bv, bu
                slope = (bv - bu) / (v - u)
                intercept = bu - slope * u
                out[z].append((u, v, slope, intercept, zt))
        for z in out:
            out[z].sort(key=lambda lap: lap[0])
            merged = []
            for lap in out[z]:
                if merged and merged[-1][2:] == lap[2:] and merged[-1][1] == lap[0]:
                    merged[-1] = (merged[-1][0], lap[1]) + lap[2:]
                else:
                    merged.append(lap)
            out[z] = merged
        return out

    @classmethod
    def from_laps(cls, model, laps):
        """Inverse of :meth:`laps`; validates coverage and continuity."""
        per_chain = [dict() for _ in model.chains]
        targets = [set() for _ in model.chains]
        for z in model.fibers:
            if z not in laps:
                raise DomainError(f"no laps for fiber {z!r}")
            c, k, fw = model.where(z)
            cur = ZERO
            for u, v, slope, intercept, zt in sorted(laps[z], key=lambda lap: q(lap[0])):
                u, v, slope, intercept = q(u), q(v), q(slope), q(intercept)
                if u != cur or not u < v:
                    raise DomainError(f"laps of fiber {z!r} do not partition [0, 1]")
                cur = v
                tc, tk, tfw = model.where(zt)
                targets[c].add(tc)
                for b in (u, v):
                    y = slope * b + intercept
                    if y < ZERO or y > ONE:
                        raise RoutingError(f"lap image of fiber {z!r} leaves [0, 1]")
                    t = k + b if fw else k + 1 - b
                    val = tk + y if tfw else tk + 1 - y
                    old = per_chain[c].setdefault(t, val)
                    if old != val:
                        raise RoutingError(
                            f"discontinuity at fiber {z!r}, beta {fmt(b)}: {fmt(old)} vs {fmt(val)}"
                        )
            if cur != ONE:
                raise DomainError(f"laps of fiber {z!r} do not reach beta = 1")
        chains = []
        for c, pts in enumerate(per_chain):
            if len(targets[c]) != 1:
                raise RoutingError(f"chain {c} is routed into {len(targets[c])} components")
            xs = sorted(pts)
            chains.append((targets[c].pop(), xs, [pts[x] for x in xs]))
        return cls(model, chains)

    def to_json(self):
        return {
            "pieces": {
                z: [
                    {
                        "dom": [fmt(u), fmt(v)],
                        "slope": fmt(s),
                        "intercept": fmt(b),
                        "target": zt,
                    }
                    for u, v, s, b, zt in laps
                ]
                for z, laps in self.laps().items()
            }
        }

    @classmethod
    def from_json(cls, model, data):
        laps = {
            z: [(p["dom"][0], p["dom"][1], p["slope"], p["intercept"], p["target"]) for p in pieces]
            for z, pieces in data["pieces"].items()
        }
        return cls.from_laps(model, laps)


def _split(xs, ys, m, mt):
    """Insert nodes at integer positions of the domain and of the values."""
    out_x, out_y = [xs[0]], [ys[0]]
    for i in range(len(xs) - 1):
        t0, t1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
        cuts = []
        for k in range(floor_q(t0) + 1, floor_q(t1) + (0 if t1 == floor_q(t1) else 1)):
            cuts.append(q(k))
        if y0 != y1:
            lo, hi = min(y0, y1), max(y0, y1)
            for k in range(floor_q(lo) + 1, floor_q(hi) + (0 if hi == floor_q(hi) else 1)):
                cuts.append(t0 + (k - y0) * (t1 - t0) / (y1 - y0))
        for t in sorted(set(cuts)):
            if t0 < t < t1:
                out_x.append(t)
                out_y.append(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
        out_x.append(t1)
        out_y.append(y1)
    return out_x, out_y


def identity_map(model):
    return FiberRoutedMap(
        model, [(c, [ZERO, q(ch.length)], [ZERO, q(ch.length)]) for c, ch in enumerate(model.chains)]
    )


def from_plmap(model, f):
    """Single-fiber model: the fiber-routed version of a PL map into [0, 1]."""
    if len(model.fibers) != 1:
        raise DomainError("from_plmap needs a one-fiber model")
    lo, hi = f.range()
    if lo < ZERO or hi > ONE:
        raise RoutingError("map leaves [0, 1]; fold or lift it first")
    return FiberRoutedMap(model, [(0, f.nodes, f.values)])


def fr_eval(f, p):
    c, t = f.model.to_global(p)
    tc, xs, ys = f.chains[c]
    return f.model.from_global(tc, evaluate(xs, ys, t))


def fr_compose(f, g, budget=None):
    """f o g."""
    if f.model is not g.model and f.model != g.model:
        raise DomainError("maps live on different models")
    budget = default_budget() if budget is None else budget
    need = sum(compose_count(f.chains[tc][1], gy) for tc, _, gy in g.chains)
    if need > budget:
        raise BudgetError(
            f"composition needs {need} pieces, budget is {budget}", required=need, budget=budget
        )
    out = []
    for tc, gx, gy in g.chains:
        tc2, fx, fy = f.chains[tc]
        xs, ys = compose_lists(fx, fy, gx, gy, budget)
        out.append((tc2, xs, ys))
    return FiberRoutedMap(g.model, out)


def fr_iterate(f, n, budget=None):
    if not isinstance(n, int) or n < 1:
        raise DomainError("iteration count must be a positive integer")
    out = f
    for _ in range(n - 1):
        out = fr_compose(f, out, budget)
    return out


def stretch_lipschitz(f):
    """(min |slope|, max |slope|) over all laps."""
    mags = [abs(s) for _, xs, ys in f.chains for s in slopes(xs, ys)]
    return min(mags), max(mags)


def working_lipschitz(f):
    """An s > 2 with lambda(f(A)) < s lambda(A): max(3, max slope + 1)."""
    return max(q(3), stretch_lipschitz(f)[1] + 1)


def chain_range(xs, ys, lo, hi):
    """Exact (min, max) of a PL function over [lo, hi]."""
    vals = [evaluate(xs, ys, lo), evaluate(xs, ys, hi)]
    i, j = bisect_right(xs, lo), bisect_left(xs, hi)
    if i < j:
        inner = ys[i:j]
        vals.append(min(inner))
        vals.append(max(inner))
    return min(vals), max(vals)


def image_arc(f, A):
    if A.model is not f.model and A.model != f.model:
        raise RoutingError("arc and map live on different models")
    tc, xs, ys = f.chains[A.chain]
    lo, hi = chain_range(xs, ys, A.lo, A.hi)
    return Arc(f.model, tc, lo, hi)


def preimage_arc_components(f, A):
    """Maximal arcs C with f(C) inside A, kept when f(C) is all of A."""
    if A.hi == A.lo:
        raise DomainError("preimage needs a nondegenerate arc")
    out = []
    for c, (tc, xs, ys) in enumerate(f.chains):
        if tc != A.chain:
            continue
        for a, b in preimage_lists(xs, ys, A.lo, A.hi):
            if chain_range(xs, ys, a, b) == (A.lo, A.hi):
                out.append(Arc(f.model, c, a, b))
    return out


def d_lambda(f, g, model=None):
    """Exact sup over t of lambda([f(t), g(t)]), or INFINITE."""
    model = model or f.model
    best = ZERO
    for (tf, fx, fy), (tg, gx, gy) in zip(f.chains, g.chains):
        if tf != tg:
            return INFINITE
        d = _sup_gap(fx, fy, gx, gy)
        if d > best:
            best = d
    return best


def _sup_gap(fx, fy, gx, gy):
    """max |f - g| over the union of both node lists, in one merged sweep."""
    best = ZERO
    i = j = 0
    nf, ng = len(fx), len(gx)
    while i < nf or j < ng:
        if j >= ng or (i < nf and fx[i] < gx[j]):
            t, a = fx[i], fy[i]
            b = gy[j - 1] + (gy[j] - gy[j - 1]) * (t - gx[j - 1]) / (gx[j] - gx[j - 1])
            i += 1
        elif i >= nf or gx[j] < fx[i]:
            t, b = gx[j], gy[j]
            a = fy[i - 1] + (fy[i] - fy[i - 1]) * (t - fx[i - 1]) / (fx[i] - fx[i - 1])
            j += 1
        else:
            a, b = fy[i], gy[j]
            i += 1
            j += 1
        d = abs(a - b)
        if d > best:
            best = d
    return best


def point(model, fiber, beta):
    return model.canonical_point(ModelPoint(fiber, q(beta)))
