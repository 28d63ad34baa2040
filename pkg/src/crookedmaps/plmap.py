"""Exact piecewise-linear maps.

The module-level helpers (``canonical``, ``evaluate``, ``compose_lists``,
``preimage_lists``) work on plain node/value sequences over any closed
domain; :class:`PLMap` is the public unit-interval type built on them.  The
fibered-map layer reuses the helpers on longer domains.
"""
from bisect import bisect_left, bisect_right

from .errors import BudgetError, DomainError
from .scalar import ONE, ZERO, default_budget, fmt, q

VALUE_LO = q(-1)
VALUE_HI = q(2)


def canonical(xs, ys):
    """Drop interior nodes where the slope does not change."""
    if len(xs) <= 2:
        return list(xs), list(ys)
    out_x = [xs[0]]
    out_y = [ys[0]]
    for i in range(1, len(xs) - 1):
        x0, y0 = out_x[-1], out_y[-1]
        x1, y1 = xs[i], ys[i]
        x2, y2 = xs[i + 1], ys[i + 1]
        if (y1 - y0) * (x2 - x1) == (y2 - y1) * (x1 - x0):
            continue
        out_x.append(x1)
        out_y.append(y1)
    out_x.append(xs[-1])
    out_y.append(ys[-1])
    return out_x, out_y


def evaluate(xs, ys, x):
    if x < xs[0] or x > xs[-1]:
        raise DomainError(f"{fmt(x)} outside [{fmt(xs[0])}, {fmt(xs[-1])}]")
    i = bisect_left(xs, x)
    if xs[i] == x:
        return ys[i]
    x0, x1 = xs[i - 1], xs[i]
    y0, y1 = ys[i - 1], ys[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def compose_count(fx, gy):
    """Piece count of f o g before canonicalization (no allocation)."""
    total = 0
    for k in range(len(gy) - 1):
        a, b = gy[k], gy[k + 1]
        if a > b:
            a, b = b, a
        total += 1 + max(0, bisect_left(fx, b) - bisect_right(fx, a))
    return total


def compose_lists(fx, fy, gx, gy, budget=None):
    """Nodes and values of f o g; the range of g must sit inside dom f."""
    budget = default_budget() if budget is None else budget
    lo, hi = min(gy), max(gy)
    if lo < fx[0] or hi > fx[-1]:
        raise DomainError(
            f"range [{fmt(lo)}, {fmt(hi)}] not inside [{fmt(fx[0])}, {fmt(fx[-1])}]"
        )
    need = compose_count(fx, gy)
    if need > budget:
        raise BudgetError(
            f"composition needs {need} pieces, budget is {budget}",
            required=need,
            budget=budget,
        )
    xs = [gx[0]]
    ys = [evaluate(fx, fy, gy[0])]
    for k in range(len(gx) - 1):
        x0, x1 = gx[k], gx[k + 1]
        y0, y1 = gy[k], gy[k + 1]
        if y0 != y1:
            if y0 < y1:
                idx = range(bisect_right(fx, y0), bisect_left(fx, y1))
            else:
                idx = range(bisect_left(fx, y0) - 1, bisect_right(fx, y1) - 1, -1)
            scale = (x1 - x0) / (y1 - y0)
            for j in idx:
                xs.append(x0 + (fx[j] - y0) * scale)
                ys.append(fy[j])
        xs.append(x1)
        ys.append(evaluate(fx, fy, y1))
    return canonical(xs, ys)


def preimage_lists(xs, ys, lo, hi):
    """Connected components of {x : lo <= f(x) <= hi}, ascending."""
    comps = []
    for k in range(len(xs) - 1):
        x0, x1 = xs[k], xs[k + 1]
        y0, y1 = ys[k], ys[k + 1]
        if y0 == y1:
            if lo <= y0 <= hi:
                seg = (x0, x1)
            else:
                continue
        else:
            # parameter range of the affine piece landing in [lo, hi]
            s = (x1 - x0) / (y1 - y0)
            ta = x0 + (lo - y0) * s
            tb = x0 + (hi - y0) * s
            a, b = (ta, tb) if ta <= tb else (tb, ta)
            a = max(a, x0)
            b = min(b, x1)
            if a > b:
                continue
            seg = (a, b)
        if comps and comps[-1][1] == seg[0]:
            comps[-1] = (comps[-1][0], seg[1])
        elif comps and comps[-1][1] >= seg[0]:
            comps[-1] = (comps[-1][0], max(comps[-1][1], seg[1]))
        else:
            comps.append(seg)
    return comps


def slopes(xs, ys):
    return [(ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)]


class PLMap:
    """Continuous piecewise-linear map on [0, 1] with values in [-1, 2].

    Stored canonically, so two maps are equal iff their node and value
    tuples are equal.
    """

    __slots__ = ("nodes", "values")

    def __init__(self, nodes, values):
        xs = [q(x) for x in nodes]
        ys = [q(y) for y in values]
        if len(xs) < 2 or len(xs) != len(ys):
            raise DomainError("need at least two nodes and one value per node")
        if xs[0] != ZERO or xs[-1] != ONE:
            raise DomainError("nodes must start at 0 and end at 1")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise DomainError("nodes must be strictly increasing")
        for y in ys:
            if y < VALUE_LO or y > VALUE_HI:
                raise DomainError(f"value {fmt(y)} outside [-1, 2]")
        xs, ys = canonical(xs, ys)
        self.nodes = tuple(xs)
        self.values = tuple(ys)

    @classmethod
    def _trusted(cls, xs, ys):
        obj = cls.__new__(cls)
        obj.nodes = tuple(xs)
        obj.values = tuple(ys)
        return obj

    def __eq__(self, other):
        if not isinstance(other, PLMap):
            return NotImplemented
        return self.nodes == other.nodes and self.values == other.values

    def __hash__(self):
        return hash((self.nodes, self.values))

    def __repr__(self):
        if len(self.nodes) > 6:
            return f"PLMap(<{len(self.nodes) - 1} pieces>)"
        pts = ", ".join(f"({fmt(x)}, {fmt(y)})" for x, y in zip(self.nodes, self.values))
        return f"PLMap({pts})"

    @property
    def pieces(self):
        return len(self.nodes) - 1

    def __call__(self, x):
        return pl_eval(self, x)

    def range(self):
        return min(self.values), max(self.values)

    def to_json(self):
        return {"nodes": [fmt(x) for x in self.nodes], "values": [fmt(y) for y in self.values]}

    @classmethod
    def from_json(cls, data):
        return cls(data["nodes"], data["values"])


def identity():
    return PLMap._trusted((ZERO, ONE), (ZERO, ONE))


def tent(k):
    """Uniform k-lap stretch-and-fold map; lap j rises for even j."""
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"tent needs a positive integer, got {k!r}")
    xs = [q(j) / k for j in range(k + 1)]
    ys = [ZERO if j % 2 == 0 else ONE for j in range(k + 1)]
    return PLMap._trusted(xs, ys)


def pl_eval(f, x):
    x = q(x)
    if x < ZERO or x > ONE:
        raise DomainError(f"{fmt(x)} outside [0, 1]")
    return evaluate(f.nodes, f.values, x)


def pl_compose(f, g, budget=None):
    """f o g. The range of g must lie in [0, 1]."""
    lo, hi = g.range()
    if lo < ZERO or hi > ONE:
        raise DomainError("range of the inner map must lie in [0, 1]")
    xs, ys = compose_lists(f.nodes, f.values, g.nodes, g.values, budget)
    return PLMap._trusted(xs, ys)


def pl_iterate(f, n, budget=None):
    if not isinstance(n, int) or n < 1:
        raise DomainError("iteration count must be a positive integer")
    out = f
    for _ in range(n - 1):
        out = pl_compose(f, out, budget)
    return out


def slope_bounds(f):
    mags = [abs(s) for s in slopes(f.nodes, f.values)]
    return min(mags), max(mags)


def preimage_components(f, target):
    lo, hi = q(target[0]), q(target[1])
    if not lo < hi:
        raise DomainError("target interval is degenerate")
    if lo < ZERO or hi > ONE:
        raise DomainError("target must lie in [0, 1]")
    return preimage_lists(f.nodes, f.values, lo, hi)


def fold(f):
    """Reflect values below 0 and above 1 back into [0, 1]."""
    xs, ys = list(f.nodes), list(f.values)
    out_x, out_y = [xs[0]], [_fold_value(ys[0])]
    for k in range(len(xs) - 1):
        x0, x1, y0, y1 = xs[k], xs[k + 1], ys[k], ys[k + 1]
        cuts = (ZERO, ONE) if y0 < y1 else (ONE, ZERO)
        for c in cuts:
            if (y0 - c) * (y1 - c) < 0:
                out_x.append(x0 + (c - y0) * (x1 - x0) / (y1 - y0))
                out_y.append(c)
        out_x.append(x1)
        out_y.append(_fold_value(y1))
    xs, ys = canonical(out_x, out_y)
    return PLMap._trusted(xs, ys)


def _fold_value(y):
    if y < ZERO:
        return -y
    if y > ONE:
        return 2 - y
    return y
