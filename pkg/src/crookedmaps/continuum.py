"""Finite fibered continua, their arcs, and the arc operators H, N and K.

A model is a finite set of fibers, each a copy of [0, 1] in the
beta-coordinate, glued end-to-end by two involutions.  Gluing only ever
pairs two ends, so every arc component is a chain of fibers; cycles are
rejected because the continua in question are tree-like.  Each chain is
laid out once on a *global coordinate* [0, m] (fiber k of the chain
occupies [k, k+1]), which turns arcs into intervals and the beta-length
into plain interval length.
"""
from dataclasses import dataclass

from .errors import CapabilityError, DomainError, NoPathError, ParameterError
from .plmap import evaluate
from .scalar import ONE, ZERO, floor_q, fmt, q


@dataclass(frozen=True)
class ModelPoint:
    fiber: str
    beta: object

    def __post_init__(self):
        b = q(self.beta)
        if b < ZERO or b > ONE:
            raise DomainError(f"beta {fmt(b)} outside [0, 1]")
        object.__setattr__(self, "beta", b)

    def __repr__(self):
        return f"ModelPoint({self.fiber!r}, {fmt(self.beta)})"


@dataclass(frozen=True)
class Chain:
    """One arc component laid out left to right."""

    fibers: tuple
    forward: tuple  # True when beta increases with the global coordinate

    @property
    def length(self):
        return len(self.fibers)


class FiberedContinuum:
    def __init__(self, fibers, tau_minus=None, tau_plus=None, embedding=None):
        fibers = tuple(str(z) for z in fibers)
        if len(set(fibers)) != len(fibers) or not fibers:
            raise DomainError("fiber identifiers must be distinct and non-empty")
        tm = {z: z for z in fibers}
        tp = {z: z for z in fibers}
        tm.update({str(k): str(v) for k, v in (tau_minus or {}).items()})
        tp.update({str(k): str(v) for k, v in (tau_plus or {}).items()})
        for name, tau in (("tau_minus", tm), ("tau_plus", tp)):
            for z, w in tau.items():
                if z not in tm or w not in tm:
                    raise DomainError(f"{name} mentions unknown fiber {z!r} or {w!r}")
                if tau[w] != z:
                    raise DomainError(f"{name} is not an involution at {z!r}")
        self.fibers = fibers
        self.tau_minus = tm
        self.tau_plus = tp
        self.embedding = None
        if embedding is not None:
            self.embedding = {
                str(z): (tuple(q(c) for c in ends[0]), tuple(q(c) for c in ends[1]))
                for z, ends in embedding.items()
            }
            if set(self.embedding) != set(fibers):
                raise DomainError("embedding must cover every fiber")
        self.chains = self._layout()
        self._where = {}
        for c, ch in enumerate(self.chains):
            for k, (z, fw) in enumerate(zip(ch.fibers, ch.forward)):
                self._where[z] = (c, k, fw)
        if self.embedding is not None:
            self._check_embedding()

    def _layout(self):
        seen = set()
        chains = []
        for z0 in sorted(self.fibers):
            if z0 in seen:
                continue
            # walk to one free end of the component
            start = self._free_end(z0)
            if start is None:
                raise DomainError(f"fiber chain through {z0!r} closes into a cycle")
            z, entry = start
            fibers, forward = [], []
            while True:
                fibers.append(z)
                seen.add(z)
                forward.append(entry == 0)
                exit_end = 1 - entry
                tau = self.tau_plus if exit_end == 1 else self.tau_minus
                nxt = tau[z]
                if nxt == z:
                    break
                z, entry = nxt, exit_end
            chains.append(Chain(tuple(fibers), tuple(forward)))
        return chains

    def _free_end(self, z0):
        """A (fiber, end) with no gluing partner in z0's component."""
        ends = []
        for end in (0, 1):
            z, e = z0, end
            for _ in range(len(self.fibers) + 1):
                tau = self.tau_plus if e == 1 else self.tau_minus
                if tau[z] == z:
                    ends.append((z, e))
                    break
                z = tau[z]
                e = 1 - e
            else:
                return None
        # prefer the lexicographically smaller end fiber, then its beta=0 end
        ends.sort(key=lambda t: (t[0], t[1]))
        return ends[0]

    def _check_embedding(self):
        for z in self.fibers:
            for end, tau in ((0, self.tau_minus), (1, self.tau_plus)):
                w = tau[z]
                if self.embedding[z][end] != self.embedding[w][end]:
                    raise DomainError(f"glued ends of {z!r} and {w!r} embed differently")

    def __eq__(self, other):
        return (
            isinstance(other, FiberedContinuum)
            and self.fibers == other.fibers
            and self.tau_minus == other.tau_minus
            and self.tau_plus == other.tau_plus
            and self.embedding == other.embedding
        )

    def __hash__(self):
        return hash(self.fibers)

    def __repr__(self):
        return f"FiberedContinuum({len(self.fibers)} fibers, {len(self.chains)} chains)"

    # -- coordinates ------------------------------------------------------

    def where(self, fiber):
        try:
            return self._where[fiber]
        except KeyError:
            raise DomainError(f"unknown fiber {fiber!r}") from None

    def to_global(self, p):
        c, k, fw = self.where(p.fiber)
        return c, (k + p.beta if fw else k + 1 - p.beta)

    def from_global(self, c, t):
        ch = self.chains[c]
        if t < ZERO or t > ch.length:
            raise DomainError(f"position {fmt(t)} outside chain {c}")
        k = min(floor_q(t), ch.length - 1)
        fw = ch.forward[k]
        beta = t - k if fw else k + 1 - t
        return self.canonical_point(ModelPoint(ch.fibers[k], beta))

    def canonical_point(self, p):
        if p.beta == ZERO:
            w = self.tau_minus[p.fiber]
        elif p.beta == ONE:
            w = self.tau_plus[p.fiber]
        else:
            return p
        return ModelPoint(min(p.fiber, w), p.beta)

    def is_model_endpoint(self, p):
        if p.beta == ZERO:
            return self.tau_minus[p.fiber] == p.fiber
        if p.beta == ONE:
            return self.tau_plus[p.fiber] == p.fiber
        return False

    def embed(self, p):
        if self.embedding is None:
            raise CapabilityError("model has no embedding")
        lo, hi = self.embedding[p.fiber]
        return tuple(a + (b - a) * p.beta for a, b in zip(lo, hi))

    def coordinate_profiles(self, c):
        """Per embedding coordinate, (nodes, values) along chain c."""
        if self.embedding is None:
            raise CapabilityError("model has no embedding")
        ch = self.chains[c]
        dim = len(self.embedding[ch.fibers[0]][0])
        xs = [q(k) for k in range(ch.length + 1)]
        out = []
        for i in range(dim):
            ys = []
            for k, (z, fw) in enumerate(zip(ch.fibers, ch.forward)):
                lo, hi = self.embedding[z]
                ys.append(lo[i] if fw else hi[i])
            z, fw = ch.fibers[-1], ch.forward[-1]
            lo, hi = self.embedding[z]
            ys.append(hi[i] if fw else lo[i])
            out.append((xs, ys))
        return out

    def to_json(self):
        out = {
            "fibers": list(self.fibers),
            "tau_minus": {z: w for z, w in self.tau_minus.items() if z != w},
            "tau_plus": {z: w for z, w in self.tau_plus.items() if z != w},
        }
        if self.embedding is not None:
            out["embedding"] = {
                z: [[fmt(c) for c in lo], [fmt(c) for c in hi]]
                for z, (lo, hi) in self.embedding.items()
            }
        return out

    @classmethod
    def from_json(cls, data):
        return cls(data["fibers"], data.get("tau_minus"), data.get("tau_plus"), data.get("embedding"))


def interval_model():
    """One fiber, both involutions trivial, embedded by beta itself."""
    return FiberedContinuum(["I"], embedding={"I": [[0], [1]]})


class Arc:
    """Oriented arc from ``start`` to ``end`` along one chain.

    ``start`` may exceed ``end``; the orientation records which endpoint
    is "first" (K1 keeps the first endpoint).
    """

    __slots__ = ("model", "chain", "start", "end")

    def __init__(self, model, chain, start, end):
        start, end = q(start), q(end)
        m = model.chains[chain].length
        for t in (start, end):
            if t < ZERO or t > m:
                raise DomainError(f"arc endpoint {fmt(t)} outside chain of length {m}")
        self.model = model
        self.chain = chain
        self.start = start
        self.end = end

    @property
    def lo(self):
        return min(self.start, self.end)

    @property
    def hi(self):
        return max(self.start, self.end)

    @property
    def direction(self):
        return 1 if self.end >= self.start else -1

    @property
    def endpoints(self):
        return (
            self.model.from_global(self.chain, self.start),
            self.model.from_global(self.chain, self.end),
        )

    def same_set(self, other):
        return self.chain == other.chain and self.lo == other.lo and self.hi == other.hi

    def contains(self, other):
        return self.chain == other.chain and self.lo <= other.lo and other.hi <= self.hi

    def __eq__(self, other):
        if not isinstance(other, Arc):
            return NotImplemented
        return (self.chain, self.start, self.end) == (other.chain, other.start, other.end)

    def __hash__(self):
        return hash((self.chain, self.start, self.end))

    def __repr__(self):
        return f"Arc(chain={self.chain}, {fmt(self.start)} -> {fmt(self.end)})"

    @property
    def segments(self):
        """(fiber, (u, v), rising) triples in traversal order."""
        ch = self.model.chains[self.chain]
        a, b = self.start, self.end
        if a == b:
            p = self.model.from_global(self.chain, a)
            return [(p.fiber, (p.beta, p.beta), True)]
        step = 1 if b > a else -1
        out = []
        t = a
        while t != b:
            if step > 0:
                k = floor_q(t)
                nxt = min(q(k + 1), b)
            else:
                k = floor_q(t)
                if t == k:
                    k -= 1
                nxt = max(q(k), b)
            fw = ch.forward[k]
            u = t - k if fw else k + 1 - t
            v = nxt - k if fw else k + 1 - nxt
            out.append((ch.fibers[k], (u, v), v > u))
            t = nxt
        return out

    def to_json(self):
        return {
            "chain": self.chain,
            "segments": [
                {"fiber": z, "beta": [fmt(u), fmt(v)]} for z, (u, v), _ in self.segments
            ],
        }

    @classmethod
    def from_json(cls, model, data):
        segs = data["segments"]
        first, last = segs[0], segs[-1]
        a = model.to_global(ModelPoint(first["fiber"], q(first["beta"][0])))
        b = model.to_global(ModelPoint(last["fiber"], q(last["beta"][1])))
        if a[0] != b[0]:
            raise DomainError("arc segments span two chains")
        return cls(model, a[0], a[1], b[1])


def arc_lambda(A):
    return A.hi - A.lo


def arc_join(a, b, model):
    ca, ta = model.to_global(a)
    cb, tb = model.to_global(b)
    if ca != cb:
        raise NoPathError(f"{a} and {b} lie in different arc components")
    return Arc(model, ca, ta, tb)


def k_operators(A, delta):
    """(K1, K2, K): K1 keeps A's first endpoint, K2 the other."""
    delta = q(delta)
    lam = arc_lambda(A)
    if delta <= ZERO or not 2 * delta < lam:
        raise ParameterError(f"need 0 < delta < lambda(A)/2, got delta={fmt(delta)}, lambda={fmt(lam)}")
    d = delta * A.direction
    k1 = Arc(A.model, A.chain, A.start, A.end - d)
    k2 = Arc(A.model, A.chain, A.start + d, A.end)
    k = Arc(A.model, A.chain, A.start + d, A.end - d)
    return k1, k2, k


def h_of(a, A, eps):
    """Points beyond endpoint ``a`` of A within beta-length eps."""
    eps = q(eps)
    if eps <= ZERO:
        raise ParameterError("eps must be positive")
    if arc_lambda(A) == ZERO:
        raise ParameterError("H needs a nondegenerate arc")
    c, t = A.model.to_global(a)
    if c != A.chain or t not in (A.lo, A.hi):
        raise ParameterError(f"{a} is not an endpoint of {A}")
    m = A.model.chains[c].length
    if t == A.lo:
        return Arc(A.model, c, t, max(ZERO, t - eps))
    return Arc(A.model, c, t, min(q(m), t + eps))


def n_of_arc(A, eps):
    eps = q(eps)
    if eps <= ZERO:
        raise ParameterError("eps must be positive")
    if arc_lambda(A) == ZERO:
        raise ParameterError("N needs a nondegenerate arc")
    m = A.model.chains[A.chain].length
    lo = max(ZERO, A.lo - eps)
    hi = min(q(m), A.hi + eps)
    if A.direction > 0:
        return Arc(A.model, A.chain, lo, hi)
    return Arc(A.model, A.chain, hi, lo)


def critical_arcs(model, mesh):
    """All arcs lo < hi with both ends in ``mesh[c]`` (sorted positions)."""
    for c, pts in enumerate(mesh):
        pts = sorted(set(pts))
        for i, a in enumerate(pts):
            for b in pts[i + 1:]:
                yield Arc(model, c, a, b)


def modulus_epsilon(model, eta):
    """A positive eps with diam(A) < eta for every arc with lambda(A) < eps.

    Diameters use the sup metric of the embedding.  Along a chain every
    coordinate is piecewise linear in the global coordinate, so the
    shortest window over which some coordinate varies by eta starts or
    ends at a breakpoint; that window length is returned.
    """
    eta = q(eta)
    if eta <= ZERO:
        raise ParameterError("eta must be positive")
    if model.embedding is None:
        raise CapabilityError("modulus_epsilon needs an embedded model")
    best = None
    for c in range(len(model.chains)):
        for xs, ys in model.coordinate_profiles(c):
            w = _shortest_window(xs, ys, eta)
            if w is not None and (best is None or w < best):
                best = w
    if best is None:
        return q(max(ch.length for ch in model.chains)) + 1
    return best


def _shortest_window(xs, ys, eta):
    best = None
    n = len(xs)
    for i in range(n):
        s, base = xs[i], ys[i]
        # first hit to the right
        for j in range(i, n - 1):
            t = _first_hit(xs[j], xs[j + 1], ys[j], ys[j + 1], base, eta)
            if t is not None:
                if best is None or t - s < best:
                    best = t - s
                break
        # first hit to the left
        for j in range(i, 0, -1):
            t = _first_hit(xs[j], xs[j - 1], ys[j], ys[j - 1], base, eta)
            if t is not None:
                if best is None or s - t < best:
                    best = s - t
                break
    return best


def _first_hit(x0, x1, y0, y1, base, eta):
    """First point from x0 towards x1 where |y - base| reaches eta."""
    hits = []
    for target in (base + eta, base - eta):
        if y0 == target:
            return x0
        if (y0 - target) * (y1 - target) <= 0 and y0 != y1:
            hits.append(x0 + (target - y0) * (x1 - x0) / (y1 - y0))
    if not hits:
        return None
    return min(hits, key=lambda x: abs(x - x0))


def arc_diameter(A):
    """Sup-metric diameter of A under the model embedding."""
    best = ZERO
    for xs, ys in A.model.coordinate_profiles(A.chain):
        vals = [evaluate(xs, ys, A.lo), evaluate(xs, ys, A.hi)]
        vals += [y for x, y in zip(xs, ys) if A.lo < x < A.hi]
        best = max(best, max(vals) - min(vals))
    return best
