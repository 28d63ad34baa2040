"""Shared strategies, generators and independent oracles for the tests."""
import random
from fractions import Fraction

from hypothesis import strategies as st

from crookedmaps.continuum import interval_model
from crookedmaps.crooking import zigzag
from crookedmaps.fibmap import FiberRoutedMap, from_plmap
from crookedmaps.plmap import PLMap
from crookedmaps.scalar import Q


@st.composite
def pl_maps(draw, max_nodes=6, den=8):
    """PLMap on [0, 1] with nodes on a 1/24 grid and values on a 1/den grid."""
    inner = draw(st.lists(st.integers(1, 23), max_size=max_nodes, unique=True))
    xs = [Q(0)] + [Q(k, 24) for k in sorted(inner)] + [Q(1)]
    ys = [Q(draw(st.integers(0, den)), den) for _ in xs]
    return PLMap(xs, ys)


def random_chain_map(rng, length, pieces, den=8, grid=24):
    """Random continuous PL function [0, length] -> [0, length] on rational grids."""
    inner = rng.sample(range(1, grid * length), min(pieces - 1, grid * length - 1))
    xs = [Q(0)] + [Q(k, grid) for k in sorted(inner)] + [Q(length)]
    ys = [Q(rng.randint(0, den * length), den) for _ in xs]
    return xs, ys


def random_fibered_map(rng, model, pieces=5, den=8):
    chains = []
    for c, ch in enumerate(model.chains):
        xs, ys = random_chain_map(rng, ch.length, pieces, den)
        chains.append((c, xs, ys))
    return FiberRoutedMap(model, chains)


def zigzag_map(n, model=None):
    """zigzag(0, n) scaled into [0, 1]; a genuinely crooked map at moderate scales."""
    lv = zigzag(0, n)
    N = len(lv) - 1
    f = PLMap([Q(i, N) for i in range(N + 1)], [Q(v, n) for v in lv])
    return from_plmap(model or interval_model(), f)


def as_fraction(x):
    return Fraction(int(x.numerator), int(x.denominator))


# -- definition-level crookedness oracle (Fractions, no shared code) ---------

def _refine(xs, ys, levels):
    """Vertices of a PL function with extra nodes wherever it crosses a level."""
    out = [(xs[0], ys[0])]
    for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]):
        cuts = []
        for c in levels:
            if (y0 - c) * (y1 - c) < 0:
                cuts.append(x0 + (c - y0) * (x1 - x0) / (y1 - y0))
        for x in sorted(cuts):
            out.append((x, y0 + (y1 - y0) * (x - x0) / (x1 - x0)))
        out.append((x1, y1))
    return out


def _onto_arcs(seq, lo, hi):
    """Minimal subarcs (x_start, x_end) of a vertex sequence mapped exactly onto [lo, hi]."""
    arcs = []
    last_lo = last_hi = None
    for n, (x, y) in enumerate(seq):
        if y == lo:
            if last_hi is not None and (last_lo is None or last_hi > last_lo):
                arcs.append((seq[last_hi][0], x))
            last_lo = n
        elif y == hi:
            if last_lo is not None and (last_hi is None or last_lo > last_hi):
                arcs.append((seq[last_lo][0], x))
            last_hi = n
        elif y < lo or y > hi:
            last_lo = last_hi = None
    return arcs


def passages(seq, a, b):
    """Minimal passages between the levels a and b, as vertex index ranges."""
    last, kind = None, None
    for n, (_, y) in enumerate(seq):
        if y == a or y == b:
            k = "a" if y == a else "b"
            if last is not None and k != kind:
                yield last, n
            last, kind = n, k


def oracle_violation(chain_fns, m, eps, delta, step):
    """First (a, b, passage) violating crookedness, over a grid fine enough to be exhaustive.

    ``step`` must divide every turning value, delta and eps; arcs are taken
    on the step/4 grid, which meets every cell of the arrangement.
    """
    eps, delta, step = Fraction(eps), Fraction(delta), Fraction(step)
    h = step / 4
    n = int(Fraction(m) / h)
    fns = [([Fraction(x) for x in xs], [Fraction(y) for y in ys]) for xs, ys in chain_fns]
    for i in range(n + 1):
        a = i * h
        for j in range(i + 1, n + 1):
            b = j * h
            if not 2 * delta < b - a < eps:
                continue
            lo, hi = a + delta, b - delta
            for xs, ys in fns:
                seq = _refine(xs, ys, (a, lo, hi, b))
                for s, t in passages(seq, a, b):
                    arcs = _onto_arcs(seq[s:t + 1], lo, hi)
                    if not any(e1 < s2 for (_, e1) in arcs for (s2, _) in arcs):
                        return a, b, (seq[s][0], seq[t][0])
    return None


# -- random instances of the distance and neighbourhood inequalities ---------

LATTICE_MODELS = [("interval", None), ("sn", (2, 1)), ("sn", (2, 2)), ("sn", (2, 3)), ("sn", (3, 1))]

# zigzag(0, n)/n and parameters at which it is crooked
CROOKED_BASES = [
    (4, Fraction(3, 4), Fraction(1, 4)),
    (4, Fraction(1), Fraction(1, 4)),
    (5, Fraction(4, 5), Fraction(1, 5)),
    (6, Fraction(1, 2), Fraction(1, 6)),
    (8, Fraction(1, 2), Fraction(1, 8)),
]


def lattice_model(rng):
    from crookedmaps.knaster import build_sn

    kind, arg = rng.choice(LATTICE_MODELS)
    return interval_model() if kind == "interval" else build_sn(*arg).model


def clip_nbhd(lo, hi, r, length):
    """[lo - r, hi + r] cut to the chain."""
    return max(Q(0), lo - r), min(Q(length), hi + r)


def _inside(inner, outer):
    return outer[0] <= inner[0] and inner[1] <= outer[1]


def _random_arc(rng, length, min_len=Q(1, 48)):
    while True:
        a = Q(rng.randint(0, 48 * length), 48)
        b = Q(rng.randint(0, 48 * length), 48)
        if abs(b - a) >= min_len:
            return min(a, b), max(a, b)


def iterate_distance_instance(rng):
    """d(f^j, F^j) against (s + 1)^(j - 1) d(f, F), with s the largest slope of f."""
    from crookedmaps.crooking import prop_2_4_bound
    from crookedmaps.fibmap import d_lambda, fr_iterate, stretch_lipschitz

    model = lattice_model(rng)
    f = random_fibered_map(rng, model, pieces=rng.randint(2, 4), den=4)
    F = random_fibered_map(rng, model, pieces=rng.randint(2, 4), den=4)
    j = rng.randint(1, 4)
    s = stretch_lipschitz(f)[1]
    eta = d_lambda(f, F)
    got = d_lambda(fr_iterate(f, j), fr_iterate(F, j))
    return got <= prop_2_4_bound(s, eta, j)


def neighbourhood_image_instance(rng):
    """f(N(A, e)) inside N(f(A), s e)."""
    from crookedmaps.continuum import Arc, n_of_arc
    from crookedmaps.fibmap import image_arc, stretch_lipschitz

    model = lattice_model(rng)
    f = random_fibered_map(rng, model, pieces=rng.randint(2, 6))
    s = stretch_lipschitz(f)[1]
    length = model.chains[0].length
    lo, hi = _random_arc(rng, length)
    A = Arc(model, 0, lo, hi)
    e = Q(rng.randint(1, 24), 48)
    img = image_arc(f, n_of_arc(A, e))
    fA = image_arc(f, A)
    return _inside((img.lo, img.hi), clip_nbhd(fA.lo, fA.hi, s * e, length))


def _scaled_zigzag(model, n, rng, amp):
    """zigzag(0, n)/n along the chain, values nudged by multiples of amp."""
    lv = zigzag(0, n)
    N = len(lv) - 1
    m = model.chains[0].length
    xs = [Q(i * m, N) for i in range(N + 1)]
    ys = [Q(v * m, n) for v in lv]
    base = FiberRoutedMap(model, [(0, xs, ys)])
    moved = []
    for y in ys:
        y2 = y + amp * rng.randint(-2, 2)
        moved.append(min(Q(m), max(Q(0), y2)))
    # an extra wobble node inside a random piece
    k = rng.randrange(N)
    mid = (xs[k] + xs[k + 1]) / 2
    wob = (moved[k] + moved[k + 1]) / 2 + amp * rng.randint(-2, 2)
    xs2 = xs[: k + 1] + [mid] + xs[k + 1:]
    ys2 = moved[: k + 1] + [min(Q(m), max(Q(0), wob))] + moved[k + 1:]
    return base, FiberRoutedMap(model, [(0, xs2, ys2)])


def perturbation_instance(rng):
    """A crooked f and a nearby F: F is (e, d + 2 d(f, F))-crooked."""
    from crookedmaps.crooked import is_crooked
    from crookedmaps.fibmap import d_lambda

    model = lattice_model(rng)
    m = model.chains[0].length
    n, eps, delta = rng.choice(CROOKED_BASES)
    eps, delta = Q(eps.numerator * m, eps.denominator), Q(delta.numerator * m, delta.denominator)
    amp = (eps - 2 * delta) / 64
    f, F = _scaled_zigzag(model, n, rng, amp)
    assert is_crooked(f, eps, delta).crooked
    eta = d_lambda(f, F)
    return is_crooked(F, eps, delta + 2 * eta).crooked


_GEN_CACHE = {}


def _surrogate_generator(model):
    from crookedmaps.crooking import build_g0, lift_g

    key = model.to_json().__repr__()
    if key not in _GEN_CACHE:
        g0, params = build_g0(Q(1, 2), Q(1, 9), q_override=16)
        _GEN_CACHE[key] = lift_g(model, g0), params.gamma
    return _GEN_CACHE[key]


def orbit_neighbourhood_instance(rng):
    """F = f o g with g pushing N(A, r) into N(g(A), r + gamma) along the orbit.

    Returns None when the premises fail on the sampled arc, else whether
    F^j(N(A, r)) lies in N(F^j(A), s^j (r + 2 gamma)).
    """
    from crookedmaps.continuum import Arc
    from crookedmaps.fibmap import image_arc, working_lipschitz
    from crookedmaps.knaster import build_sn, induced_shift
    from crookedmaps.plmap import tent

    depth = rng.choice([0, 1, 2])
    if depth == 0:
        model = interval_model()
        f = from_plmap(model, tent(2))
    else:
        sn = build_sn(2, depth)
        model, f = sn.model, induced_shift(sn)
    g, gamma = _surrogate_generator(model)
    s = working_lipschitz(f)
    length = model.chains[0].length
    lo, hi = _random_arc(rng, length, min_len=gamma)
    r = gamma * Q(rng.randint(1, 8), 4)
    j = rng.randint(1, 4)
    X = clip_nbhd(lo, hi, r, length)
    B, rr = (lo, hi), r
    for _ in range(j):
        if B[1] - B[0] < gamma:
            return None
        gB = image_arc(g, Arc(model, 0, *B))
        gN = image_arc(g, Arc(model, 0, *clip_nbhd(B[0], B[1], rr, length)))
        if not _inside((gN.lo, gN.hi), clip_nbhd(gB.lo, gB.hi, rr + gamma, length)):
            return None
        gX = image_arc(g, Arc(model, 0, *X))
        fX = image_arc(f, gX)
        fB = image_arc(f, gB)
        X, B, rr = (fX.lo, fX.hi), (fB.lo, fB.hi), s * (rr + gamma)
    return _inside(X, clip_nbhd(B[0], B[1], s ** j * (r + 2 * gamma), length))
