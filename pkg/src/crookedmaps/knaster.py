"""Finite-depth models of the Knaster continua S_n and the shift induced by g_2.

At depth d a point of S_n is (x_0, ..., x_d) with x_k = g_n(x_{k+1}), so it
is determined by x_d.  Fibers are the N = n^d laps of x_0 = g_{n^d}(x_d),
named by the lap indices of x_1 .. x_d.  The only arc component is the
whole interval of x_d values, laid out as t = N * x_d.
"""
import re
from dataclasses import dataclass

from .continuum import Arc, FiberedContinuum, ModelPoint
from .errors import DomainError, ParameterError
from .fibmap import FiberRoutedMap, chain_range
from .plmap import canonical, compose_lists, evaluate, preimage_lists
from .scalar import ONE, ZERO, Q, fmt, q

DEFAULT_MAX_FIBERS = 100_000


def tent_value(k, x):
    """Exact g_k(x)."""
    x = q(x)
    y = k * x
    j = int(y // 1)
    if j == k:
        j = k - 1
    frac = y - j
    return frac if j % 2 == 0 else 1 - frac


def _word(n, d, P):
    """Lap indices of x_1..x_d on fiber P, as a fiber identifier."""
    N = n ** d
    mid = (Q(P) + Q(1, 2)) / N
    laps = []
    for k in range(1, d + 1):
        xk = tent_value(n ** (d - k), mid)
        laps.append(min(int((n * xk) // 1), n - 1))
    sep = "" if n <= 10 else "."
    return sep.join(str(j) for j in laps)


@dataclass(frozen=True)
class SnModel:
    n: int
    depth: int
    model: FiberedContinuum
    words: tuple  # fiber identifier at each position P

    @property
    def N(self):
        return self.n ** self.depth

    def coords(self, t):
        """(x_0, ..., x_depth) at chain position t."""
        xd = q(t) / self.N
        return tuple(tent_value(self.n ** (self.depth - k), xd) for k in range(self.depth + 1))

    def to_json(self):
        out = self.model.to_json()
        out["sn"] = {"n": self.n, "depth": self.depth}
        return out

    @classmethod
    def from_json(cls, data):
        meta = data["sn"]
        built = build_sn(meta["n"], meta["depth"])
        if built.model != FiberedContinuum.from_json(data):
            raise DomainError("serialized S_n model does not match its parameters")
        return built


def build_sn(n, depth, max_fibers=DEFAULT_MAX_FIBERS):
    if not isinstance(n, int) or n < 2:
        raise ParameterError("n must be an integer >= 2")
    if not isinstance(depth, int) or depth < 0:
        raise ParameterError("depth must be a nonnegative integer")
    N = n ** depth
    if N > max_fibers:
        raise ParameterError(f"{N} fibers exceed the limit of {max_fibers}")
    if depth == 0:
        words = ("root",)
    else:
        words = tuple(_word(n, depth, P) for P in range(N))
    embedding = {}
    ends = {}
    for P, z in enumerate(words):
        a = tuple(tent_value(n ** (depth - k), Q(P, N)) for k in range(depth + 1))
        b = tuple(tent_value(n ** (depth - k), Q(P + 1, N)) for k in range(depth + 1))
        # beta = x_0 runs up on even laps
        lo, hi = (a, b) if P % 2 == 0 else (b, a)
        embedding[z] = [list(lo), list(hi)]
        ends.setdefault((0, lo), []).append(z)
        ends.setdefault((1, hi), []).append(z)
    # glue ends whose embedded coordinates coincide
    tau = ({}, {})
    for (end, _), zs in ends.items():
        if len(zs) > 2:
            raise DomainError("more than two fiber ends meet at one point")
        if len(zs) == 2:
            tau[end][zs[0]] = zs[1]
            tau[end][zs[1]] = zs[0]
    model = FiberedContinuum(words, tau[0], tau[1], embedding)
    if len(model.chains) != 1 or model.chains[0].fibers != words:
        raise DomainError("unexpected fiber layout")
    return SnModel(n, depth, model, words)


_REF = re.compile(r"^sn:(\d+):depth=(\d+)$")


def parse_model_ref(ref):
    """``sn:<n>:depth=<d>`` to an SnModel."""
    m = _REF.match(ref.strip())
    if not m:
        raise ParameterError(f"bad model reference {ref!r}; expected sn:<n>:depth=<d>")
    return build_sn(int(m.group(1)), int(m.group(2)))


def induced_shift(sn):
    """Coordinatewise g_2; on the chain t = N x_d it is t -> N g_2(t / N)."""
    N = q(sn.N)
    return FiberRoutedMap(sn.model, [(0, [ZERO, N / 2, N], [ZERO, N, ZERO])])


def special_points(sn):
    """(e, d, J): e = (0, 0, ...), d = (1, 1/n, 1/n^2, ...), J the arc between."""
    m = sn.model
    e = m.from_global(0, ZERO)
    d = m.from_global(0, ONE)
    return e, d, Arc(m, 0, ZERO, ONE)


def n_of(j):
    """2 (4^1 - 1)(4^2 - 1) ... (4^j - 1)."""
    if not isinstance(j, int) or j < 1:
        raise ParameterError("j must be a positive integer")
    out = 2
    for i in range(1, j + 1):
        out *= 4 ** i - 1
    return out


def refine(sn, max_fibers=DEFAULT_MAX_FIBERS):
    """Depth + 1 model and the word-truncation projection on fibers."""
    fine = build_sn(sn.n, sn.depth + 1, max_fibers)
    if sn.depth == 0:
        proj = {z: sn.words[0] for z in fine.words}
    else:
        cut = len(sn.words[0]) if sn.n <= 10 else None
        proj = {}
        for z in fine.words:
            proj[z] = z[:cut] if cut is not None else ".".join(z.split(".")[:-1])
    return fine, proj


def refinement_consistent(sn, fine, proj):
    """tau-paired fibers at depth d+1 truncate to tau-paired or equal fibers."""
    for tau_f, tau_c in ((fine.model.tau_minus, sn.model.tau_minus),
                         (fine.model.tau_plus, sn.model.tau_plus)):
        for z, w in tau_f.items():
            a, b = proj[z], proj[w]
            if a != b and tau_c[a] != b:
                return False
    return True


def doubling_arcs(sn):
    """Arcs between fiber ends and fold points that keep clear of t = N/2."""
    N = sn.N
    mesh = sorted({Q(k) for k in range(N + 1)} | {Q(N, 2)} | {Q(2 * k + 1, 4) for k in range(2 * N)})
    half = Q(N, 2)
    for i, a in enumerate(mesh):
        for b in mesh[i + 1:]:
            if a < half < b:
                continue
            yield Arc(sn.model, 0, a, b)


def check_doubling(sn, shift=None):
    """Count arcs with lambda(g(A)) != 2 lambda(A); returns (checked, failures)."""
    shift = shift or induced_shift(sn)
    _, xs, ys = shift.chains[0]
    checked = bad = 0
    for A in doubling_arcs(sn):
        lo, hi = chain_range(xs, ys, A.lo, A.hi)
        checked += 1
        if hi - lo != 2 * (A.hi - A.lo):
            bad += 1
    return checked, bad


def _phi_lists(sn):
    """g^{-1} from depth d+1 to depth d: x_k = g_{n/2}(y_{k+1}), on chains."""
    n, N = sn.n, sn.N
    half = n // 2
    xs = [Q(2 * k * N) for k in range(half + 1)]
    ys = [ZERO if k % 2 == 0 else q(N) for k in range(half + 1)]
    return xs, ys


def check_s_properties(sn, arc=None):
    """Finite-depth evidence for (S2), (S5), (S6); (S1), (S3), (S4) are structural."""
    n, N = sn.n, sn.N
    report = {
        "n": n,
        "depth": sn.depth,
        "S1": "structural: every proper subcontinuum of the model class is an arc",
        "S3": "structural: e is the free beta=0 end of the chain",
        "S4": "structural: not expressible at finite depth",
    }
    e, d, J = special_points(sn)
    shift = induced_shift(sn)
    _, sx, sy = shift.chains[0]

    # (S2): orbit of d while it stays in the faithful half t <= N/2
    orbit = [ONE]
    while orbit[-1] * 2 <= Q(N, 2):
        orbit.append(evaluate(sx, sy, orbit[-1]))
    A = arc or Arc(sn.model, 0, ZERO, Q(1, 2))
    inside = [A.lo <= t <= A.hi for t in orbit]
    m0 = None
    for m in range(len(orbit)):
        if not any(inside[m:]):
            m0 = m
            break
    report["S2"] = {
        "arc": [fmt(A.lo), fmt(A.hi)],
        "orbit": [fmt(t) for t in orbit],
        "m0": m0,
        "ok": m0 is not None,
    }

    if n % 2:
        report["S5"] = report["S6"] = {"ok": None, "note": "needs even n"}
        return report

    # (S5): g o Phi equals truncation from depth d+1, and g is injective on fold points
    px, py = _phi_lists(sn)
    comp = compose_lists(sx, sy, px, py)
    trunc = canonical([Q(k * N) for k in range(n + 1)],
                      [ZERO if k % 2 == 0 else q(N) for k in range(n + 1)])
    same = (list(comp[0]), list(comp[1])) == (list(trunc[0]), list(trunc[1]))
    folds = [Q(k) for k in range(N // 2 + 1)] if N >= 2 else [ZERO]
    images = [evaluate(sx, sy, t) for t in folds]
    report["S5"] = {
        "shift_after_inverse_is_truncation": same,
        "injective_on_fold_points": len(set(images)) == len(images),
        "ok": same and len(set(images)) == len(images),
    }

    # (S6): preimage of J at matched depth is Phi(J_{d+1})
    jx_lo, jx_hi = chain_range(px, py, ZERO, ONE)
    naive = preimage_lists(sx, sy, ZERO, ONE)
    report["S6"] = {
        "preimage": [fmt(jx_lo), fmt(jx_hi)],
        "inside_J_minus_d": ZERO <= jx_lo and jx_hi < ONE,
        "truncated_preimage_components": [[fmt(a), fmt(b)] for a, b in naive],
        "ok": ZERO <= jx_lo and jx_hi < ONE,
    }
    # g^{-1}(d) at matched depth
    report["S6"]["preimage_of_d"] = fmt(evaluate(px, py, ONE))
    return report


def point(sn, t):
    return sn.model.from_global(0, q(t))


__all__ = [
    "SnModel", "build_sn", "parse_model_ref", "induced_shift", "special_points", "n_of",
    "refine", "refinement_consistent", "check_doubling", "doubling_arcs", "check_s_properties",
    "tent_value", "ModelPoint",
]
