"""The crooked generator g0, its lift to a fibered model, and the builders
that use it (F = f o g, and the staged driver)."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .continuum import Arc, k_operators
from .crooked import is_crooked
from .errors import BudgetError, DomainError, ParameterError
from .fibmap import (INFINITE, FiberRoutedMap, d_lambda, fr_compose, stretch_lipschitz,
                     working_lipschitz)
from .plmap import PLMap, slopes
from .scalar import ONE, ZERO, Q, ceil_q, default_budget, floor_q, fmt, q


MAX_COUNTED_P = 5000


@lru_cache(maxsize=None)
def zigzag_steps(n):
    """Number of unit steps in zigzag(a, a + n)."""
    n = abs(n)
    if n <= 2:
        return n
    a, b = 1, 2
    for _ in range(n - 2):
        a, b = b, 2 * b + a
    return b


def zigzag(a, b):
    """Crooked level walk from a to b with unit steps."""
    out = [a]
    _zz_into(a, b, out)
    return out


def _zz_into(a, b, out):
    # appends the walk after its first vertex
    d = b - a
    if abs(d) <= 2:
        s = 1 if d > 0 else -1
        out.extend(range(a + s, b + s, s) if d else [])
        return
    s = 1 if d > 0 else -1
    _zz_into(a, b - s, out)
    _zz_into(b - s, a + s, out)
    _zz_into(a + s, b, out)


@dataclass(frozen=True)
class G0Params:
    eps: object
    gamma: object
    q: int
    mu: object
    p: int
    surrogate: bool = False

    @property
    def steps_per_cell(self):
        """Exact unit steps per cell, or None when p is too large to count."""
        p = self.p
        if p > MAX_COUNTED_P:
            return None
        return zigzag_steps(p) + zigzag_steps(2 * p) + zigzag_steps(p + 1)

    @property
    def pieces_bound(self):
        """Unit steps of g0, an upper bound on its piece count (None: astronomical)."""
        steps = self.steps_per_cell
        return None if steps is None else self.q * steps

    def fits(self, budget):
        bound = self.pieces_bound
        return bound is not None and bound <= budget

    def to_json(self):
        bound = self.pieces_bound
        return {
            "eps": fmt(self.eps),
            "gamma": fmt(self.gamma),
            "q": self.q,
            "mu": fmt(self.mu),
            "p": self.p,
            "pieces_bound": _magnitude(bound) if bound is not None else _log_magnitude(self),
            "surrogate": self.surrogate,
        }


def g0_params(eps, gamma, q_override=None):
    """q least with q*gamma >= 4, mu = 1/q, mu(p-2) < eps/2 <= mu(p-1)."""
    eps, gamma = q(eps), q(gamma)
    if not ZERO < eps < ONE:
        raise ParameterError(f"eps must lie in (0, 1), got {fmt(eps)}")
    if not ZERO < gamma < eps / 4:
        raise ParameterError(f"gamma must lie in (0, eps/4), got {fmt(gamma)}")
    qq = int(ceil_q(4 / gamma)) if q_override is None else int(q_override)
    p = int(ceil_q(qq * eps / 2)) + 1
    if p > qq:
        raise ParameterError(f"p = {p} exceeds q = {qq}")
    return G0Params(eps, gamma, qq, Q(1, qq), p, surrogate=q_override is not None)


def cell_levels(i, p):
    """Level walk of g0 over cell i (in units of mu)."""
    out = zigzag(i, i + p)
    _zz_into(i + p, i - p, out)
    _zz_into(i - p, i + 1, out)
    return out


def build_g0(eps, gamma, budget=None, q_override=None):
    """Materialize g0 as a PLMap; raises BudgetError when too large.

    ``q_override`` replaces the canonical q (a flagged surrogate).
    """
    params = g0_params(eps, gamma, q_override)
    budget = default_budget() if budget is None else budget
    need = params.pieces_bound
    if not params.fits(budget):
        raise BudgetError(
            f"g0 needs {_magnitude(need) if need else _log_magnitude(params)} unit steps, budget is {budget}",
            required=need,
            budget=budget,
            report=params.to_json(),
        )
    qq, p = params.q, params.p
    steps = params.steps_per_cell
    xs, ys = [ZERO], [ZERO]
    for i in range(qq):
        lv = cell_levels(i, p)
        for k in range(1, len(lv)):
            xs.append(Q(i * steps + k, qq * steps))
            ys.append(Q(lv[k], qq))
    return PLMap(xs, ys), params


def lift_g(model, g0):
    """Route g0 through every fiber, spilling past 1 into tau+ and below 0 into tau-."""
    if not isinstance(g0, PLMap):
        from .walks import SymbolicLift

        return SymbolicLift(model, g0)
    xs, ys = _cut(g0.nodes, g0.values)
    laps = {}
    for z in model.fibers:
        out = []
        for i in range(len(xs) - 1):
            u, v, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
            mid = (y0 + y1) / 2
            if mid > ONE:
                target, b0, b1 = model.tau_plus[z], 2 - y0, 2 - y1
            elif mid < ZERO:
                target, b0, b1 = model.tau_minus[z], -y0, -y1
            else:
                target, b0, b1 = z, y0, y1
            slope = (b1 - b0) / (v - u)
            out.append((u, v, slope, b0 - slope * u, target))
        laps[z] = out
    return FiberRoutedMap.from_laps(model, laps)


def _cut(xs, ys):
    """Insert nodes where values cross 0 or 1."""
    out_x, out_y = [xs[0]], [ys[0]]
    for k in range(len(xs) - 1):
        x0, x1, y0, y1 = xs[k], xs[k + 1], ys[k], ys[k + 1]
        cuts = (ZERO, ONE) if y0 < y1 else (ONE, ZERO)
        for c in cuts:
            if (y0 - c) * (y1 - c) < 0:
                out_x.append(x0 + (c - y0) * (x1 - x0) / (y1 - y0))
                out_y.append(c)
        out_x.append(x1)
        out_y.append(y1)
    return out_x, out_y


# -- certificates for the lifted generator ----------------------------------


def _sparse(seg, fn):
    """Sparse table for range min/max over a 1-d array."""
    table = [seg]
    k = 1
    while 2 * k <= len(seg):
        prev = table[-1]
        table.append(fn(prev[:-k], prev[k:]))
        k *= 2
    return table


def _query(table, fn, i, j):
    """Reduce seg[i:j] (vectorized over arrays i, j with j > i)."""
    n = j - i
    lg = np.zeros_like(n)
    m = n.copy()
    while True:
        more = m >= 2
        if not more.any():
            break
        lg = lg + more
        m = np.where(more, m // 2, m)
    out = None
    for k in np.unique(lg):
        sel = lg == k
        t = table[int(k)]
        w = 1 << int(k)
        part = fn(t[i[sel]], t[j[sel] - w])
        if out is None:
            out = np.empty(len(i), dtype=part.dtype)
        out[sel] = part
    return out


class _Profile:
    """Exact values and segment ranges of one chain on a finite mesh, in integer units."""

    def __init__(self, positions, values, seg_lo, seg_hi, unit, base):
        dtype = np.int64 if max(abs(int(v)) for v in list(positions) + list(values)) < 2**62 else object
        self.P = np.array(positions, dtype=dtype)
        self.Y = np.array(values, dtype=dtype)
        self.unit = unit
        self.base = np.array(base, dtype=bool)
        self.lo = _sparse(np.array(seg_lo, dtype=dtype), np.minimum)
        self.hi = _sparse(np.array(seg_hi, dtype=dtype), np.maximum)
        self.index = {int(p): k for k, p in enumerate(positions)}

    def ranges(self, i, j):
        lo = _query(self.lo, np.minimum, i, j)
        hi = _query(self.hi, np.maximum, i, j)
        return lo, hi


def _profiles(g, shifts, max_mesh=3000):
    """One _Profile per chain; ``shifts`` are extra offsets closed into the mesh."""
    if isinstance(g, FiberRoutedMap):
        need = max(len(xs) for _, xs, _ in g.chains)
        if need > max_mesh:
            raise BudgetError(
                f"{need} breakpoints exceed the mesh limit {max_mesh}; use the symbolic lift",
                required=need, budget=max_mesh,
            )
        return [_profile_materialized(xs, ys, q(g.model.chains[c].length), shifts)
                for c, (_, xs, ys) in enumerate(g.chains)]
    return [_profile_symbolic(g, c, shifts) for c in range(len(g.walks))]


def _lcm_den(vals):
    from math import lcm

    d = 1
    for v in vals:
        d = lcm(d, int(v.denominator))
    return d


def _profile_materialized(xs, ys, m, shifts):
    from .fibmap import chain_range
    from .plmap import evaluate

    base = sorted(set(xs))
    pts = set(base)
    for r in shifts:
        for x in base:
            pts.add(max(ZERO, x - r))
            pts.add(min(m, x + r))
    pts = sorted(pts)
    vals = [evaluate(xs, ys, x) for x in pts]
    seg = [chain_range(xs, ys, a, b) for a, b in zip(pts, pts[1:])]
    unit = _lcm_den(pts + vals + [m])
    base_set = set(base)
    return _Profile(
        [int(x * unit) for x in pts], [int(y * unit) for y in vals],
        [int(s[0] * unit) for s in seg], [int(s[1] * unit) for s in seg],
        unit, [x in base_set for x in pts],
    )


def _profile_symbolic(g, c, shifts):
    w = g.walks[c]
    qq, V, p = g.q, g.V, g.p
    ch = g.model.chains[c]
    fw_legs = (zigzag_steps(p), zigzag_steps(p) + zigzag_steps(2 * p))
    rv_legs = (zigzag_steps(p + 1), zigzag_steps(p + 1) + zigzag_steps(2 * p))
    base = set()
    for k, fw in enumerate(ch.forward):
        for j in range(qq):
            s = (k * qq + j) * V
            for off in (0,) + (fw_legs if fw else rv_legs):
                for d in (-2, -1, 0, 1, 2):
                    if 0 <= s + off + d <= w.n:
                        base.add(s + off + d)
    base.add(w.n)
    # shifts in vertex units; denominators force a finer common unit
    sh = [r * qq * V for r in shifts]
    D = _lcm_den([Q(1)] + sh)
    pts = {Q(b) for b in base}
    for r in sh:
        for b in base:
            pts.add(max(ZERO, b - r))
            pts.add(min(Q(w.n), b + r))
    pts = sorted(pts)

    def value(x):
        k = int(x // 1)
        if k == x:
            return Q(w.level_at(k))
        y0, y1 = w.level_at(k), w.level_at(k + 1)
        return y0 + (x - k) * (y1 - y0)

    vals = [value(x) for x in pts]
    lo_s, hi_s = [], []
    for (a, b), ya, yb in zip(zip(pts, pts[1:]), vals, vals[1:]):
        lo, hi = min(ya, yb), max(ya, yb)
        ia, ib = -int((-a) // 1), int(b // 1)
        if ia <= ib:
            r0, r1 = w.range_between(ia, ib)
            lo, hi = min(lo, r0), max(hi, r1)
        lo_s.append(lo)
        hi_s.append(hi)
    # positions in units 1/(q V D); levels scale by V D
    unit_p, unit_y = D, V * D
    base_set = {Q(b) for b in base}
    return _Profile(
        [int(x * unit_p) for x in pts], [int(y * unit_y) for y in vals],
        [int(y * unit_y) for y in lo_s], [int(y * unit_y) for y in hi_s],
        qq * V * D, [x in base_set for x in pts],
    )


def _displacement(g):
    if isinstance(g, FiberRoutedMap):
        return max(abs(y - x) for _, xs, ys in g.chains for x, y in zip(xs, ys))
    return g.displacement_sup()


def g_properties(g, eps, gamma, r_values=None):
    """Exact audit of (i), (iii), (iv), (v) for a lifted generator.

    (i) is checked over every point; the others over the critical family:
    arcs whose ends lie on cell and leg boundaries (plus two steps either
    side) or, for materialized maps, on breakpoints.
    """
    eps, gamma = q(eps), q(gamma)
    rs = [gamma / 2, gamma, 2 * gamma] if r_values is None else [q(r) for r in r_values]
    disp = _displacement(g)
    report = {
        "i": {"ok": disp < eps / 2 + gamma, "sup": fmt(disp), "bound": fmt(eps / 2 + gamma)},
        "iii": {"ok": True, "arcs": 0},
        "iv": {"ok": True, "arcs": 0},
        "v": {"ok": True, "checks": 0, "r": [fmt(r) for r in rs]},
    }
    for c, prof in enumerate(_profiles(g, rs)):
        u = prof.unit
        P, base_idx = prof.P, np.flatnonzero(prof.base)
        g_u = int(gamma * u) if (gamma * u).denominator == 1 else None
        half = eps * u / 2
        end = P[-1]
        for n, i in enumerate(base_idx[:-1]):
            js = base_idx[n + 1:]
            ii = np.full(len(js), i)
            lo, hi = prof.ranges(ii, js)
            lam = P[js] - P[i]
            glam = hi - lo
            bad = np.flatnonzero(glam < lam)
            report["iii"]["arcs"] += len(js)
            if len(bad) and report["iii"]["ok"]:
                report["iii"].update(ok=False, chain=c, counterexample=_arc_u(P, i, js[bad[0]], u))
            long_ = lam >= g_u if g_u is not None else np.array([Q(int(v)) >= gamma * u for v in lam])
            report["iv"]["arcs"] += int(long_.sum())
            bad = np.flatnonzero(long_ & np.array([Q(int(v)) <= half for v in glam]))
            if len(bad) and report["iv"]["ok"]:
                report["iv"].update(ok=False, chain=c, counterexample=_arc_u(P, i, js[bad[0]], u))
            sel = js[long_]
            if not len(sel):
                continue
            for r in rs:
                ru = r * u
                if ru.denominator != 1:
                    raise ParameterError("shift not on the mesh unit")
                ru = int(ru)
                a = max(0, int(P[i]) - ru)
                ia = prof.index[a]
                bs = np.minimum(P[sel] + ru, end)
                ib = np.array([prof.index[int(b)] for b in bs])
                nlo, nhi = prof.ranges(np.full(len(ib), ia), ib)
                glo, ghi = lo[long_], hi[long_]
                slack = ru + (g_u if g_u is not None else 0)
                bad = np.flatnonzero((nlo < glo - slack) | (nhi > ghi + slack))
                report["v"]["checks"] += len(sel)
                if len(bad) and report["v"]["ok"]:
                    report["v"].update(ok=False, chain=c, r=fmt(r),
                                       counterexample=_arc_u(P, i, sel[bad[0]], u))
    report["ok"] = all(report[k]["ok"] for k in ("i", "iii", "iv", "v"))
    return report


def _arc_u(P, i, j, u):
    return [fmt(Q(int(P[i]), u)), fmt(Q(int(P[j]), u))]


# -- the F = f o g builder and the staged driver --------------------------

def find_core_subarc(C, eps, nu, gamma):
    """An arc G inside C with 2 gamma < lambda(G) < eps and C within N(G, nu)."""
    eps, nu, gamma = q(eps), q(nu), q(gamma)
    lam = C.hi - C.lo
    if not 2 * gamma < lam:
        raise ParameterError(f"lambda(C) = {fmt(lam)} must exceed 2 gamma = {fmt(2 * gamma)}")
    if lam < eps:
        return C
    if not lam < eps + 2 * nu:
        raise ParameterError(f"lambda(C) = {fmt(lam)} must be below eps + 2 nu")
    lo, hi = lam - eps, min(lam - eps + gamma, 2 * nu)
    if not lo < hi:
        raise ParameterError("no admissible kappa")
    kappa = (lo + hi) / 2
    return k_operators(C, kappa / 2)[2]


def prop_2_4_bound(s, eta, j):
    """(s + 1)^(j - 1) * eta."""
    if not isinstance(j, int) or j < 1:
        raise ParameterError("j must be a positive integer")
    return (q(s) + 1) ** (j - 1) * q(eta)


def least_power(sigma, eps, mu):
    """Least n >= 1 with sigma^n * eps > 2 mu."""
    sigma, eps, mu = q(sigma), q(eps), q(mu)
    if sigma <= ONE:
        raise ParameterError("sigma must exceed 1")
    n, x = 1, sigma * eps
    while not x > 2 * mu:
        n += 1
        x *= sigma
    return n


def lemma_recipe(sigma, s, eta, delta, mu):
    """eps = eta/s, n least with sigma^n eps > 2 mu, gamma half of min(eps/4, delta s^-n / 4)."""
    sigma, s, eta, delta, mu = (q(v) for v in (sigma, s, eta, delta, mu))
    if not s > 2:
        raise ParameterError("working Lipschitz constant must exceed 2")
    for name, v in (("eta", eta), ("delta", delta), ("mu", mu)):
        if v <= ZERO:
            raise ParameterError(f"{name} must be positive")
    eps = eta / s
    n = least_power(sigma, eps, mu)
    bound = min(eps / 4, delta / s ** n / 4)
    return {"eps": eps, "n": n, "gamma_bound": bound, "gamma": bound / 2, "s": s}


def _magnitude(n):
    digits = len(str(n))
    return str(n) if digits <= 12 else f"~10^{digits - 1}"


def _log_magnitude(params):
    # zigzag(0, 2p) has about (1 + sqrt 2)^(2p) steps
    exp = int(2 * params.p * 0.3827757) + len(str(params.q)) - 1
    return f"~10^{exp}"


def surrogate_q(eps):
    """Coarse mesh for a flagged stand-in generator: p comes out as 2 or 3."""
    return max(int(floor_q(4 / q(eps))), 2)


def stretch_audit(F, sigma):
    lo, hi = stretch_lipschitz(F)
    monotone = all(
        all(s > 0 for s in slopes(xs, ys)) or all(s < 0 for s in slopes(xs, ys))
        for _, xs, ys in F.chains
    )
    return {
        "min_slope": fmt(lo),
        "max_slope": fmt(hi),
        "sigma": fmt(sigma),
        "ok": lo >= q(sigma),
        # min slope bounds arc stretch from below only for monotone maps
        "fold_free": monotone,
    }


def crooked_ladder(G, mu, delta, budget=None, rungs=3):
    """Search (mu*, delta*) pairs, nearest to (mu, delta) first, for a crooked verdict."""
    mu, delta = q(mu), q(delta)
    pairs = [(mu, delta)]
    for k in range(1, rungs + 1):
        pairs.append((mu, delta * 2 ** k))
        pairs.append((mu / 2 ** k, delta))
    longest = max(ch.length for ch in G.model.chains)
    tried = []
    for m_, d_ in pairs:
        # no arc has 2 delta < lambda < mu: the check would pass with nothing to check
        if not m_ > 2 * d_ or not longest > 2 * d_:
            continue
        try:
            v = is_crooked(G, m_, d_, budget)
        except BudgetError as exc:
            tried.append({"mu": fmt(m_), "delta": fmt(d_), "outcome": "inconclusive",
                          "required": exc.required})
            continue
        entry = {"mu": fmt(m_), "delta": fmt(d_),
                 "outcome": "crooked" if v.crooked else "not crooked"}
        if not v.crooked:
            entry["witness"] = v.to_json()["witness"]
        tried.append(entry)
        if v.crooked:
            return {"ok": True, "mu": fmt(m_), "delta": fmt(d_), "tried": tried}
    return {"ok": False, "tried": tried}


def _power(F, n, budget):
    """F^k for the largest k <= n that fits the budget."""
    out, k = F, 1
    while k < n:
        try:
            nxt = fr_compose(F, out, budget)
        except BudgetError:
            break
        out, k = nxt, k + 1
    return out, k


def lemma_2_12_build(f, sigma, eta, delta, mu, budget=None, s=None, crooked_budget=None):
    """F = f o g with d_lambda(f, F) < eta; returns (F, n, params, certificates).

    The generator follows the exact recipe when it fits the piece budget;
    otherwise a coarse stand-in generator is used and flagged.
    """
    budget = default_budget() if budget is None else budget
    sigma = q(sigma)
    s = working_lipschitz(f) if s is None else q(s)
    rec = lemma_recipe(sigma, s, eta, delta, mu)
    eps, gamma, n = rec["eps"], rec["gamma"], rec["n"]
    params = {k: (fmt(v) if k != "n" else v) for k, v in rec.items()}
    params.update(sigma=fmt(sigma), eta=fmt(eta), delta=fmt(delta), mu=fmt(mu))
    recipe = g0_params(eps, gamma)
    params["g0"] = recipe.to_json()
    flags = {}
    if recipe.fits(budget):
        g0, used = build_g0(eps, gamma, budget)
    else:
        g0, used = build_g0(eps, gamma, budget, q_override=surrogate_q(eps))
        flags["generator"] = (
            f"recipe g0 needs {recipe.to_json()['pieces_bound']} unit steps; "
            f"built q={used.q}, p={used.p} instead"
        )
    params["g0_used"] = used.to_json()
    F = fr_compose(f, lift_g(f.model, g0), budget)
    dist = d_lambda(f, F)
    certs = {
        "stretch": stretch_audit(F, sigma),
        "d_lambda": {"value": fmt(dist) if dist is not INFINITE else "INFINITE",
                     "eta": fmt(eta), "ok": dist < q(eta)},
    }
    Fn, k = _power(F, n, budget)
    if k < n:
        flags["power"] = f"F^{n} exceeds the piece budget; checked F^{k}"
    ladder = crooked_ladder(Fn, mu, delta, crooked_budget)
    ladder["power"] = k
    if flags or ladder.get("mu") != fmt(mu) or ladder.get("delta") != fmt(delta):
        flags["crooked"] = "crookedness checked at surrogate parameters"
    certs["crooked"] = ladder
    certs["surrogate"] = flags
    return F, n, params, certs


def _jsonable(v):
    if v is INFINITE:
        return "INFINITE"
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    return fmt(v)


@dataclass
class StageReport:
    stage: int
    n: int
    eta: object
    gamma: object
    d_lambda: object  # d_lambda(f_{i-1}, f_i), possibly INFINITE
    params: dict
    certificates: dict
    surrogate: dict
    map: FiberRoutedMap = None
    map_file: str = None

    @property
    def condition_ii(self):
        return self.d_lambda < Q(1, 2 ** self.stage) * q(self.params["eps_total"])

    def to_json(self):
        return {
            "stage": self.stage,
            "n": self.n,
            "eta": fmt(self.eta),
            "gamma": fmt(self.gamma),
            "d_lambda": _jsonable(self.d_lambda),
            "params": _jsonable(self.params),
            "certificates": _jsonable(self.certificates),
            "surrogate": _jsonable(self.surrogate),
            "map_file": self.map_file,
        }

    @classmethod
    def from_json(cls, data, map=None):
        d = data["d_lambda"]
        return cls(
            stage=data["stage"],
            n=data["n"],
            eta=q(data["eta"]),
            gamma=q(data["gamma"]),
            d_lambda=INFINITE if d == "INFINITE" else q(d),
            params=data["params"],
            certificates=data["certificates"],
            surrogate=data["surrogate"],
            map=map,
            map_file=data.get("map_file"),
        )


def stage_parameters(i):
    """(delta, mu) for stage i: (1/4, 1) first, then (2^-i - 2^-2i, i)."""
    if i == 1:
        return Q(1, 4), Q(1)
    return Q(1, 2 ** i) - Q(1, 4 ** i), Q(i)


def theorem_2_13_drive(f0, sigma, eps, stages, budget=None, crooked_budget=None):
    """Stages f_1 .. f_stages; returns (reports, summary).

    Budget exhaustion ends the run early with a truncation record in the
    summary instead of raising.
    """
    eps, sigma = q(eps), q(sigma)
    if eps <= ZERO:
        raise ParameterError("eps must be positive")
    if not isinstance(stages, int) or stages < 1:
        raise ParameterError("stages must be a positive integer")
    reports, ns = [], []
    prev = f0
    truncated = None
    for i in range(1, stages + 1):
        delta, mu = stage_parameters(i)
        s = working_lipschitz(prev)
        cap = Q(1, 2 ** i) * eps
        flags = {}
        if i == 1:
            eta = eps / 2
        else:
            bound = min(Q(1, 2 ** (k + i + 1)) / (s + 1) ** (n_k - 1) for k, n_k in enumerate(ns, 1))
            eta = min(cap, bound)
        try:
            F, n, params, certs = lemma_2_12_build(prev, sigma, eta, delta, mu, budget, s, crooked_budget)
        except BudgetError as exc:
            if eta == cap:
                truncated = {"stage": i, "reason": str(exc), "report": _jsonable(exc.report)}
                break
            flags["eta"] = f"eta {fmt(eta)} from the iterate bound is infeasible; used {fmt(cap)}"
            eta = cap
            try:
                F, n, params, certs = lemma_2_12_build(prev, sigma, eta, delta, mu, budget, s, crooked_budget)
            except BudgetError as exc2:
                truncated = {"stage": i, "reason": str(exc2), "report": _jsonable(exc2.report)}
                break
        flags.update(certs.pop("surrogate"))
        params["eps_total"] = fmt(eps)
        raw = certs["d_lambda"]["value"]
        dist = INFINITE if raw == "INFINITE" else q(raw)
        # crookedness carried over from earlier stages
        earlier = {}
        for k, n_k in enumerate(ns, 1):
            Gk, got = _power(F, n_k, budget)
            dk = Q(1, 2 ** k) - Q(1, 2 ** (k + i))
            lad = crooked_ladder(Gk, Q(k), dk, crooked_budget)
            lad["power"] = got
            earlier[str(k)] = lad
            if got < n_k or lad.get("mu") != fmt(k) or lad.get("delta") != fmt(dk):
                flags[f"crooked_{k}"] = "checked at surrogate parameters"
        certs["crooked_earlier"] = earlier
        ns.append(n)
        reports.append(StageReport(i, n, eta, q(params["gamma"]), dist, params, certs, flags, map=F))
        prev = F
    total = ZERO
    for r in reports:
        total = total + r.d_lambda if r.d_lambda is not INFINITE else INFINITE
        if total is INFINITE:
            break
    summary = {
        "stages_completed": len(reports),
        "stages_requested": stages,
        "telescoping_sum": _jsonable(total),
        "telescoping_ok": total < eps,
        "conditions_ii": [r.condition_ii for r in reports],
        "truncated": truncated,
    }
    if reports:
        direct = d_lambda(f0, reports[-1].map)
        summary["d_lambda_total"] = _jsonable(direct)
        summary["total_ok"] = direct < eps
    return reports, summary
