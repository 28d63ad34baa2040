from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crookedmaps.errors import BudgetError, DomainError
from crookedmaps.plmap import (
    PLMap,
    fold,
    identity,
    pl_compose,
    pl_eval,
    pl_iterate,
    preimage_components,
    slope_bounds,
    tent,
)
from crookedmaps.scalar import Q, fmt, q
from helpers import pl_maps

points = st.fractions(min_value=0, max_value=1, max_denominator=97)


def naive_eval(f, x):
    # straight scan, no bisect
    x = Fraction(x)
    pts = [(Fraction(int(a.numerator), int(a.denominator)), Fraction(int(b.numerator), int(b.denominator)))
           for a, b in zip(f.nodes, f.values)]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    raise AssertionError("outside")


def test_tent_values():
    t = tent(2)
    assert [t(x) for x in (0, Q(1, 4), Q(1, 2), Q(3, 4), 1)] == [0, Q(1, 2), 1, Q(1, 2), 0]
    assert tent(1) == identity()
    assert tent(3)(1) == 1


def test_tent_squared_is_tent4():
    assert pl_compose(tent(2), tent(2)) == tent(4)
    assert pl_iterate(tent(2), 3) == tent(8)
    assert pl_compose(tent(3), tent(2)) == tent(6)


def test_canonical_equality():
    f = PLMap([0, Q(1, 2), 1], [0, Q(1, 2), 1])
    assert f == identity() and hash(f) == hash(identity())
    assert f.pieces == 1


@pytest.mark.parametrize(
    "nodes, values",
    [
        ([0], [0]),
        ([Q(1, 4), 1], [0, 1]),
        ([0, Q(1, 2), Q(1, 2), 1], [0, 0, 0, 0]),
        ([0, 1], [0, 3]),
    ],
)
def test_rejects_bad_input(nodes, values):
    with pytest.raises(DomainError):
        PLMap(nodes, values)


def test_floats_refused():
    with pytest.raises(TypeError):
        q(0.5)
    with pytest.raises(ValueError):
        q("0.5")


def test_eval_outside():
    with pytest.raises(DomainError):
        identity()(Q(3, 2))


@given(pl_maps(), points)
def test_eval_matches_naive(f, x):
    assert Fraction(int(f(x).numerator), int(f(x).denominator)) == naive_eval(f, x)


@settings(max_examples=80, deadline=None)
@given(pl_maps(den=1), pl_maps(den=8), points)
def test_compose_pointwise(f, g, x):
    h = pl_compose(f, g)
    assert h(x) == f(g(x))


@settings(max_examples=50, deadline=None)
@given(pl_maps(), pl_maps(), pl_maps(), points)
def test_compose_associative(f, g, h, x):
    assert pl_compose(f, pl_compose(g, h)) == pl_compose(pl_compose(f, g), h)


@given(pl_maps())
def test_json_round_trip(f):
    data = f.to_json()
    assert all(isinstance(s, str) for s in data["nodes"] + data["values"])
    assert PLMap.from_json(data) == f


def test_compose_needs_range_in_unit():
    g = PLMap([0, 1], [0, Q(3, 2)])
    with pytest.raises(DomainError):
        pl_compose(identity(), g)


def test_compose_budget():
    with pytest.raises(BudgetError):
        pl_compose(tent(40), tent(40), budget=100)


def test_slope_bounds():
    assert slope_bounds(tent(3)) == (3, 3)
    assert slope_bounds(PLMap([0, Q(1, 2), 1], [0, Q(1, 4), 1])) == (Q(1, 2), Q(3, 2))


def test_preimage_components():
    assert preimage_components(tent(2), (Q(1, 2), 1)) == [(Q(1, 4), Q(3, 4))]
    assert preimage_components(tent(2), (0, Q(1, 2))) == [(0, Q(1, 4)), (Q(3, 4), 1)]
    with pytest.raises(DomainError):
        preimage_components(tent(2), (Q(1, 2), Q(1, 2)))


@given(pl_maps(), points, points)
def test_preimage_covers(f, a, b):
    lo, hi = sorted((Q(a.numerator, a.denominator), Q(b.numerator, b.denominator)))
    if lo == hi:
        return
    comps = preimage_components(f, (lo, hi))
    for x0, x1 in comps:
        assert lo <= f(x0) <= hi and lo <= f(x1) <= hi
        assert lo <= f((x0 + x1) / 2) <= hi
    for k in range(49):
        x = Q(k, 48)
        inside = any(x0 <= x <= x1 for x0, x1 in comps)
        assert inside == (lo <= f(x) <= hi)


def test_fold():
    g = PLMap([0, 1], [-1, 2])
    h = fold(g)
    assert [h(x) for x in (0, Q(1, 6), Q(1, 3), Q(2, 3), Q(5, 6), 1)] == [1, Q(1, 2), 0, 1, Q(1, 2), 0]
    assert fold(tent(2)) == tent(2)


def test_fmt():
    assert fmt(Q(4, 2)) == "2" and fmt(Q(-3, 6)) == "-1/2"
