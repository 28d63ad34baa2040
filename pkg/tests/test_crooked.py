import json
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from crookedmaps.continuum import Arc, interval_model
from crookedmaps.crooked import (
    crooked_split,
    grid_falsifier,
    is_crooked,
    verify_witness,
)
from crookedmaps.errors import BudgetError, ParameterError
from crookedmaps.fibmap import chain_range, from_plmap
from crookedmaps.knaster import build_sn
from crookedmaps.plmap import identity, tent
from crookedmaps.scalar import Q
from helpers import oracle_violation, pl_maps, random_fibered_map, zigzag_map


def fns(f):
    return [(xs, ys) for _, xs, ys in f.chains]


def on_interval(g):
    return from_plmap(interval_model(), g)


EIGHTHS = st.integers(1, 8).map(lambda k: Fraction(k, 8))


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(pl_maps(max_nodes=5, den=8), EIGHTHS, EIGHTHS)
def test_agrees_with_grid_oracle(g, eps, delta):
    f = on_interval(g)
    v = is_crooked(f, Q(eps.numerator, eps.denominator), Q(delta.numerator, delta.denominator))
    bad = oracle_violation(fns(f), 1, eps, delta, Fraction(1, 8))
    assert v.crooked == (bad is None)
    if not v.crooked:
        assert verify_witness(f, v.witness, v.eps, v.delta)


def test_agrees_with_oracle_on_s2(rng):
    model = build_sn(2, 1).model
    for _ in range(8):
        f = random_fibered_map(rng, model, pieces=4, den=4)
        eps, delta = Fraction(3, 4), Fraction(1, 4)
        v = is_crooked(f, Q(3, 4), Q(1, 4))
        bad = None
        for tc, ch in enumerate(model.chains):
            src = [(xs, ys) for t, xs, ys in f.chains if t == tc]
            if src:
                bad = bad or oracle_violation(src, int(ch.length), eps, delta, Fraction(1, 4))
        assert v.crooked == (bad is None)


@pytest.mark.parametrize(
    "n, eps, delta, step",
    [
        (4, Q(3, 4), Q(1, 4), Fraction(1, 4)),
        (4, Q(1), Q(1, 4), Fraction(1, 4)),
        (4, Q(1), Q(3, 8), Fraction(1, 8)),
        (5, Q(3, 5), Q(1, 5), Fraction(1, 5)),
        (6, Q(1, 2), Q(1, 6), Fraction(1, 6)),
        (8, Q(3, 8), Q(1, 8), Fraction(1, 8)),
    ],
)
def test_zigzags_are_crooked(n, eps, delta, step):
    f = zigzag_map(n)
    v = is_crooked(f, eps, delta)
    assert v.crooked and not v.vacuous
    assert v.candidates_checked > 0
    assert oracle_violation(fns(f), 1, Fraction(int(eps.numerator), int(eps.denominator)),
                            Fraction(int(delta.numerator), int(delta.denominator)), step) is None


def test_identity_is_not_crooked():
    f = on_interval(identity())
    v = is_crooked(f, 1, Q(1, 8))
    assert not v.crooked
    w = v.witness
    assert w["C"].same_set(Arc(f.model, 0, w["A"].lo, w["A"].hi))
    assert verify_witness(f, w, 1, Q(1, 8))


def test_tent_monotone_witness():
    f = on_interval(tent(2))
    v = is_crooked(f, 1, Q(1, 8))
    assert not v.crooked
    C = v.witness["C"]
    # the tent is monotone on either half, so C sits in one of them
    assert C.hi <= Q(1, 2) or C.lo >= Q(1, 2)


def test_vacuous_when_eps_small():
    v = is_crooked(on_interval(identity()), Q(1, 4), Q(1, 8))
    assert v.crooked and v.vacuous and v.candidates_checked == 0


def test_bad_parameters():
    with pytest.raises(ParameterError):
        is_crooked(on_interval(identity()), 0, Q(1, 8))


def test_budget():
    with pytest.raises(BudgetError):
        is_crooked(zigzag_map(8), Q(3, 8), Q(1, 8), budget=3)


def test_verdict_json_is_stable():
    f = on_interval(identity())
    a = json.dumps(is_crooked(f, 1, Q(1, 8)).to_json(), sort_keys=True)
    b = json.dumps(is_crooked(f, 1, Q(1, 8)).to_json(), sort_keys=True)
    assert a == b and "elapsed_seconds" not in a
    assert json.loads(a)["witness"]["A_global"][0] == "0"


def test_crooked_split_on_zigzag():
    f = zigzag_map(4)
    A = Arc(f.model, 0, Q(1, 8), Q(3, 4))
    parts = crooked_split(f, 1, Q(1, 4), A)
    assert parts
    xs, ys = f.chains[0][1:]
    for C, c1, c2 in parts:
        assert C.contains(c1) and C.contains(c2)
        assert c1.hi < c2.lo or c2.hi < c1.lo
        assert chain_range(xs, ys, c1.lo, c1.hi) == (A.lo, A.hi - Q(1, 4))
        assert chain_range(xs, ys, c2.lo, c2.hi) == (A.lo + Q(1, 4), A.hi)


def test_crooked_split_rejects_short_arc():
    f = zigzag_map(4)
    with pytest.raises(ParameterError):
        crooked_split(f, 1, Q(1, 4), Arc(f.model, 0, Q(0), Q(1, 4)))


def test_falsifier_consistent(rng):
    for k in range(20):
        f = random_fibered_map(rng, interval_model(), pieces=5)
        w = grid_falsifier(f, Q(1, 2), Q(1, 16), resolution=32, seed=k)
        v = is_crooked(f, Q(1, 2), Q(1, 16))
        if w is not None:
            assert not v.crooked
            assert verify_witness(f, w, Q(1, 2), Q(1, 16))


def test_falsifier_finds_nothing_on_zigzag():
    assert grid_falsifier(zigzag_map(4), Q(3, 4), Q(1, 4), resolution=64) is None
