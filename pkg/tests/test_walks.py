"""The symbolic lift against the materialized one at small (flagged) q."""
import pytest

from crookedmaps.continuum import interval_model
from crookedmaps.crooked import is_crooked, verify_witness
from crookedmaps.errors import BudgetError
from crookedmaps.crooking import build_g0, g0_params, g_properties, lift_g, zigzag
from crookedmaps.fibmap import d_lambda, identity_map
from crookedmaps.knaster import build_sn
from crookedmaps.plmap import evaluate
from crookedmaps.scalar import Q
from crookedmaps.walks import SymbolicLift, length, steps

CASES = [(Q(1, 2), Q(1, 9), 8), (Q(3, 4), Q(1, 6), 6)]
MODELS = {"interval": interval_model, "s2": lambda: build_sn(2, 1).model}


@pytest.fixture(params=[(c, m) for c in range(len(CASES)) for m in MODELS])
def pair(request):
    c, m = request.param
    eps, gamma, qq = CASES[c]
    model = MODELS[m]()
    g0, params = build_g0(eps, gamma, q_override=qq)
    return eps, gamma, lift_g(model, g0), SymbolicLift(model, params)


def test_step_counts_match_zigzag():
    for n in range(1, 9):
        assert steps(n) == len(zigzag(0, n)) - 1


def test_values_agree(pair):
    _, _, mat, sym = pair
    for c, (tc, xs, ys) in enumerate(mat.chains):
        m = mat.model.chains[c].length
        for k in range(0, 97):
            x = Q(k * m, 96)
            assert sym.value(c, x) == evaluate(xs, ys, x)
        # and at every breakpoint of the materialized map
        for x, y in zip(xs, ys):
            assert sym.value(c, x) == y


def test_piece_bound_covers_pieces(pair):
    _, _, mat, sym = pair
    assert sym.pieces_bound >= mat.pieces


def test_displacement_agrees(pair):
    _, _, mat, sym = pair
    assert sym.displacement_sup() == d_lambda(mat, identity_map(mat.model))


def test_verdicts_agree(pair):
    eps, gamma, mat, sym = pair
    for e, d in [(eps, gamma), (Q(1, 2), Q(1, 8)), (Q(1, 4), Q(1, 16)), (Q(1, 8), Q(1, 8))]:
        v1, v2 = is_crooked(mat, e, d), is_crooked(sym, e, d)
        assert v1.crooked == v2.crooked
        assert v1.vacuous == v2.vacuous
        if not v2.crooked:
            assert v2.witness["independently_checked"]
            assert verify_witness(mat, v2.witness, e, d)


def test_property_flags_agree(pair):
    eps, gamma, mat, sym = pair
    try:
        a = g_properties(mat, eps, gamma)
    except BudgetError:
        pytest.skip("materialized mesh too large for the exhaustive audit")
    b = g_properties(sym, eps, gamma)
    assert a["i"] == b["i"]
    for k in ("iii", "iv", "v"):
        assert a[k]["ok"] == b[k]["ok"]


def test_honest_parameters_stay_symbolic():
    params = g0_params(Q(1, 2), Q(1, 9))
    assert (params.q, params.p) == (36, 10)
    lift = lift_g(interval_model(), params)
    assert isinstance(lift, SymbolicLift)
    assert lift.pieces_bound == params.pieces_bound
