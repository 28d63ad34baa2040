import pytest
from hypothesis import given
from hypothesis import strategies as st

from crookedmaps.continuum import (
    Arc,
    FiberedContinuum,
    ModelPoint,
    arc_diameter,
    arc_join,
    arc_lambda,
    critical_arcs,
    h_of,
    interval_model,
    k_operators,
    modulus_epsilon,
    n_of_arc,
)
from crookedmaps.errors import CapabilityError, DomainError, NoPathError, ParameterError
from crookedmaps.scalar import Q


def three_fibers():
    # a -(+)- b -(-)- c, with b running backwards along the chain
    return FiberedContinuum(["a", "b", "c"], tau_minus={"b": "c", "c": "b"}, tau_plus={"a": "b", "b": "a"})


def test_interval_layout(interval):
    assert len(interval.chains) == 1
    assert interval.chains[0].length == 1
    assert interval.to_global(ModelPoint("I", Q(1, 3))) == (0, Q(1, 3))


def test_chain_layout_and_orientation():
    m = three_fibers()
    (ch,) = m.chains
    assert ch.fibers == ("a", "b", "c") and ch.forward == (True, False, True)
    assert m.to_global(ModelPoint("b", Q(1, 4))) == (0, Q(7, 4))
    p = m.from_global(0, Q(7, 4))
    assert p.fiber == "b" and p.beta == Q(1, 4)


@given(st.fractions(min_value=0, max_value=3, max_denominator=60))
def test_global_round_trip(t):
    m = three_fibers()
    t = Q(t.numerator, t.denominator)
    assert m.to_global(m.from_global(0, t)) == (0, t)


def test_glued_points_are_canonical():
    m = three_fibers()
    assert m.canonical_point(ModelPoint("b", 1)) == ModelPoint("a", 1)
    assert m.canonical_point(ModelPoint("c", 0)) == ModelPoint("b", 0)
    assert m.is_model_endpoint(ModelPoint("a", 0))
    assert not m.is_model_endpoint(ModelPoint("a", 1))


def test_two_components():
    m = FiberedContinuum(["x", "y"])
    assert len(m.chains) == 2
    with pytest.raises(NoPathError):
        arc_join(ModelPoint("x", 0), ModelPoint("y", 1), m)


def test_rejects_bad_models():
    with pytest.raises(DomainError):
        FiberedContinuum(["a", "a"])
    with pytest.raises(DomainError):
        FiberedContinuum(["a", "b"], tau_plus={"a": "b"})
    with pytest.raises(DomainError):
        # a cycle: a+ = b+, a- = b-
        FiberedContinuum(["a", "b"], tau_minus={"a": "b", "b": "a"}, tau_plus={"a": "b", "b": "a"})
    with pytest.raises(DomainError):
        ModelPoint("a", Q(3, 2))


def test_embedding_must_agree_on_gluing():
    with pytest.raises(DomainError):
        FiberedContinuum(["a", "b"], tau_plus={"a": "b", "b": "a"},
                         embedding={"a": [[0], [1]], "b": [[0], [2]]})


def test_json_round_trip():
    m = three_fibers()
    assert FiberedContinuum.from_json(m.to_json()) == m
    i = interval_model()
    assert FiberedContinuum.from_json(i.to_json()) == i


def test_arc_basics():
    m = three_fibers()
    A = arc_join(ModelPoint("a", Q(1, 2)), ModelPoint("c", Q(1, 4)), m)
    assert arc_lambda(A) == Q(7, 4)
    assert [s[0] for s in A.segments] == ["a", "b", "c"]
    assert Arc.from_json(m, A.to_json()) == A
    B = Arc(m, 0, A.end, A.start)
    assert B.same_set(A) and B != A and B.direction == -1
    with pytest.raises(DomainError):
        Arc(m, 0, 0, 4)


def test_k_operators_orientation(interval):
    A = Arc(interval, 0, Q(3, 4), Q(1, 4))
    k1, k2, k = k_operators(A, Q(1, 8))
    assert (k1.start, k1.end) == (Q(3, 4), Q(3, 8))
    assert (k2.start, k2.end) == (Q(5, 8), Q(1, 4))
    assert (k.start, k.end) == (Q(5, 8), Q(3, 8))
    with pytest.raises(ParameterError):
        k_operators(A, Q(1, 4))


def test_h_and_n(interval):
    A = Arc(interval, 0, Q(1, 4), Q(1, 2))
    a, b = A.endpoints
    assert h_of(a, A, Q(1, 8)).same_set(Arc(interval, 0, Q(1, 8), Q(1, 4)))
    assert h_of(b, A, 1).same_set(Arc(interval, 0, Q(1, 2), 1))
    assert n_of_arc(A, Q(1, 2)).same_set(Arc(interval, 0, 0, 1))
    with pytest.raises(ParameterError):
        h_of(ModelPoint("I", Q(1, 3)), A, Q(1, 8))


def test_critical_arcs_count(interval):
    arcs = list(critical_arcs(interval, [[0, Q(1, 2), 1, Q(1, 2)]]))
    assert len(arcs) == 3


def test_modulus_on_interval(interval):
    assert modulus_epsilon(interval, Q(1, 3)) == Q(1, 3)


def test_modulus_bounds_diameter(s2_1):
    m = s2_1.model
    eta = Q(1, 5)
    eps = modulus_epsilon(m, eta)
    assert eps > 0
    length = m.chains[0].length
    for i in range(0, 97):
        lo = Q(i, 48)
        if lo + eps > length:
            break
        # an arc just shorter than eps stays below eta
        A = Arc(m, 0, lo, lo + eps * Q(99, 100))
        assert arc_diameter(A) < eta


def test_modulus_needs_embedding():
    with pytest.raises(CapabilityError):
        modulus_epsilon(FiberedContinuum(["a"]), Q(1, 2))
