from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialaride.engine import CheckConfig, run
from dialaride.instance import (
    FAMILIES,
    Request,
    FamilyDomainError,
    Instance,
    LowerBoundFamily,
    check_domain,
    dumps_instance,
    generate_lower_bound,
    instance_from_json,
    instance_to_json,
    line_request,
    lower_bound_formula,
    predicted_outcome,
    prop4_case,
    validate,
)
from dialaride.metric import FiniteMetric, LineCoord, RealLine, Vertex
from dialaride.policy import make_policy


def test_equal_releases_flagged():
    inst = Instance(RealLine(), (line_request(1, 0, 1, 1), line_request(2, 0, 2, 1)))
    assert any("non-strict release order" in v for v in validate(inst))


def test_empty_instance_valid():
    assert validate(Instance(RealLine(), ())) == []


def test_release_zero_flagged():
    inst = Instance(RealLine(), (line_request(1, 0, 1, 0),))
    assert validate(inst)


def test_finite_request_must_sit_on_vertices():
    space = FiniteMetric([[0, 2], [2, 0]])
    good = Instance(space, (Request(1, Vertex(0), Vertex(1), F(1)),))
    assert validate(good) == []
    bad = Instance(space, (Request(1, space.edge_point(0, 1, 1), Vertex(1), F(1)),))
    assert validate(bad)


def test_capacity_must_be_positive():
    assert validate(Instance(RealLine(), (), capacity=0))


def _points(inst):
    return [(r.source.x, r.destination.x, r.release) for r in inst.requests]


def test_two_sided_family_requests():
    inst = generate_lower_bound(LowerBoundFamily("prop2", 1, F(1, 100)))
    assert _points(inst) == [
        (0, 1, F(1, 100)),
        (0, -1, F(2, 100)),
        (F(-101, 100), F(-101, 100), F(301, 100)),
    ]


def test_lemma1_request():
    inst = generate_lower_bound(LowerBoundFamily("lemma1", 2, F(1, 100)))
    assert _points(inst) == [(1, 1, F(1, 2))]


def test_two_sided_family_outside_domain():
    with pytest.raises(FamilyDomainError) as err:
        generate_lower_bound(LowerBoundFamily("prop2", 2, F(1, 1000)))
    assert "3*alpha + 2 > 3*alpha^2" in str(err.value)


def test_first_case_at_zero_collides():
    # at alpha = 0 the first two releases coincide
    with pytest.raises(FamilyDomainError, match="non-strict release order"):
        generate_lower_bound(LowerBoundFamily("prop4case1", 0))


def test_predicted_outcome_examples():
    assert predicted_outcome(LowerBoundFamily("prop2", 1, F(1, 100))) == (F(801, 100), F(301, 100))
    assert predicted_outcome(LowerBoundFamily("prop3", F(1, 2), F(1, 100))) == (F(448, 100), F(151, 100))
    assert predicted_outcome(LowerBoundFamily("prop4case2", F(4, 5), F(1, 1000))) == (F(12517, 1000), F(22, 5))


def test_middle_case_domain_boundary():
    # 3 + a - e > 2a + 3a^2 decides between the second and third variant
    e = F(1, 1000)
    assert prop4_case(F(4, 5), e) == "prop4case2"
    assert prop4_case(F(9, 10), e) == "prop4case3"
    a = F(4, 5)
    assert 3 + a - e > 2 * a + 3 * a * a
    check_domain(LowerBoundFamily("prop4case2", a, e))
    with pytest.raises(FamilyDomainError):
        check_domain(LowerBoundFamily("prop4case3", a, e))


def test_formula_values():
    assert lower_bound_formula("prop2", 1) == F(8, 3)
    assert lower_bound_formula("prop2", F(1, 2)) is None
    assert lower_bound_formula("prop3", F(1, 2)) == 3
    assert lower_bound_formula("prop4", F(1, 2)) == F(37, 14)


def test_unknown_family():
    with pytest.raises(ValueError):
        LowerBoundFamily("prop9", 1)


def test_json_round_trip():
    inst = generate_lower_bound(LowerBoundFamily("prop4case3", F(9, 10)), capacity=2)
    back = instance_from_json(instance_to_json(inst), name=inst.name)
    assert back == inst
    finite = Instance(FiniteMetric([[0, 1], [1, 0]]), (), None, "k2")
    assert instance_from_json(instance_to_json(finite), name="k2") == finite
    assert dumps_instance(inst) == dumps_instance(back)


# --- properties -------------------------------------------------------------

ADMISSIBLE = {
    "lemma1": [0, F(1, 2), 1, F(81, 50), 3],
    "prop2": [1, F(11, 10), F(13, 10), F(7, 5)],
    "prop3": [F(1, 10), F(1, 4), F(1, 2), F(3, 5)],
    "prop4case1": [F(1, 3), F(3, 5)],
    "prop4case2": [F(2, 3), F(7, 10), F(4, 5)],
    "prop4case3": [F(9, 10), F(19, 20)],
}


@pytest.mark.parametrize("kind", FAMILIES)
def test_generated_instances_validate(kind):
    for a in ADMISSIBLE[kind]:
        assert validate(generate_lower_bound(LowerBoundFamily(kind, a))) == []


alphas = st.fractions(min_value=0, max_value=3, max_denominator=40)
epsilons = st.sampled_from([F(1, 1000), F(1, 500), F(1, 200)])


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FAMILIES), alphas, epsilons)
def test_generator_output_always_valid(kind, a, e):
    try:
        inst = generate_lower_bound(LowerBoundFamily(kind, a, e))
    except FamilyDomainError:
        return
    assert validate(inst) == []
    assert all(isinstance(r.source, LineCoord) for r in inst.requests)


# The simulator reproduces the closed forms wherever the construction's
# narrative holds.  Known exceptions are exercised in test_acceptance.
@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["lemma1", "prop3", "prop4case2", "prop4case3"]),
    st.fractions(min_value=0, max_value=1, max_denominator=30),
)
def test_simulation_matches_closed_form(kind, a):
    fam = LowerBoundFamily(kind, a)
    try:
        inst = generate_lower_bound(fam)
    except FamilyDomainError:
        return
    tr = run(inst, make_policy("lazy", alpha=a), CheckConfig.off())
    assert (tr.completion_time, tr.final_opt) == predicted_outcome(fam)
