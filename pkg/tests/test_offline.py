import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialaride.harness import random_instance
from dialaride.instance import (
    Instance,
    LowerBoundFamily,
    Request,
    dumps_instance,
    generate_lower_bound,
    line_request,
)
from dialaride.metric import FiniteMetric, LineCoord, RealLine, Vertex
from dialaride.offline import (
    DropOff,
    MoveTo,
    OracleTooLarge,
    PickUp,
    PrefixOpt,
    WaitUntil,
    check_schedule,
    deliver_and_return,
    deliver_and_return_time,
    enumerate_opt,
    opt_offline,
    opt_prefix,
    oracle_opt,
    shortest_schedule,
)

LINE = RealLine()
O = LineCoord(0)


def test_single_request_from_its_source():
    res = shortest_schedule(LINE, None, [line_request(1, 0, 1, 1)], O)
    assert res.value == 1
    assert res.schedule.actions == (PickUp(1), MoveTo(LineCoord(1)), DropOff(1))


def test_symmetric_pair_goes_negative_first():
    reqs = [line_request(1, 0, 1, 1), line_request(2, 0, -1, 2)]
    res = shortest_schedule(LINE, None, reqs, O)
    assert res.value == 3
    drops = [a.request for a in res.schedule.actions if isinstance(a, DropOff)]
    assert drops == [2, 1]


def test_unit_capacity_order():
    reqs = [line_request(1, 0, 1, 1), line_request(2, 2, 3, 2)]
    assert shortest_schedule(LINE, 1, reqs, O).value == 3


def test_shortest_schedule_ignores_releases():
    reqs = [line_request(1, 0, 1, 50)]
    assert shortest_schedule(LINE, 1, reqs, O).value == 1


def test_opt_for_two_sided_prefix():
    # r3 sits at -1-eps: going right first costs 1 + (2 + eps) after waiting
    # for r1 at eps, so the optimum is 3 + 2 eps.
    inst = generate_lower_bound(LowerBoundFamily("prop2", 1, F(1, 100)))
    res = opt_offline(LINE, None, inst.requests)
    assert res.value == F(151, 50) == oracle_opt(inst, F(301, 100))


def test_opt_waits_for_release():
    assert opt_offline(LINE, None, [line_request(1, 1, 1, F(1, 2))]).value == 1
    res = opt_offline(LINE, None, [line_request(1, 0, 1, 10)])
    assert res.value == 11
    assert WaitUntil(F(10)) in res.schedule.actions


def test_opt_prefix_on_five_request_family():
    a, e = F(1, 2), F(1, 1000)
    inst = generate_lower_bound(LowerBoundFamily("prop3", a, e))
    assert opt_prefix(inst, e) == 1
    assert opt_prefix(inst, a + e) == a + 1 + e
    assert opt_prefix(inst, e / 4) == 0


def test_deliver_and_return_examples():
    assert deliver_and_return_time(LINE, None, [], O) == 0
    assert deliver_and_return_time(LINE, None, [line_request(2, 0, -1, 1)], O) == 2
    two = [line_request(1, 0, 2, 1), line_request(2, 0, 3, 2)]
    assert deliver_and_return_time(LINE, None, two, O) == 6
    assert deliver_and_return(LINE, None, two, O).schedule.end_point == O


def test_oracle_on_empty_prefix():
    inst = Instance(LINE, (line_request(1, 0, 1, 5),))
    assert oracle_opt(inst, 1) == 0
    assert enumerate_opt(inst, 1) == 0


def test_oracle_size_limit():
    reqs = tuple(line_request(i, 0, 1, i) for i in range(1, 11))
    with pytest.raises(OracleTooLarge):
        oracle_opt(Instance(LINE, reqs), 100)


def test_finite_metric_solve():
    space = FiniteMetric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    reqs = [Request(1, Vertex(2), Vertex(0), F(1)), Request(2, Vertex(1), Vertex(1), F(2))]
    res = opt_offline(space, 1, reqs)
    inst = Instance(space, tuple(reqs), 1)
    assert res.value == oracle_opt(inst, 2) == enumerate_opt(inst, 2)
    assert check_schedule(res.schedule, space, 1, reqs) == []


# --- oracle agreement ---------------------------------------------------------


def _instances(count, seed, space="line", n_max=4):
    rng = random.Random(seed)
    return [random_instance(rng, space, n_max, 2) for _ in range(count)]


def test_branch_and_bound_matches_oracle_line():
    for inst in _instances(1000, 7):
        t = inst.requests[-1].release
        res = opt_offline(inst.space, inst.capacity, inst.requests)
        assert res.value == oracle_opt(inst, t), dumps_instance(inst)
        assert check_schedule(res.schedule, inst.space, inst.capacity, inst.requests) == []


def test_branch_and_bound_matches_oracle_finite():
    for inst in _instances(300, 8, space="finite"):
        t = inst.requests[-1].release
        assert opt_offline(inst.space, inst.capacity, inst.requests).value == oracle_opt(inst, t)


def test_state_space_oracle_matches_enumeration():
    # two independent reference solvers: the dp over states and literal
    # enumeration of event orders
    for inst in _instances(300, 9, n_max=3) + _instances(100, 10, space="finite", n_max=3):
        for r in inst.requests:
            assert oracle_opt(inst, r.release) == enumerate_opt(inst, r.release)


# --- properties -----------------------------------------------------------------


def test_prefix_opt_monotone_and_piecewise_constant():
    for inst in _instances(100, 11, n_max=5):
        popt = PrefixOpt(inst)
        rel = [r.release for r in inst.requests]
        probes = sorted({F(0), *rel, *(t + F(1, 7) for t in rel), *((a + b) / 2 for a, b in zip(rel, rel[1:]))})
        vals = [popt(t) for t in probes]
        assert vals == sorted(vals)
        for a, b in zip(rel, rel[1:]):
            assert popt(a) == popt((a + b) / 2) == popt(b - F(1, 10**6))


def test_relaxed_length_below_prefix_opt():
    for inst in _instances(100, 12, n_max=5):
        t = inst.requests[-1].release
        relaxed = shortest_schedule(inst.space, inst.capacity, inst.requests, inst.space.origin).value
        assert relaxed <= opt_prefix(inst, t)


def test_deliver_and_return_empty_is_distance():
    for x in (F(-3), F(0), F(5, 2)):
        assert deliver_and_return_time(LINE, 1, [], LineCoord(x)) == abs(x)
    space = FiniteMetric([[0, 3], [3, 0]])
    p = space.edge_point(0, 1, 1)
    assert deliver_and_return_time(space, 1, [], p) == 1


def test_shortest_schedules_never_wait():
    for inst in _instances(100, 13, n_max=5):
        res = shortest_schedule(inst.space, inst.capacity, inst.requests, inst.space.origin)
        assert not any(isinstance(a, WaitUntil) for a in res.schedule.actions)
        assert check_schedule(res.schedule, inst.space, inst.capacity, inst.requests, respect_release=False) == []


coord = st.integers(-4, 4)


@st.composite
def line_requests(draw):
    n = draw(st.integers(1, 4))
    return [line_request(i + 1, draw(coord), draw(coord), i + 1) for i in range(n)]


@settings(max_examples=150, deadline=None)
@given(line_requests(), st.sampled_from([1, 2, None]), st.randoms(use_true_random=False))
def test_length_invariant_under_relabeling(reqs, cap, rnd):
    base = shortest_schedule(LINE, cap, reqs, O)
    ids = list(range(1, len(reqs) + 1))
    rnd.shuffle(ids)
    relabeled = [Request(i, r.source, r.destination, r.release) for i, r in zip(ids, reqs)]
    rnd.shuffle(relabeled)
    assert shortest_schedule(LINE, cap, relabeled, O).value == base.value
    assert shortest_schedule(LINE, cap, reqs, O).schedule == base.schedule


@settings(max_examples=150, deadline=None)
@given(line_requests(), st.sampled_from([1, 2, None]))
def test_capacity_monotone(reqs, cap):
    # more room can only help
    looser = None if cap is None else cap + 1
    assert shortest_schedule(LINE, looser, reqs, O).value <= shortest_schedule(LINE, cap, reqs, O).value
