"""Exact offline solvers.

Three problems share one search core:

* ``shortest_schedule``  - S(R, x): serve R from x ignoring release times.
* ``opt_offline``        - optimal completion time with release times.
* ``deliver_and_return`` - drop every loaded request, then go to the origin.

The core is a depth-first branch-and-bound over event sequences.  An event is
picking up, dropping off, or (for a = b requests) visiting one request.  For a
fixed event order the earliest completion is obtained greedily, so only orders
are searched.  Among optimal orders the canonical representative is the one
whose route has the lexicographically smallest sequence of move directions
(negative direction first on the line, lower vertex id first on a finite
metric), then the smallest sequence of request ids.

``oracle_opt`` and ``enumerate_opt`` are independent reference solvers used
only for cross-checking.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .instance import Instance, Request
from .metric import MetricSpace, Point, format_rational, point_to_json


@dataclass(frozen=True)
class MoveTo:
    point: Point


@dataclass(frozen=True)
class PickUp:
    request: int


@dataclass(frozen=True)
class DropOff:
    request: int


@dataclass(frozen=True)
class WaitUntil:
    time: Fraction


Action = Union[MoveTo, PickUp, DropOff, WaitUntil]


@dataclass(frozen=True)
class Stop:
    """The server is at ``point`` at ``time``; ``action`` happens there, if any."""

    time: Fraction
    point: Point
    action: Optional[Action] = None


@dataclass(frozen=True)
class Schedule:
    start_point: Point
    start_time: Fraction
    actions: tuple[Action, ...]
    end_time: Fraction
    end_point: Point

    @property
    def length(self) -> Fraction:
        return self.end_time - self.start_time

    def request_ids(self) -> tuple[int, ...]:
        seen = []
        for a in self.actions:
            if isinstance(a, (PickUp, DropOff)) and a.request not in seen:
                seen.append(a.request)
        return tuple(seen)

    def stops(self, space: MetricSpace, start_time=None) -> list[Stop]:
        """Timed itinerary, optionally shifted to begin at ``start_time``."""
        t = self.start_time if start_time is None else Fraction(start_time)
        here = self.start_point
        out = [Stop(t, here)]
        for a in self.actions:
            if isinstance(a, MoveTo):
                t += space.distance(here, a.point)
                here = a.point
                out.append(Stop(t, here))
            elif isinstance(a, WaitUntil):
                t = max(t, a.time)
                out.append(Stop(t, here))
            else:
                out.append(Stop(t, here, a))
        return out

    def to_json(self) -> dict:
        acts = []
        for a in self.actions:
            if isinstance(a, MoveTo):
                acts.append(["move", point_to_json(a.point)])
            elif isinstance(a, PickUp):
                acts.append(["pickup", a.request])
            elif isinstance(a, DropOff):
                acts.append(["dropoff", a.request])
            else:
                acts.append(["wait", format_rational(a.time)])
        return {
            "start": point_to_json(self.start_point),
            "start_time": format_rational(self.start_time),
            "end": point_to_json(self.end_point),
            "end_time": format_rational(self.end_time),
            "actions": acts,
        }


@dataclass(frozen=True)
class SolveResult:
    schedule: Schedule
    value: Fraction
    nodes_explored: int


def check_schedule(
    schedule: Schedule,
    space: MetricSpace,
    capacity: Optional[int],
    requests: Iterable[Request],
    *,
    respect_release: bool = True,
    initially_loaded: Iterable[int] = (),
) -> list[str]:
    """Feasibility problems of a schedule; empty when it is valid."""
    by_id = {r.id: r for r in requests}
    problems = []
    loaded = set(initially_loaded)
    picked = set(loaded)
    dropped = set()
    last_wait = None
    stops = schedule.stops(space)
    for stop in stops:
        a = stop.action
        if isinstance(a, PickUp):
            r = by_id.get(a.request)
            if r is None:
                problems.append(f"pickup of unknown request {a.request}")
                continue
            if a.request in picked:
                problems.append(f"request {a.request} picked up twice")
            if stop.point != r.source:
                problems.append(f"request {a.request} picked up away from its source")
            if respect_release and stop.time < r.release:
                problems.append(f"request {a.request} picked up before release")
            picked.add(a.request)
            loaded.add(a.request)
        elif isinstance(a, DropOff):
            r = by_id.get(a.request)
            if a.request not in loaded:
                problems.append(f"request {a.request} dropped without being loaded")
                continue
            if r is not None and stop.point != r.destination:
                problems.append(f"request {a.request} dropped away from its destination")
            loaded.discard(a.request)
            dropped.add(a.request)
        carried = sum(1 for rid in loaded if rid in by_id and not by_id[rid].is_visit)
        if capacity is not None and carried > capacity:
            problems.append(f"load {carried} exceeds capacity {capacity} at time {stop.time}")
    for a in schedule.actions:
        if isinstance(a, WaitUntil):
            if last_wait is not None and a.time < last_wait:
                problems.append("wait times decrease")
            last_wait = a.time
    for rid in by_id:
        if rid not in dropped:
            problems.append(f"request {rid} never delivered")
    if stops[-1].time != schedule.end_time:
        problems.append("end_time inconsistent with actions")
    if stops[-1].point != schedule.end_point:
        problems.append("end_point inconsistent with actions")
    return problems


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------

_UNPICKED, _LOADED, _DONE = 0, 1, 2


def _search(
    space: MetricSpace,
    start: Point,
    start_time: Fraction,
    todo: Sequence[Request],
    loaded: Sequence[Request],
    capacity: Optional[int],
    *,
    use_release: bool,
    return_to_origin: bool,
) -> SolveResult:
    reqs = sorted(list(todo) + list(loaded), key=lambda r: r.id)
    loaded_ids = {r.id for r in loaded}
    points: list[Point] = []
    index: dict[Point, int] = {}

    def pid(p: Point) -> int:
        if p not in index:
            index[p] = len(points)
            points.append(p)
        return index[p]

    s0 = pid(start)
    org = pid(space.origin)
    src = [pid(r.source) for r in reqs]
    dst = [pid(r.destination) for r in reqs]
    rel = [r.release for r in reqs]
    visit = [r.is_visit for r in reqs]
    D = [[space.distance(p, q) for q in points] for p in points]
    n = len(reqs)

    status = [_LOADED if r.id in loaded_ids else _UNPICKED for r in reqs]
    load0 = sum(1 for k in range(n) if status[k] == _LOADED and not visit[k])
    remaining0 = sum(2 - s if not visit[k] else 1 for k, s in enumerate(status))

    best_val: Optional[Fraction] = None
    best_key = None
    best_seq: list = []
    seq: list = []
    nodes = 0

    def tail(p: int) -> Fraction:
        return D[p][org] if return_to_origin else 0

    def bound(cur: int, time: Fraction) -> Fraction:
        lb = time + tail(cur)
        for k in range(n):
            st = status[k]
            if st == _DONE:
                continue
            if st == _LOADED:
                v = time + D[cur][dst[k]] + tail(dst[k])
            else:
                v = time + D[cur][src[k]]
                if use_release and v < rel[k]:
                    v = rel[k]
                v += D[src[k]][dst[k]] + tail(dst[k])
            if v > lb:
                lb = v
        return lb

    def key_of(events) -> tuple:
        dirs = []
        here = s0
        for k, kind in events:
            p = dst[k] if kind == _DONE and not visit[k] else src[k]
            if D[here][p] != 0:
                dirs.append(space.direction_token(points[here], points[p]))
            here = p
        if return_to_origin and D[here][org] != 0:
            dirs.append(space.direction_token(points[here], points[org]))
        return tuple(dirs), tuple((reqs[k].id, kind) for k, kind in events)

    def dfs(cur: int, time: Fraction, load: int, remaining: int) -> None:
        nonlocal best_val, best_key, best_seq, nodes
        nodes += 1
        if remaining == 0:
            val = time + tail(cur)
            if best_val is None or val < best_val:
                best_val, best_key, best_seq = val, key_of(seq), list(seq)
            elif val == best_val:
                k = key_of(seq)
                if k < best_key:
                    best_key, best_seq = k, list(seq)
            return
        if best_val is not None and bound(cur, time) > best_val:
            return
        children = []
        for k in range(n):
            st = status[k]
            if st == _UNPICKED:
                if visit[k]:
                    nxt, new, dl, step = src[k], _DONE, 0, 1
                elif capacity is None or load < capacity:
                    nxt, new, dl, step = src[k], _LOADED, 1, 1
                else:
                    continue
                t2 = time + D[cur][nxt]
                if use_release and t2 < rel[k]:
                    t2 = rel[k]
            elif st == _LOADED:
                nxt, new, dl, step = dst[k], _DONE, -1, 1
                t2 = time + D[cur][nxt]
            else:
                continue
            children.append((t2, k, nxt, new, dl, step))
        children.sort(key=lambda c: (c[0], c[1]))
        for t2, k, nxt, new, dl, step in children:
            old = status[k]
            status[k] = new
            seq.append((k, new))
            dfs(nxt, t2, load + dl, remaining - step)
            seq.pop()
            status[k] = old

    t0 = Fraction(start_time)
    dfs(s0, t0, load0, remaining0)
    assert best_val is not None

    actions: list[Action] = []
    here = s0
    time = t0
    for k, kind in best_seq:
        r = reqs[k]
        p = dst[k] if (kind == _DONE and not visit[k]) else src[k]
        if p != here:
            actions.append(MoveTo(points[p]))
            time += D[here][p]
            here = p
        if kind == _DONE and not visit[k]:
            actions.append(DropOff(r.id))
            continue
        if use_release and time < r.release:
            actions.append(WaitUntil(r.release))
            time = r.release
        actions.append(PickUp(r.id))
        if visit[k]:
            actions.append(DropOff(r.id))
    if return_to_origin and here != org:
        actions.append(MoveTo(points[org]))
        time += D[here][org]
        here = org
    assert time == best_val
    sched = Schedule(start, t0, tuple(actions), time, points[here])
    return SolveResult(sched, best_val - t0 if not use_release else best_val, nodes)


def shortest_schedule(
    space: MetricSpace,
    capacity: Optional[int],
    requests: Sequence[Request],
    x: Point,
    start_time=0,
) -> SolveResult:
    """S(R, x): shortest capacity-feasible schedule from x, releases ignored.

    ``value`` is the length; the schedule is timed from ``start_time``.
    """
    return _search(
        space, x, Fraction(start_time), requests, (), capacity,
        use_release=False, return_to_origin=False,
    )


def opt_offline(
    space: MetricSpace,
    capacity: Optional[int],
    requests: Sequence[Request],
    start: Optional[Point] = None,
    start_time=0,
) -> SolveResult:
    """Optimal completion time respecting release times (``value`` is absolute)."""
    start = space.origin if start is None else start
    return _search(
        space, start, Fraction(start_time), requests, (), capacity,
        use_release=True, return_to_origin=False,
    )


def deliver_and_return(
    space: MetricSpace,
    capacity: Optional[int],
    loaded: Sequence[Request],
    p: Point,
    start_time=0,
) -> SolveResult:
    """Fastest plan dropping every loaded request and ending at the origin."""
    return _search(
        space, p, Fraction(start_time), (), loaded, capacity,
        use_release=False, return_to_origin=True,
    )


def deliver_and_return_time(
    space: MetricSpace, capacity: Optional[int], loaded: Sequence[Request], p: Point
) -> Fraction:
    if not loaded:
        return space.distance(p, space.origin)
    return deliver_and_return(space, capacity, loaded, p).value


class PrefixOpt:
    """OPT(t) for one instance, memoised by the number of released requests."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self._releases = [r.release for r in instance.requests]
        self._cache: dict[int, SolveResult] = {}

    def count(self, t) -> int:
        return sum(1 for rt in self._releases if rt <= t)

    def result(self, t) -> Optional[SolveResult]:
        k = self.count(t)
        if k == 0:
            return None
        if k not in self._cache:
            inst = self.instance
            self._cache[k] = opt_offline(inst.space, inst.capacity, inst.requests[:k])
        return self._cache[k]

    def __call__(self, t) -> Fraction:
        res = self.result(t)
        return Fraction(0) if res is None else res.value

    def values(self) -> dict[int, Fraction]:
        return {k: v.value for k, v in sorted(self._cache.items())}


def opt_prefix(instance: Instance, t) -> Fraction:
    """OPT(t): offline optimum over requests released by t, from the origin at 0."""
    if Fraction(t) < 0:
        raise ValueError("t must be non-negative")
    return PrefixOpt(instance)(t)


# ---------------------------------------------------------------------------
# Reference solvers
# ---------------------------------------------------------------------------


class OracleTooLarge(ValueError):
    pass


def oracle_opt(instance: Instance, t, limit: int = 8) -> Fraction:
    """OPT(t) by exhaustive search over the full state space.

    A state is (last event location, status of every request).  Every event
    order passes through these states; keeping the earliest arrival time per
    state is exact because the server may always wait.  States are expanded in
    order of progress with no bounding or ordering heuristics.
    """
    reqs = instance.released_by(t)
    if len(reqs) > limit:
        raise OracleTooLarge(f"{len(reqs)} requests released, oracle limit is {limit}")
    if not reqs:
        return Fraction(0)
    space, cap = instance.space, instance.capacity
    n = len(reqs)
    origin = space.origin

    def loc(code):
        if code is None:
            return origin
        k, which = code
        return reqs[k].source if which == 0 else reqs[k].destination

    full = tuple(2 for _ in range(n))
    layers: dict[int, dict] = {0: {(None, tuple(0 for _ in range(n))): Fraction(0)}}
    best = None
    for progress in range(2 * n + 1):
        layer = layers.pop(progress, {})
        for (code, st), time in layer.items():
            if st == full:
                if best is None or time < best:
                    best = time
                continue
            here = loc(code)
            load = sum(1 for k in range(n) if st[k] == 1)
            for k in range(n):
                r = reqs[k]
                if st[k] == 0:
                    if r.source != r.destination and cap is not None and load >= cap:
                        continue
                    arrive = max(time + space.distance(here, r.source), r.release)
                    nst = 2 if r.source == r.destination else 1
                    ncode = (k, 0)
                elif st[k] == 1:
                    arrive = time + space.distance(here, r.destination)
                    nst = 2
                    ncode = (k, 1)
                else:
                    continue
                new = st[:k] + (nst,) + st[k + 1:]
                step = nst - st[k]
                bucket = layers.setdefault(progress + step, {})
                keyed = (ncode, new)
                if keyed not in bucket or arrive < bucket[keyed]:
                    bucket[keyed] = arrive
    return best


def enumerate_opt(instance: Instance, t, limit: int = 4) -> Fraction:
    """OPT(t) by listing every valid event interleaving (tiny instances only)."""
    reqs = instance.released_by(t)
    if len(reqs) > limit:
        raise OracleTooLarge(f"{len(reqs)} requests released, enumeration limit is {limit}")
    if not reqs:
        return Fraction(0)
    space, cap = instance.space, instance.capacity
    events = []
    for r in reqs:
        if r.source == r.destination:
            events.append((r, "visit"))
        else:
            events.append((r, "pickup"))
            events.append((r, "dropoff"))
    best = None
    for order in itertools.permutations(events):
        here, time, onboard, ok = space.origin, Fraction(0), set(), True
        for r, kind in order:
            if kind == "dropoff":
                if r.id not in onboard:
                    ok = False
                    break
                time += space.distance(here, r.destination)
                here = r.destination
                onboard.discard(r.id)
                continue
            if kind == "pickup":
                if cap is not None and len(onboard) >= cap:
                    ok = False
                    break
                onboard.add(r.id)
            time = max(time + space.distance(here, r.source), r.release)
            here = r.source
        if ok and (best is None or time < best):
            best = time
    return best
