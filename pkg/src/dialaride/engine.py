"""Continuous-time event-driven simulation of one server under an online policy.

Time only jumps between release times and command completions; the server's
position in between is interpolated exactly.  At equal timestamps a release
is handled before a command completion, and stops (pickups and dropoffs) that
fall on a release time are executed before the release is handled.

A policy sees a :class:`ServerView` snapshot: only released requests, and
OPT(t') only for t' up to the current time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Protocol, Union

from .instance import Instance, Request, validate
from .metric import MetricSpace, Point, format_rational, point_to_json
from .offline import (
    DropOff,
    PickUp,
    PrefixOpt,
    Schedule,
    Stop,
    deliver_and_return,
    deliver_and_return_time,
)

# Rational stand-in for the golden ratio used where the upper-bound argument
# needs alpha >= phi.
PHI_RATIONAL = Fraction(81, 50)


class SimulationFault(RuntimeError):
    """The policy asked for something the server cannot do."""


class InvariantViolation(AssertionError):
    def __init__(self, tag: str, message: str):
        self.tag = tag
        super().__init__(f"[{tag}] {message}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeliverAndReturn:
    pass


@dataclass(frozen=True)
class WaitUntilCmd:
    until: Fraction


@dataclass(frozen=True)
class FollowSchedule:
    schedule: Schedule


Command = Union[DeliverAndReturn, WaitUntilCmd, FollowSchedule]


def command_name(cmd) -> str:
    if isinstance(cmd, DeliverAndReturn):
        return "deliver_and_return"
    if isinstance(cmd, WaitUntilCmd):
        return "wait_until"
    return "follow_schedule"


class OptAccess:
    """OPT(t') restricted to t' <= now."""

    def __init__(self, prefix_opt: PrefixOpt, now: Fraction):
        self._opt = prefix_opt
        self.now = now

    def __call__(self, t=None) -> Fraction:
        t = self.now if t is None else Fraction(t)
        if t > self.now:
            raise SimulationFault(f"policy queried OPT({t}) at time {self.now}")
        return self._opt(t)


@dataclass(frozen=True)
class ServerView:
    time: Fraction
    position: Point
    loaded: tuple[Request, ...]
    served: frozenset
    pending: tuple[Request, ...]  # released and unserved, by id
    command: Optional[str]
    space: MetricSpace
    capacity: Optional[int]
    opt: OptAccess


class OnlinePolicy(Protocol):
    def on_request(self, request: Request, t: Fraction, view: ServerView) -> Optional[Command]:
        ...

    def on_idle(self, t: Fraction, view: ServerView) -> Optional[Command]:
        ...


def check_interruptible(view: ServerView, t, alpha, opt_t) -> bool:
    """Can the loaded requests be delivered and O reached by alpha * opt_t?"""
    needed = deliver_and_return_time(view.space, view.capacity, view.loaded, view.position)
    return Fraction(t) + needed <= Fraction(alpha) * Fraction(opt_t)


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------


@dataclass
class ScheduleRecord:
    index: int
    start_time: Fraction
    start_point: Point
    request_ids: tuple[int, ...]
    planned_length: Fraction
    end_point: Point
    opt_at_start: Fraction
    interrupted: bool = False
    completion_time: Optional[Fraction] = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "start_time": format_rational(self.start_time),
            "start_point": point_to_json(self.start_point),
            "requests": list(self.request_ids),
            "length": format_rational(self.planned_length),
            "end_point": point_to_json(self.end_point),
            "opt": format_rational(self.opt_at_start),
            "interrupted": self.interrupted,
            "completion_time": None if self.completion_time is None else format_rational(self.completion_time),
        }


@dataclass(frozen=True)
class CheckConfig:
    """Which invariants ``run`` asserts.

    ``feasibility`` covers release/capacity/service bookkeeping.  ``upper_bound``
    covers the per-schedule inequalities of the upper-bound argument; the
    two that need alpha >= phi (and the final ratio bound) only apply when
    the policy's alpha is at least ``phi``.
    """

    feasibility: bool = True
    upper_bound: bool = True
    phi: Fraction = PHI_RATIONAL

    @classmethod
    def off(cls) -> "CheckConfig":
        return cls(feasibility=False, upper_bound=False)


@dataclass
class SimTrace:
    instance: Instance
    policy: dict
    events: list[dict]
    schedules: list[ScheduleRecord]
    trajectory: list[tuple[Fraction, Point]]
    completion_time: Fraction
    end_time: Fraction
    opt_values: dict[str, Fraction]
    checks: list[tuple[str, bool]] = field(default_factory=list)

    @property
    def final_opt(self) -> Fraction:
        if not self.instance.requests:
            return Fraction(0)
        return self.opt_values[format_rational(self.instance.requests[-1].release)]

    def position_at(self, t) -> Point:
        return position_at(self, t)

    def summary(self) -> dict:
        return {
            "kind": "summary",
            "instance": self.instance.name,
            "policy": self.policy,
            "completion_time": format_rational(self.completion_time),
            "opt": {k: format_rational(v) for k, v in self.opt_values.items()},
            "schedules": [s.to_json() for s in self.schedules],
            "checks": [[tag, ok] for tag, ok in self.checks],
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(e, sort_keys=True) for e in self.events]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"


def position_at(trace_or_sim, t) -> Point:
    """Exact server position at time t, interpolating along recorded motion."""
    t = Fraction(t)
    if isinstance(trace_or_sim, SimTrace):
        traj, now, space = trace_or_sim.trajectory, trace_or_sim.end_time, trace_or_sim.instance.space
    else:
        traj, now, space = trace_or_sim.trajectory, trace_or_sim.time, trace_or_sim.space
    if t < 0:
        raise ValueError(f"negative time {t}")
    # a finished run stays put; a live simulation cannot see ahead
    if t > now and not isinstance(trace_or_sim, SimTrace):
        raise ValueError(f"time {t} is ahead of the simulation clock {now}")
    prev_t, prev_p = traj[0]
    for bt, bp in traj[1:]:
        if bt > t:
            if bp == prev_p:
                return prev_p
            return space.advance(prev_p, bp, t - prev_t)
        prev_t, prev_p = bt, bp
    return prev_p


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------


@dataclass
class _Active:
    kind: str
    stops: list[Stop]
    next_stop: int  # first stop not yet reached
    record: Optional[ScheduleRecord] = None

    @property
    def end_time(self) -> Fraction:
        return self.stops[-1].time


class Simulator:
    def __init__(self, instance: Instance, policy, checks: Optional[CheckConfig] = None):
        problems = validate(instance)
        if problems:
            raise ValueError("invalid instance: " + "; ".join(problems))
        self.instance = instance
        self.space = instance.space
        self.policy = policy
        self.checks = checks or CheckConfig()
        self.alpha = getattr(policy, "alpha", None)
        self.opt = PrefixOpt(instance)
        self.time = Fraction(0)
        self.position = self.space.origin
        self.loaded: dict[int, Request] = {}
        self.served: dict[int, Fraction] = {}
        self.picked: set[int] = set()
        self.released: list[Request] = []
        self.active: Optional[_Active] = None
        self.events: list[dict] = []
        self.schedules: list[ScheduleRecord] = []
        self.trajectory: list[tuple[Fraction, Point]] = [(Fraction(0), self.position)]
        self.check_log: list[tuple[str, bool]] = []
        self._same_time_dispatches = 0
        self._dispatch_time = None

    # -- bookkeeping ------------------------------------------------------

    def _log(self, kind: str, **data) -> None:
        entry = {"t": format_rational(self.time), "kind": kind}
        entry.update(data)
        self.events.append(entry)

    def _move_mark(self, t: Fraction, p: Point) -> None:
        last_t, last_p = self.trajectory[-1]
        if (last_t, last_p) == (t, p):
            return
        if last_p != p:
            # motion starts as late as possible: wait at last_p, then travel
            depart = t - self.space.distance(last_p, p)
            if depart > last_t:
                self.trajectory.append((depart, last_p))
        self.trajectory.append((t, p))

    def _check(self, tag: str, ok: bool, message: str) -> None:
        self.check_log.append((tag, ok))
        if not ok:
            raise InvariantViolation(tag, message)

    def view(self) -> ServerView:
        pending = tuple(r for r in self.released if r.id not in self.served)
        return ServerView(
            time=self.time,
            position=self.position,
            loaded=tuple(self.loaded[k] for k in sorted(self.loaded)),
            served=frozenset(self.served),
            pending=pending,
            command=self.active.kind if self.active else None,
            space=self.space,
            capacity=self.instance.capacity,
            opt=OptAccess(self.opt, self.time),
        )

    # -- motion -----------------------------------------------------------

    def _apply_stop(self, stop: Stop) -> None:
        self.time = stop.time
        self._move_mark(stop.time, stop.point)
        self.position = stop.point
        a = stop.action
        if isinstance(a, PickUp):
            r = self.instance.request(a.request)
            if a.request in self.picked:
                raise SimulationFault(f"request {a.request} picked up twice")
            if r not in self.released or stop.time < r.release:
                raise SimulationFault(f"request {a.request} picked up before release")
            if stop.point != r.source:
                raise SimulationFault(f"pickup of request {a.request} away from its source")
            self.picked.add(a.request)
            self.loaded[a.request] = r
            carried = sum(1 for q in self.loaded.values() if not q.is_visit)
            if self.checks.feasibility:
                cap = self.instance.capacity
                self._check("capacity", cap is None or carried <= cap, f"load {carried} exceeds capacity {cap}")
            self._log("pickup", request=a.request, pos=point_to_json(stop.point))
        elif isinstance(a, DropOff):
            r = self.loaded.pop(a.request, None)
            if r is None:
                raise SimulationFault(f"dropoff of request {a.request}, which is not loaded")
            if stop.point != r.destination:
                raise SimulationFault(f"dropoff of request {a.request} away from its destination")
            self.served[a.request] = stop.time
            self._log("dropoff", request=a.request, pos=point_to_json(stop.point))

    def _advance_to(self, t: Fraction) -> None:
        act = self.active
        if act is not None:
            while act.next_stop < len(act.stops) and act.stops[act.next_stop].time <= t:
                self._apply_stop(act.stops[act.next_stop])
                act.next_stop += 1
            if act.next_stop < len(act.stops):
                prev = act.stops[act.next_stop - 1]
                nxt = act.stops[act.next_stop]
                depart = nxt.time - self.space.distance(prev.point, nxt.point)
                if t > depart:
                    self.position = self.space.advance(prev.point, nxt.point, t - depart)
                    self._move_mark(t, self.position)
        self.time = t

    # -- commands ---------------------------------------------------------

    def _issue(self, cmd: Command, source: str) -> None:
        t = self.time
        if self.active is not None and self.active.record is not None:
            self.active.record.interrupted = True
            self._log("interrupt", schedule=self.active.record.index)
        if isinstance(cmd, DeliverAndReturn):
            plan = deliver_and_return(
                self.space, self.instance.capacity, list(self.loaded.values()), self.position, start_time=t
            ).schedule
            stops = plan.stops(self.space)
            self._log("command", cmd="deliver_and_return", by=source, until=format_rational(stops[-1].time))
            self.active = _Active("deliver_and_return", stops, 1)
        elif isinstance(cmd, WaitUntilCmd):
            until = Fraction(cmd.until)
            if until < t:
                raise SimulationFault(f"wait_until({until}) issued at time {t}")
            self._log("command", cmd="wait_until", by=source, until=format_rational(until))
            self.active = _Active("wait_until", [Stop(t, self.position), Stop(until, self.position)], 1)
        elif isinstance(cmd, FollowSchedule):
            self._start_schedule(cmd.schedule, source)
        else:
            raise SimulationFault(f"unknown command {cmd!r}")

    def _start_schedule(self, sched: Schedule, source: str) -> None:
        t = self.time
        if sched.start_point != self.position:
            raise SimulationFault(f"schedule starts at {sched.start_point!r}, server is at {self.position!r}")
        if sched.start_time != t:
            raise SimulationFault(f"schedule starts at time {sched.start_time}, now is {t}")
        stops = sched.stops(self.space)
        ids = sched.request_ids()
        pending = {r.id for r in self.released if r.id not in self.served}
        for rid in ids:
            if rid not in pending:
                raise SimulationFault(f"schedule serves request {rid}, which is not pending")
        opt_t = self.opt(t)
        rec = ScheduleRecord(
            index=len(self.schedules) + 1,
            start_time=t,
            start_point=self.position,
            request_ids=ids,
            planned_length=sched.length,
            end_point=sched.end_point,
            opt_at_start=opt_t,
        )
        self._check_schedule_start(rec)
        self.schedules.append(rec)
        self._log(
            "command",
            cmd="follow_schedule",
            by=source,
            schedule=rec.index,
            requests=list(ids),
            length=format_rational(sched.length),
            until=format_rational(stops[-1].time),
        )
        self.active = _Active("follow_schedule", stops, 1, rec)

    def _check_schedule_start(self, rec: ScheduleRecord) -> None:
        if not self.checks.upper_bound or self.alpha is None:
            return
        a = Fraction(self.alpha)
        t, opt_t = rec.start_time, rec.opt_at_start
        i = rec.index
        self._check("eq1", t >= a * opt_t, f"S^({i}) starts at {t} < alpha*OPT = {a * opt_t}")
        if self.schedules:
            prev = self.schedules[-1]
            self._check(
                "eq2", opt_t > prev.start_time,
                f"OPT(t^({i})) = {opt_t} <= t^({i - 1}) = {prev.start_time}",
            )
            allowed = (prev.end_point, self.space.origin)
            self._check("start_point", rec.start_point in allowed, f"S^({i}) starts at {rec.start_point!r}")
        else:
            self._check("start_point", rec.start_point == self.space.origin, "first schedule not from origin")
        if a >= self.checks.phi:
            L = rec.planned_length
            self._check("cond_a", L <= opt_t, f"|S^({i})| = {L} > OPT(t^({i})) = {opt_t}")
            self._check(
                "cond_b", t + L <= (1 + a) * opt_t,
                f"t^({i}) + |S^({i})| = {t + L} > (1+alpha) OPT = {(1 + a) * opt_t}",
            )

    def _dispatch_idle(self) -> None:
        if self._dispatch_time == self.time:
            self._same_time_dispatches += 1
        else:
            self._dispatch_time, self._same_time_dispatches = self.time, 1
        if self._same_time_dispatches > len(self.instance.requests) + 2:
            raise SimulationFault(f"idle dispatch cycle at time {self.time}")
        cmd = self.policy.on_idle(self.time, self.view())
        if cmd is not None:
            self._issue(cmd, "idle")

    # -- main loop --------------------------------------------------------

    def run(self) -> SimTrace:
        reqs = list(self.instance.requests)
        k = 0
        self._dispatch_idle()
        while True:
            t_rel = reqs[k].release if k < len(reqs) else None
            t_done = self.active.end_time if self.active is not None else None
            if t_rel is None and t_done is None:
                break
            if t_rel is not None and (t_done is None or t_rel <= t_done):
                self._advance_to(t_rel)
                r = reqs[k]
                k += 1
                self.released.append(r)
                self._log("release", request=r.id)
                cmd = self.policy.on_request(r, self.time, self.view())
                if cmd is not None:
                    self._issue(cmd, "request")
                if self.active is None:
                    self._dispatch_idle()
            else:
                self._advance_to(t_done)
                act = self.active
                self.active = None
                if act.record is not None:
                    act.record.completion_time = self.time
                self._log("complete", cmd=act.kind)
                self._dispatch_idle()
        return self._finish()

    def _finish(self) -> SimTrace:
        completion = max(self.served.values(), default=Fraction(0))
        for r in self.instance.requests:
            self.opt(r.release)
        opt_values = {
            format_rational(r.release): self.opt(r.release) for r in self.instance.requests
        }
        if self.checks.feasibility:
            missing = [r.id for r in self.instance.requests if r.id not in self.served]
            self._check("all_served", not missing, f"requests never served: {missing}")
            late = [r.id for r in self.instance.requests if r.id in self.served and self.served[r.id] < r.release]
            self._check("release", not late, f"requests served before release: {late}")
        if (
            self.checks.upper_bound
            and self.alpha is not None
            and Fraction(self.alpha) >= self.checks.phi
            and self.instance.requests
        ):
            final_opt = opt_values[format_rational(self.instance.requests[-1].release)]
            bound = (1 + Fraction(self.alpha)) * final_opt
            self._check("ratio", completion <= bound, f"ALG = {completion} > (1+alpha) OPT = {bound}")
        return SimTrace(
            instance=self.instance,
            policy=getattr(self.policy, "config", {"policy": type(self.policy).__name__}),
            events=self.events,
            schedules=self.schedules,
            trajectory=list(self.trajectory),
            completion_time=completion,
            end_time=self.time,
            opt_values=opt_values,
            checks=self.check_log,
        )


def run(instance: Instance, policy, checks: Optional[CheckConfig] = None) -> SimTrace:
    """Simulate ``policy`` on ``instance`` from time 0 with the server at O."""
    return Simulator(instance, policy, checks).run()
