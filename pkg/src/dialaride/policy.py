"""Online policies.  Only LAZY(alpha) is implemented; ``make_policy`` is the
registry where baselines would be added."""
from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .engine import (
    Command,
    DeliverAndReturn,
    FollowSchedule,
    OnlinePolicy,
    ServerView,
    WaitUntilCmd,
    check_interruptible,
)
from .instance import Request
from .metric import format_rational, to_rational
from .offline import shortest_schedule

__all__ = [
    "Command",
    "DeliverAndReturn",
    "FollowSchedule",
    "LazyPolicy",
    "OnlinePolicy",
    "UnknownPolicy",
    "WaitUntilCmd",
    "make_policy",
]


class UnknownPolicy(ValueError):
    pass


class LazyPolicy:
    """Wait until alpha * OPT(t), serve everything pending with a shortest
    schedule, and abandon that schedule for a fresh start from the origin
    whenever the loaded requests can be delivered and O reached by
    alpha * OPT(t)."""

    name = "lazy"

    def __init__(self, alpha):
        alpha = to_rational(alpha)
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        self.alpha = alpha
        self.started = 0

    @property
    def config(self) -> dict:
        return {"policy": self.name, "alpha": format_rational(self.alpha)}

    def on_request(self, request: Request, t: Fraction, view: ServerView) -> Optional[Command]:
        if check_interruptible(view, t, self.alpha, view.opt(t)):
            return DeliverAndReturn()
        return None

    def on_idle(self, t: Fraction, view: ServerView) -> Optional[Command]:
        target = self.alpha * view.opt(t)
        if t < target:
            return WaitUntilCmd(target)
        if view.pending:
            self.started += 1
            res = shortest_schedule(view.space, view.capacity, view.pending, view.position, start_time=t)
            return FollowSchedule(res.schedule)
        return None


_REGISTRY = {"lazy": LazyPolicy}
_PLANNED = ("smartstart", "ignore", "replan", "wait_or_ignore")


def make_policy(name: str, **params) -> LazyPolicy:
    key = name.lower()
    if key in _REGISTRY:
        return _REGISTRY[key](**params)
    if key in _PLANNED:
        raise UnknownPolicy(f"policy {name!r} is not implemented")
    raise UnknownPolicy(f"unknown policy {name!r}")
