"""Requests, instances, and the adversarial lower-bound instance generators."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .metric import (
    LineCoord,
    MetricError,
    MetricSpace,
    Point,
    RealLine,
    format_rational,
    point_from_json,
    point_to_json,
    space_from_json,
    to_rational,
)

DEFAULT_EPSILON = Fraction(1, 1000)

FAMILIES = ("lemma1", "prop2", "prop3", "prop4case1", "prop4case2", "prop4case3")


class InstanceError(ValueError):
    """Malformed instance input (JSON structure, bad points)."""


class FamilyDomainError(ValueError):
    """The (alpha, eps) pair lies outside a construction's admissible domain."""

    def __init__(self, kind: str, inequality: str, alpha: Fraction, epsilon: Fraction):
        self.kind = kind
        self.inequality = inequality
        super().__init__(
            f"{kind}: alpha={alpha}, eps={epsilon} violates `{inequality}`"
        )


@dataclass(frozen=True)
class Request:
    id: int
    source: Point
    destination: Point
    release: Fraction

    @property
    def is_visit(self) -> bool:
        """True for a = b requests, which only need to be visited."""
        return self.source == self.destination


@dataclass(frozen=True)
class Instance:
    space: MetricSpace
    requests: tuple[Request, ...] = ()
    capacity: Optional[int] = None  # None means unbounded
    name: str = ""

    def request(self, rid: int) -> Request:
        for r in self.requests:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def released_by(self, t) -> tuple[Request, ...]:
        return tuple(r for r in self.requests if r.release <= t)


def line_request(rid: int, a, b, t) -> Request:
    return Request(rid, LineCoord(to_rational(a)), LineCoord(to_rational(b)), to_rational(t))


def validate(instance: Instance) -> list[str]:
    """Every violated instance invariant, as readable strings; empty means ok."""
    violations = []
    if instance.capacity is not None and instance.capacity < 1:
        violations.append(f"capacity {instance.capacity} is not a positive integer")
    ids = [r.id for r in instance.requests]
    if len(set(ids)) != len(ids):
        violations.append("duplicate request ids")
    prev = None
    for r in instance.requests:
        if r.release <= 0:
            violations.append(f"request {r.id}: release {r.release} is not positive")
        if prev is not None and r.release <= prev.release:
            violations.append(
                f"non-strict release order: request {r.id} at {r.release} "
                f"after request {prev.id} at {prev.release}"
            )
        for label, p in (("source", r.source), ("destination", r.destination)):
            if not instance.space.is_request_point(p):
                violations.append(f"request {r.id}: {label} {p!r} is not a valid request point")
                continue
            try:
                instance.space.check_point(p)
            except MetricError as exc:
                violations.append(f"request {r.id}: {exc}")
        prev = r
    return violations


# ---------------------------------------------------------------------------
# Lower-bound constructions (all on the real line, origin 0).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundFamily:
    kind: str
    alpha: Fraction
    epsilon: Fraction = DEFAULT_EPSILON

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown family {self.kind!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "alpha", to_rational(self.alpha))
        object.__setattr__(self, "epsilon", to_rational(self.epsilon))


Check = tuple[str, Callable[[Fraction, Fraction], bool]]


def _case2_3_checks() -> list[Check]:
    return [
        ("alpha + eps > alpha*(1+eps)", lambda a, e: a + e > a * (1 + e)),
        ("alpha*(1+eps) + 2 > alpha*(2*alpha+1+eps)", lambda a, e: a * (1 + e) + 2 > a * (2 * a + 1 + e)),
        ("alpha*(1+eps) + 2 > 2 + alpha", lambda a, e: a * (1 + e) + 2 > 2 + a),
    ]


_DOMAIN: dict[str, list[Check]] = {
    "lemma1": [
        ("alpha >= 0", lambda a, e: a >= 0),
    ],
    "prop2": [
        ("eps > 0", lambda a, e: e > 0),
        ("alpha >= 1", lambda a, e: a >= 1),
        ("3*alpha + 2 > 3*alpha^2", lambda a, e: 3 * a + 2 > 3 * a * a),
        ("3*alpha + 2 > 3*alpha^2 + alpha*eps", lambda a, e: 3 * a + 2 > 3 * a * a + a * e),
    ],
    "prop3": [
        ("eps > 0", lambda a, e: e > 0),
        ("0 <= alpha < 1", lambda a, e: 0 <= a < 1),
        ("eps < alpha/2", lambda a, e: e < a / 2),
        ("eps < 1/alpha - alpha", lambda a, e: e < 1 / a - a),
        ("eps < 1 - alpha", lambda a, e: e < 1 - a),
    ],
    "prop4case1": [
        ("eps > 0", lambda a, e: e > 0),
        ("0 <= alpha < 2/3", lambda a, e: 0 <= a < Fraction(2, 3)),
        ("alpha + eps > alpha*(1+eps)", lambda a, e: a + e > a * (1 + e)),
        ("alpha*(1+eps) + 2 > alpha*(2*alpha+1+eps)", lambda a, e: a * (1 + e) + 2 > a * (2 * a + 1 + e)),
        ("alpha*(1+eps) + 2 > 2*alpha + 3*alpha^2", lambda a, e: a * (1 + e) + 2 > 2 * a + 3 * a * a),
        ("2*alpha + 3*alpha^2 < 2 + 3*alpha", lambda a, e: 2 * a + 3 * a * a < 2 + 3 * a),
    ],
    "prop4case2": [
        ("eps > 0", lambda a, e: e > 0),
        ("alpha >= 2/3", lambda a, e: a >= Fraction(2, 3)),
        # alpha < (sqrt(37 - 12 eps) - 1)/6, squared out: 3 + alpha - eps > 2 alpha + 3 alpha^2
        ("3 + alpha - eps > 2*alpha + 3*alpha^2", lambda a, e: 3 + a - e > 2 * a + 3 * a * a),
        *_case2_3_checks(),
    ],
    "prop4case3": [
        ("eps > 0", lambda a, e: e > 0),
        ("alpha < 1", lambda a, e: a < 1),
        ("3 + alpha - eps <= 2*alpha + 3*alpha^2", lambda a, e: 3 + a - e <= 2 * a + 3 * a * a),
        *_case2_3_checks(),
        ("3 + alpha - eps > 3 + alpha - 2*eps", lambda a, e: e > 0),
        ("4 + alpha - 3*eps > 2*alpha + 3*alpha^2", lambda a, e: 4 + a - 3 * e > 2 * a + 3 * a * a),
    ],
}


def check_domain(family: LowerBoundFamily) -> None:
    """Raise :class:`FamilyDomainError` naming the first failing inequality."""
    a, e = family.alpha, family.epsilon
    for label, test in _DOMAIN[family.kind]:
        ok = False
        try:
            ok = test(a, e)
        except ZeroDivisionError:
            ok = False
        if not ok:
            raise FamilyDomainError(family.kind, label, a, e)


def _requests(family: LowerBoundFamily) -> list[tuple]:
    a, e = family.alpha, family.epsilon
    kind = family.kind
    if kind == "lemma1":
        return [(1, 1, Fraction(1, 2))]
    if kind == "prop2":
        x = 2 - 3 * a - e
        return [(0, 1, e), (0, -1, 2 * e), (x, x, 3 * a + e)]
    if kind == "prop3":
        return [
            (e / 2, Fraction(1, 2), e / 2),
            (1, 1, e),
            (0, 0, a + e),
            (Fraction(1, 2) + e, 1, a + 2 * e),
            (1, 1, a + 1 + e),
        ]
    far = 2 + a - e
    if kind == "prop4case1":
        return [(0, 1, e), (-a, -a, a + e), (far, far, a + 2 * e), (far, far, 2 + 3 * a)]
    x3 = 2 / a + 1 - 2 * a - e
    if kind == "prop4case2":
        return [
            (0, 1, e),
            (-a, -a, a + e),
            (x3, x3, a + 2 * e),
            (far, far, 2 + a - e),
            (far, far, 2 + 3 * a),
        ]
    x4 = 3 / a + 1 - 2 * a - (2 + a) * e / a
    return [
        (0, 1, e),
        (-a, -a, a + e),
        (x3, x3, a + 2 * e),
        (x4, x4, 2 + a - e),
        (far, far, 3 + a - 3 * e),
        (far, far, 2 + 3 * a),
    ]


def generate_lower_bound(family: LowerBoundFamily, capacity: Optional[int] = None) -> Instance:
    """The exact request sequence of the chosen construction on the line.

    Capacity does not affect any of the constructions; unbounded by default.
    """
    check_domain(family)
    reqs = tuple(line_request(i, a, b, t) for i, (a, b, t) in enumerate(_requests(family), start=1))
    inst = Instance(
        RealLine(),
        reqs,
        capacity,
        name=f"{family.kind}(alpha={family.alpha},eps={family.epsilon})",
    )
    problems = validate(inst)
    if problems:
        raise FamilyDomainError(family.kind, "; ".join(problems), family.alpha, family.epsilon)
    return inst


def predicted_outcome(family: LowerBoundFamily) -> tuple[Fraction, Fraction]:
    """Closed-form (ALG completion, OPT completion) claimed for the construction."""
    check_domain(family)
    a, e = family.alpha, family.epsilon
    kind = family.kind
    if kind == "lemma1":
        return (1 + a, Fraction(1)) if a >= Fraction(1, 2) else (Fraction(3, 2), Fraction(1))
    if kind == "prop2":
        return 6 * a + 2 + e, 3 * a + e
    if kind == "prop3":
        return 4 + a - 2 * e, a + 1 + e
    return 5 + 7 * a + 3 * a * a - 3 * e, 2 + 3 * a


def lower_bound_formula(kind: str, alpha) -> Optional[Fraction]:
    """Limit ratio (eps -> 0) of a construction, or None outside its alpha range."""
    a = to_rational(alpha)
    if kind == "lemma1":
        return 1 + a if a >= 0 else None
    if kind == "prop2":
        return 2 + Fraction(2) / (3 * a) if a >= 1 else None
    if kind == "prop3":
        return 1 + Fraction(3) / (a + 1) if 0 <= a < 1 else None
    if kind == "prop4":
        return 2 + a + (1 - a) / (2 + 3 * a) if 0 <= a < 1 else None
    raise ValueError(f"unknown bound {kind!r}")


def prop4_case(alpha, epsilon=DEFAULT_EPSILON) -> str:
    """Which of the three prop4 variants covers this alpha."""
    a, e = to_rational(alpha), to_rational(epsilon)
    if a < Fraction(2, 3):
        return "prop4case1"
    if 3 + a - e > 2 * a + 3 * a * a:
        return "prop4case2"
    return "prop4case3"


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def instance_to_json(instance: Instance) -> dict:
    return {
        "space": instance.space.to_json(),
        "capacity": "inf" if instance.capacity is None else instance.capacity,
        "requests": [
            {
                "a": point_to_json(r.source),
                "b": point_to_json(r.destination),
                "t": format_rational(r.release),
            }
            for r in instance.requests
        ],
    }


def instance_from_json(obj: dict, name: str = "") -> Instance:
    try:
        space = space_from_json(obj["space"])
        cap = obj.get("capacity", "inf")
        if cap in ("inf", None):
            capacity = None
        elif isinstance(cap, int) and not isinstance(cap, bool):
            capacity = cap
        else:
            raise InstanceError(f"capacity must be a positive integer or 'inf', got {cap!r}")
        reqs = []
        for i, item in enumerate(obj.get("requests", []), start=1):
            reqs.append(
                Request(
                    i,
                    point_from_json(space, item["a"]),
                    point_from_json(space, item["b"]),
                    to_rational(item["t"]),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"malformed instance: {exc}") from exc
    return Instance(space, tuple(reqs), capacity, name=name)


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_json(instance), sort_keys=True)


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_json(json.load(fh), name=str(path))
