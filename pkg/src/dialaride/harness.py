"""Command-line front end: run, gen, verify-bounds, sweep, stress, plotdata.

Exit codes: 0 pass, 2 invariant or bound violation, 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .engine import (
    CheckConfig,
    InvariantViolation,
    SimTrace,
    SimulationFault,
    run,
)
from .instance import (
    DEFAULT_EPSILON,
    FAMILIES,
    FamilyDomainError,
    Instance,
    InstanceError,
    LowerBoundFamily,
    Request,
    dumps_instance,
    generate_lower_bound,
    instance_to_json,
    load_instance,
    lower_bound_formula,
    predicted_outcome,
    prop4_case,
)
from .metric import (
    FiniteMetric,
    LineCoord,
    MetricError,
    RealLine,
    Vertex,
    format_rational,
    shortest_path_closure,
    to_rational,
)
from .offline import OracleTooLarge, oracle_opt, opt_offline
from .policy import UnknownPolicy, make_policy

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 2, 3


class InputError(ValueError):
    pass


def approx(q: Optional[Fraction]) -> str:
    return "n/a" if q is None else f"{float(q):.6f}"


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    instance: str
    policy: dict
    alg_time: Fraction
    opt_time: Fraction
    ratio: Optional[Fraction]
    invariant_results: list[tuple[str, bool]]
    trace_path: Optional[str] = None

    def render(self) -> str:
        passed: dict[str, int] = {}
        for tag, ok in self.invariant_results:
            passed[tag] = passed.get(tag, 0) + int(ok)
        lines = [
            f"instance: {self.instance}",
            "policy:   " + " ".join(f"{k}={v}" for k, v in sorted(self.policy.items())),
            f"ALG = {format_rational(self.alg_time)}  (~{approx(self.alg_time)})",
            f"OPT = {format_rational(self.opt_time)}  (~{approx(self.opt_time)})",
        ]
        if self.ratio is None:
            lines.append("ratio = undefined (opt_time is 0)")
        else:
            lines.append(f"ratio = {format_rational(self.ratio)}  (~{approx(self.ratio)})")
        lines.append("checks: " + (", ".join(f"{t} x{n}" for t, n in sorted(passed.items())) or "none"))
        if self.trace_path:
            lines.append(f"trace: {self.trace_path}")
        return "\n".join(lines)


def cmd_run(instance: Instance, policy, trace_path=None, checks: Optional[CheckConfig] = None) -> tuple[RunReport, SimTrace]:
    trace = run(instance, policy, checks or CheckConfig())
    if trace_path is not None:
        Path(trace_path).write_text(trace.to_jsonl())
    opt = trace.final_opt
    report = RunReport(
        instance=instance.name or "<instance>",
        policy=trace.policy,
        alg_time=trace.completion_time,
        opt_time=opt,
        ratio=trace.completion_time / opt if opt > 0 else None,
        invariant_results=list(trace.checks),
        trace_path=None if trace_path is None else str(trace_path),
    )
    return report, trace


# ---------------------------------------------------------------------------
# verify-bounds
# ---------------------------------------------------------------------------

Checkpoint = tuple[str, Callable[[SimTrace], bool]]


def _cmd_events(trace: SimTrace, name: str) -> list[dict]:
    return [e for e in trace.events if e["kind"] == "command" and e["cmd"] == name]


def _waited_until(trace: SimTrace, until: Fraction, pos=None) -> bool:
    for e in _cmd_events(trace, "wait_until"):
        if Fraction(e["until"]) == until:
            if pos is None or trace.position_at(Fraction(e["t"])) == pos:
                return True
    return False


def _dropped_at(trace: SimTrace, rid: int, t: Fraction) -> bool:
    return any(e["kind"] == "dropoff" and e["request"] == rid and Fraction(e["t"]) == t for e in trace.events)


def _schedule_starts(trace: SimTrace) -> list[Fraction]:
    return [s.start_time for s in trace.schedules]


def golden_checkpoints(family: LowerBoundFamily) -> list[Checkpoint]:
    """Intermediate timeline facts each construction is designed to produce."""
    a, e = family.alpha, family.epsilon
    kind = family.kind
    if kind == "lemma1":
        first = max(a, Fraction(1, 2))
        return [(f"first schedule starts at {first}", lambda tr: _schedule_starts(tr)[:1] == [first])]
    if kind == "prop2":
        return [
            (f"waits at O until 3*alpha = {3 * a}", lambda tr: _waited_until(tr, 3 * a, LineCoord(0))),
            (f"serves r2 at 3*alpha+1 = {3 * a + 1}", lambda tr: _dropped_at(tr, 2, 3 * a + 1)),
            (f"serves r1 at 3*alpha+3 = {3 * a + 3}", lambda tr: _dropped_at(tr, 1, 3 * a + 3)),
            ("first schedule not interrupted", lambda tr: bool(tr.schedules) and not tr.schedules[0].interrupted),
        ]
    if kind == "prop3":
        return [
            (f"waits at O until alpha = {a}", lambda tr: _waited_until(tr, a, LineCoord(0))),
            ("schedules start at alpha and alpha+1", lambda tr: _schedule_starts(tr)[:2] == [a, a + 1]),
            (f"second schedule ends at 3+alpha-2eps = {3 + a - 2 * e} in O",
             lambda tr: len(tr.schedules) > 1 and tr.schedules[1].completion_time == 3 + a - 2 * e
             and tr.schedules[1].end_point == LineCoord(0)),
        ]
    second = 2 * a + 3 * a * a
    checks: list[Checkpoint] = [
        (f"first schedule starts at alpha(1+eps) = {a * (1 + e)}",
         lambda tr: _schedule_starts(tr)[:1] == [a * (1 + e)]),
        (f"second schedule starts at 2alpha+3alpha^2 = {second}",
         lambda tr: _schedule_starts(tr)[1:2] == [second]),
    ]
    if kind in ("prop4case2", "prop4case3"):
        checks.insert(1, (f"waits in 1 until 2+alpha = {2 + a}", lambda tr: _waited_until(tr, 2 + a, LineCoord(1))))
    if kind == "prop4case3":
        checks.insert(2, (f"waits in 1 until 3+alpha-2eps = {3 + a - 2 * e}",
                          lambda tr: _waited_until(tr, 3 + a - 2 * e, LineCoord(1))))
    return checks


@dataclass
class VerifyRow:
    family: str
    alpha: Fraction
    status: str  # "pass" | "fail" | "skip"
    detail: str
    alg: Optional[Fraction] = None
    opt: Optional[Fraction] = None

    def render(self) -> str:
        head = f"{self.status.upper():4} {self.family:<11} alpha={format_rational(self.alpha):<8}"
        if self.alg is not None:
            head += f" ALG={format_rational(self.alg)} OPT={format_rational(self.opt)}"
        return head + (f"  {self.detail}" if self.detail else "")


def applicable_families(alpha: Fraction, eps: Fraction) -> list[str]:
    fams = ["lemma1"]
    if alpha >= 1:
        fams.append("prop2")
    elif alpha >= 0:
        fams.append("prop3")
        fams.append(prop4_case(alpha, eps))
    return fams


def verify_family(family: LowerBoundFamily) -> VerifyRow:
    try:
        inst = generate_lower_bound(family)
    except FamilyDomainError as exc:
        return VerifyRow(family.kind, family.alpha, "skip", f"outside construction domain: {exc.inequality}")
    pred_alg, pred_opt = predicted_outcome(family)
    try:
        trace = run(inst, make_policy("lazy", alpha=family.alpha))
    except (InvariantViolation, SimulationFault) as exc:
        return VerifyRow(family.kind, family.alpha, "fail", f"simulation aborted: {exc}")
    problems = []
    if trace.completion_time != pred_alg:
        problems.append(f"ALG {trace.completion_time} != predicted {pred_alg}")
    if trace.final_opt != pred_opt:
        problems.append(f"OPT {trace.final_opt} != predicted {pred_opt}")
    for label, test in golden_checkpoints(family):
        if not test(trace):
            problems.append(f"checkpoint failed: {label}")
            break
    return VerifyRow(
        family.kind,
        family.alpha,
        "fail" if problems else "pass",
        "; ".join(problems),
        trace.completion_time,
        trace.final_opt,
    )


def cmd_verify_bounds(alphas: Sequence, eps=DEFAULT_EPSILON, families: Optional[Sequence[str]] = None) -> list[VerifyRow]:
    eps = to_rational(eps)
    rows = []
    for alpha in alphas:
        alpha = to_rational(alpha)
        kinds = list(families) if families else applicable_families(alpha, eps)
        for kind in kinds:
            rows.append(verify_family(LowerBoundFamily(kind, alpha, eps)))
    return rows


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    alpha: Fraction
    lb_lemma1: Fraction
    lb_prop2: Optional[Fraction]
    lb_prop3: Optional[Fraction]
    lb_prop4: Optional[Fraction]
    lb_max: Fraction
    simulated_ratio: Optional[Fraction] = None

    def argmax_family(self, eps=DEFAULT_EPSILON) -> str:
        pairs = [("lemma1", self.lb_lemma1), ("prop2", self.lb_prop2), ("prop3", self.lb_prop3), ("prop4", self.lb_prop4)]
        best = max((v, -i, k) for i, (k, v) in enumerate(pairs) if v is not None)
        kind = best[2]
        return prop4_case(self.alpha, eps) if kind == "prop4" else kind


def sweep_row(alpha) -> SweepRow:
    a = to_rational(alpha)
    vals = {k: lower_bound_formula(k, a) for k in ("lemma1", "prop2", "prop3", "prop4")}
    return SweepRow(a, vals["lemma1"], vals["prop2"], vals["prop3"], vals["prop4"],
                    max(v for v in vals.values() if v is not None))


def alpha_grid(lo, hi, step) -> list[Fraction]:
    lo, hi, step = to_rational(lo), to_rational(hi), to_rational(step)
    if step <= 0:
        raise InputError("grid step must be positive")
    n = int((hi - lo) / step)
    return [lo + i * step for i in range(n + 1)]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "lb_lemma1", "lb_prop2", "lb_prop3", "lb_prop4", "lb_max", "simulated_ratio"])
        for r in self.rows:
            w.writerow([
                format_rational(r.alpha),
                *("" if v is None else f"{float(v):.6f}" for v in
                  (r.lb_lemma1, r.lb_prop2, r.lb_prop3, r.lb_prop4, r.lb_max, r.simulated_ratio)),
            ])
        return buf.getvalue()


def _brackets_crossover(lo: Fraction, hi: Fraction) -> bool:
    """Whether 1/2 + sqrt(11/12) lies in [lo, hi], decided exactly."""
    target = Fraction(11, 12)
    below = lo <= Fraction(1, 2) or (lo - Fraction(1, 2)) ** 2 <= target
    above = hi >= Fraction(1, 2) and (hi - Fraction(1, 2)) ** 2 >= target
    return below and above


def envelope_checks(rows: Sequence[SweepRow]) -> list[tuple[str, bool, str]]:
    out = []
    high = [r for r in rows if r.alpha >= 1]
    low = [r for r in rows if r.alpha < 1]
    if high:
        best = min(high, key=lambda r: (r.lb_max, r.alpha))
        ok = best.lb_max >= Fraction(2457, 1000)
        out.append((
            "min lb_max over alpha>=1 >= 2.457",
            ok,
            f"min {format_rational(best.lb_max)} (~{approx(best.lb_max)}) at alpha={format_rational(best.alpha)}",
        ))
        if len(high) > 1:
            step = high[1].alpha - high[0].alpha
            out.append((
                "minimiser within one grid step of 1/2+sqrt(11/12)",
                _brackets_crossover(best.alpha - step, best.alpha + step),
                f"argmin alpha={format_rational(best.alpha)}, step {format_rational(step)}",
            ))
    if low:
        best = min(low, key=lambda r: (r.lb_max, r.alpha))
        out.append((
            "min lb_max over alpha<1 >= 5/2",
            best.lb_max >= Fraction(5, 2),
            f"min {format_rational(best.lb_max)} (~{approx(best.lb_max)}) at alpha={format_rational(best.alpha)}",
        ))
    lo, hi = Fraction(1078, 1000), Fraction(1618, 1000)
    outside = [r for r in rows if not (lo < r.alpha < hi)]
    bad = [r for r in outside if r.lb_max < Fraction(2618, 1000)]
    out.append((
        "lb_max >= 2.618 outside (1.078, 1.618)",
        not bad,
        f"{len(outside)} grid points checked" + (f", first failure alpha={format_rational(bad[0].alpha)}" if bad else ""),
    ))
    return out


def simulated_ratio(alpha: Fraction, kind: str, eps) -> Optional[Fraction]:
    fam = LowerBoundFamily(kind, alpha, eps)
    try:
        inst = generate_lower_bound(fam)
    except FamilyDomainError:
        return None
    tr = run(inst, make_policy("lazy", alpha=alpha), CheckConfig.off())
    return tr.completion_time / tr.final_opt


def cmd_sweep(alphas: Sequence, eps=DEFAULT_EPSILON, simulate: bool = False) -> SweepResult:
    eps = to_rational(eps)
    rows = [sweep_row(a) for a in alphas]
    if simulate:
        mismatches = []
        for r in rows:
            kind = r.argmax_family(eps)
            r.simulated_ratio = simulated_ratio(r.alpha, kind, eps)
            if r.simulated_ratio is not None:
                alg, opt = predicted_outcome(LowerBoundFamily(kind, r.alpha, eps))
                if r.simulated_ratio != alg / opt:
                    mismatches.append(r)
        checks = envelope_checks(rows)
        simulated = sum(r.simulated_ratio is not None for r in rows)
        checks.append((
            "simulated ratio equals finite-eps closed form",
            not mismatches,
            f"{simulated} simulated, {len(mismatches)} mismatches"
            + (f", first at alpha={format_rational(mismatches[0].alpha)}" if mismatches else ""),
        ))
        return SweepResult(rows, checks)
    return SweepResult(rows, envelope_checks(rows))


# ---------------------------------------------------------------------------
# stress
# ---------------------------------------------------------------------------


def random_instance(rng: random.Random, space: str, n_max: int, grid: int, vertices: int = 4,
                    capacity="random") -> Instance:
    """A small random instance with strictly increasing releases.

    Line coordinates are multiples of 1/grid in [-4, 4]; finite metrics are
    random integer weights on ``vertices`` vertices closed under shortest paths.
    """
    n = rng.randint(1, n_max)
    if capacity == "random":
        cap = rng.choice([1, 2, None])
    else:
        cap = capacity
    if space == "line":
        sp = RealLine()

        def pt():
            return LineCoord(Fraction(rng.randint(-4 * grid, 4 * grid), grid))
    else:
        w = [[0] * vertices for _ in range(vertices)]
        for i in range(vertices):
            for j in range(i + 1, vertices):
                w[i][j] = w[j][i] = rng.randint(1, 6)
        sp = FiniteMetric(shortest_path_closure(w))

        def pt():
            return Vertex(rng.randrange(vertices))
    t = Fraction(0)
    reqs = []
    for i in range(1, n + 1):
        t += Fraction(rng.randint(1, 8), 4)
        a = pt()
        b = a if rng.random() < 0.25 else pt()
        reqs.append(Request(i, a, b, t))
    return Instance(sp, tuple(reqs), cap)


@dataclass
class StressOutcome:
    index: int
    ok: bool
    message: str
    instance_json: str
    tags: dict = field(default_factory=dict)


def _stress_one(args) -> StressOutcome:
    index, seed, space, n_max, grid, alpha, capacity = args
    rng = random.Random(f"{seed}:{space}:{index}")
    inst = random_instance(rng, space, n_max, grid, capacity=capacity)
    inst = Instance(inst.space, inst.requests, inst.capacity, name=f"stress-{space}-{seed}-{index}")
    try:
        trace = run(inst, make_policy("lazy", alpha=alpha), CheckConfig())
        for r in inst.requests:
            exact = oracle_opt(inst, r.release)
            got = trace.opt_values[format_rational(r.release)]
            if exact != got:
                raise InvariantViolation("opt_prefix", f"OPT({r.release}) = {got}, oracle says {exact}")
        final = oracle_opt(inst, inst.requests[-1].release)
        if trace.completion_time > (1 + alpha) * final:
            raise InvariantViolation("ratio", f"ALG {trace.completion_time} > (1+alpha) * {final}")
    except (InvariantViolation, SimulationFault) as exc:
        return StressOutcome(index, False, str(exc), dumps_instance(inst))
    tags: dict[str, int] = {}
    for tag, _ in trace.checks:
        tags[tag] = tags.get(tag, 0) + 1
    return StressOutcome(index, True, "", "", tags)


@dataclass
class StressResult:
    count: int
    failures: list[StressOutcome]
    check_counts: dict = field(default_factory=dict)  # engine checks passed, by tag

    @property
    def ok(self) -> bool:
        return not self.failures


def cmd_stress(count: int, seed: int, n_max: int = 5, grid: int = 2, alpha=Fraction(81, 50),
               space: str = "line", capacity="random", workers: int = 1,
               reproducer_dir=None) -> StressResult:
    if n_max > 6:
        raise InputError("stress instances are limited to n_max <= 6")
    if space not in ("line", "finite"):
        raise InputError(f"unknown space {space!r}")
    alpha = to_rational(alpha)
    jobs = [(i, seed, space, n_max, grid, alpha, capacity) for i in range(count)]
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_stress_one, jobs, chunksize=max(1, count // (4 * workers))))
    else:
        outcomes = [_stress_one(j) for j in jobs]
    failures = [o for o in outcomes if not o.ok]
    counts: dict[str, int] = {}
    for o in outcomes:
        for tag, n in o.tags.items():
            counts[tag] = counts.get(tag, 0) + n
    if failures and reproducer_dir is not None:
        out = Path(reproducer_dir)
        out.mkdir(parents=True, exist_ok=True)
        for f in failures:
            payload = {"seed": seed, "index": f.index, "space": space, "error": f.message,
                       "instance": json.loads(f.instance_json)}
            (out / f"reproducer-{space}-{seed}-{f.index}.json").write_text(json.dumps(payload, sort_keys=True, indent=1))
    return StressResult(count, failures, dict(sorted(counts.items())))


# ---------------------------------------------------------------------------
# plotdata
# ---------------------------------------------------------------------------


def _compress(points: Iterable[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    out: list[tuple[Fraction, Fraction]] = []
    for p in points:
        if out and out[-1] == p:
            continue
        if out and out[-1][0] == p[0]:
            out[-1] = p
            continue
        if len(out) >= 2:
            (t0, x0), (t1, x1) = out[-2], out[-1]
            t2, x2 = p
            if (x1 - x0) * (t2 - t1) == (x2 - x1) * (t1 - t0):
                out[-1] = p
                continue
        out.append(p)
    return out


def schedule_breakpoints(space, stops) -> list[tuple[Fraction, Fraction]]:
    pts = [(stops[0].time, stops[0].point.x)]
    for prev, nxt in zip(stops, stops[1:]):
        depart = nxt.time - space.distance(prev.point, nxt.point)
        if depart > prev.time:
            pts.append((depart, prev.point.x))
        pts.append((nxt.time, nxt.point.x))
    return _compress(pts)


def cmd_plotdata(instance: Instance, alpha, decimal: bool = False) -> str:
    if not isinstance(instance.space, RealLine):
        raise InputError("plot data is only available for instances on the line")
    trace = run(instance, make_policy("lazy", alpha=alpha))
    alg = _compress((t, p.x) for t, p in trace.trajectory)
    if instance.requests:
        sched = opt_offline(instance.space, instance.capacity, instance.requests).schedule
        opt = schedule_breakpoints(instance.space, sched.stops(instance.space))
    else:
        opt = [(Fraction(0), Fraction(0))]
    fmt = (lambda q: f"{float(q):.6f}") if decimal else format_rational
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "pos", "who"])
    for who, pts in (("ALG", alg), ("OPT", opt)):
        for t, x in pts:
            w.writerow([fmt(t), fmt(x), who])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _rational_arg(s: str) -> Fraction:
    try:
        return to_rational(s)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"not an exact rational: {s!r}") from exc


def _rational_list(s: str) -> list[Fraction]:
    return [_rational_arg(x) for x in s.split(",") if x.strip()]


def _capacity_arg(s: str):
    if s in ("inf", "random"):
        return None if s == "inf" else "random"
    try:
        c = int(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"capacity must be an integer, 'inf' or 'random': {s!r}") from exc
    if c < 1:
        raise argparse.ArgumentTypeError("capacity must be positive")
    return c


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", help="instance JSON file")
    src.add_argument("--family", choices=FAMILIES, help="lower-bound construction")
    p.add_argument("--alpha", type=_rational_arg, help="construction / policy parameter")
    p.add_argument("--eps", type=_rational_arg, default=DEFAULT_EPSILON)
    p.add_argument("--capacity", type=_capacity_arg, default=None, help="server capacity for --family (default inf)")


def _resolve_instance(args) -> Instance:
    if args.instance:
        return load_instance(args.instance)
    if args.alpha is None:
        raise InputError("--family needs --alpha")
    cap = args.capacity if args.capacity != "random" else None
    return generate_lower_bound(LowerBoundFamily(args.family, args.alpha, args.eps), capacity=cap)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialaride", description="LAZY(alpha) simulation and verification lab")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="simulate one instance with invariant checks")
    _add_instance_args(p)
    p.add_argument("--policy", default="lazy")
    p.add_argument("--policy-alpha", type=_rational_arg, help="policy alpha if different from --alpha")
    p.add_argument("--trace", help="write the JSON-lines trace here")

    p = sub.add_parser("gen", help="print a lower-bound instance as JSON")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--alpha", type=_rational_arg, required=True)
    p.add_argument("--eps", type=_rational_arg, default=DEFAULT_EPSILON)
    p.add_argument("--capacity", type=_capacity_arg, default=None)

    p = sub.add_parser("verify-bounds", help="check simulations against the closed forms")
    p.add_argument("--alphas", type=_rational_list, required=True, help="comma-separated rationals")
    p.add_argument("--eps", type=_rational_arg, default=DEFAULT_EPSILON)
    p.add_argument("--families", type=lambda s: [x for x in s.split(",") if x], default=None)

    p = sub.add_parser("sweep", help="lower-bound envelope over an alpha grid")
    p.add_argument("--start", type=_rational_arg, default=Fraction(0))
    p.add_argument("--stop", type=_rational_arg, default=Fraction(3))
    p.add_argument("--step", type=_rational_arg, default=Fraction(1, 1000))
    p.add_argument("--eps", type=_rational_arg, default=DEFAULT_EPSILON)
    p.add_argument("--simulate", action="store_true", help="also simulate the matching construction")
    p.add_argument("--csv", help="write plot data CSV here")

    p = sub.add_parser("stress", help="random instances against the brute-force oracle")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--grid", type=int, default=2, help="coordinates are multiples of 1/grid")
    p.add_argument("--alpha", type=_rational_arg, default=Fraction(81, 50))
    p.add_argument("--space", choices=("line", "finite"), default="line")
    p.add_argument("--capacity", type=_capacity_arg, default="random")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--reproducers", default="stress-failures", help="directory for failing instances")

    p = sub.add_parser("plotdata", help="ALG and OPT trajectories as CSV (line only)")
    _add_instance_args(p)
    p.add_argument("--decimal", action="store_true", help="render values as decimals")
    p.add_argument("--out", help="write CSV here instead of stdout")
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return _dispatch(args, out)
    except (InputError, InstanceError, FamilyDomainError, MetricError, UnknownPolicy,
            OracleTooLarge, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantViolation, SimulationFault) as exc:
        print(f"violation: {exc}", file=out)
        return EXIT_VIOLATION


def _dispatch(args, out) -> int:
    if args.verb == "gen":
        fam = LowerBoundFamily(args.family, args.alpha, args.eps)
        cap = args.capacity if args.capacity != "random" else None
        print(json.dumps(instance_to_json(generate_lower_bound(fam, capacity=cap)), sort_keys=True, indent=1), file=out)
        return EXIT_OK

    if args.verb == "run":
        inst = _resolve_instance(args)
        alpha = args.policy_alpha if args.policy_alpha is not None else args.alpha
        if alpha is None:
            raise InputError("policy needs --alpha (or --policy-alpha)")
        try:
            policy = make_policy(args.policy, alpha=alpha)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        report, _ = cmd_run(inst, policy, args.trace)
        print(report.render(), file=out)
        return EXIT_OK

    if args.verb == "verify-bounds":
        if args.families:
            unknown = [f for f in args.families if f not in FAMILIES]
            if unknown:
                raise InputError(f"unknown families: {unknown}")
        rows = cmd_verify_bounds(args.alphas, args.eps, args.families)
        for r in rows:
            print(r.render(), file=out)
        failed = sum(r.status == "fail" for r in rows)
        print(f"{len(rows) - failed} of {len(rows)} rows without mismatch "
              f"({sum(r.status == 'skip' for r in rows)} skipped)", file=out)
        return EXIT_VIOLATION if failed else EXIT_OK

    if args.verb == "sweep":
        res = cmd_sweep(alpha_grid(args.start, args.stop, args.step), args.eps, args.simulate)
        if args.csv:
            Path(args.csv).write_text(res.to_csv())
        for label in (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2)):
            for r in res.rows:
                if r.alpha == label:
                    print(f"alpha={format_rational(r.alpha):<5} lb_max={format_rational(r.lb_max)} (~{approx(r.lb_max)})"
                          + (f" simulated~{approx(r.simulated_ratio)}" if r.simulated_ratio is not None else ""), file=out)
        for name, ok, detail in res.checks:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)
        return EXIT_OK if res.ok else EXIT_VIOLATION

    if args.verb == "stress":
        res = cmd_stress(args.count, args.seed, args.n_max, args.grid, args.alpha, args.space,
                         args.capacity, args.workers, args.reproducers)
        for f in res.failures:
            print(f"FAIL instance {f.index}: {f.message}", file=out)
        print(f"{res.count - len(res.failures)} of {res.count} {args.space} instances passed "
              f"(seed={args.seed}, alpha={format_rational(args.alpha)})", file=out)
        print("checks passed: " + ", ".join(f"{t} x{n}" for t, n in res.check_counts.items()), file=out)
        return EXIT_OK if res.ok else EXIT_VIOLATION

    if args.verb == "plotdata":
        inst = _resolve_instance(args)
        if args.alpha is None:
            raise InputError("plotdata needs --alpha")
        text = cmd_plotdata(inst, args.alpha, args.decimal)
        if args.out:
            Path(args.out).write_text(text)
        else:
            out.write(text)
        return EXIT_OK
    raise InputError(f"unknown verb {args.verb}")


if __name__ == "__main__":
    sys.exit(main())
