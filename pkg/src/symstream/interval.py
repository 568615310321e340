"""Interval-domain monitor used as a precision baseline.

Real streams are tracked as closed intervals and Bool streams in Kleene
three-valued logic (``None`` is unknown).  No relation between values is
retained, so uncertainty never cancels out.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import FragmentError, ReadingError
from .monitor import Verdict, as_reading
from .spec_ast import Const, Fun, Ite, Offset, Sort, Specification, StreamExpr, check_well_formed, flatten
from .symbolic import Exact, Range, Unknown
from .symbolic import format_number

INF = math.inf
Bool3 = bool | None


@dataclass(frozen=True)
class Interval:
    lo: Fraction | float
    hi: Fraction | float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo},{self.hi}]")

    @staticmethod
    def point(v) -> "Interval":
        return Interval(Fraction(v), Fraction(v))

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other: "Interval") -> "Interval":
        return self + (-other)

    def scale(self, k: Fraction) -> "Interval":
        if k == 0:
            return Interval.point(0)
        a, b = self.lo * k, self.hi * k
        return Interval(min(a, b), max(a, b))

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, lo, hi) -> "Interval":
        return Interval(max(self.lo, lo), min(self.hi, hi))

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __str__(self) -> str:
        lo = "-inf" if self.lo == -INF else format_number(self.lo)
        hi = "inf" if self.hi == INF else format_number(self.hi)
        return f"[{lo},{hi}]"


TOP_REAL = Interval(-INF, INF)
AbsVal = Interval | Bool3


def _not(a: Bool3) -> Bool3:
    return None if a is None else not a


def _and(args: list[Bool3]) -> Bool3:
    if any(a is False for a in args):
        return False
    return True if all(a is True for a in args) else None


def _or(args: list[Bool3]) -> Bool3:
    if any(a is True for a in args):
        return True
    return False if all(a is False for a in args) else None


def _le(a: Interval, b: Interval, strict: bool) -> Bool3:
    if (a.hi < b.lo) or (not strict and a.hi <= b.lo):
        return True
    if (a.lo > b.hi) or (strict and a.lo >= b.hi):
        return False
    return None


def abs_eval(e: StreamExpr, t: int, lookup, sorts) -> AbsVal:
    """Abstract value of ``e`` at ``t``; ``lookup(stream, u)`` gives stored abstract values."""
    if isinstance(e, Const):
        return e.value if e.sort is Sort.BOOL else Interval.point(e.value)
    if isinstance(e, Offset):
        u = t + e.offset
        if u < 0:
            return e.default if sorts(e.stream) is Sort.BOOL else Interval.point(e.default)
        return lookup(e.stream, u)
    if isinstance(e, Ite):
        c = abs_eval(e.cond, t, lookup, sorts)
        if c is True:
            return abs_eval(e.then, t, lookup, sorts)
        if c is False:
            return abs_eval(e.other, t, lookup, sorts)
        a = abs_eval(e.then, t, lookup, sorts)
        b = abs_eval(e.other, t, lookup, sorts)
        if isinstance(a, Interval):
            return a.hull(b)
        return a if a == b else None
    args = [abs_eval(a, t, lookup, sorts) for a in e.args]
    op = e.op
    if op == "add":
        return args[0] + args[1]
    if op == "sub":
        return args[0] - args[1]
    if op == "neg":
        return -args[0]
    if op == "mul":
        x, y = args
        if x.is_point:
            return y.scale(x.lo)
        if y.is_point:
            return x.scale(y.lo)
        raise FragmentError("product of two uncertain Reals")
    if op == "not":
        return _not(args[0])
    if op == "and":
        return _and(args)
    if op == "or":
        return _or(args)
    if op == "implies":
        return _or([_not(args[0]), args[1]])
    if op == "xor":
        a, b = args
        return None if a is None or b is None else a != b
    if op == "le":
        return _le(args[0], args[1], False)
    if op == "lt":
        return _le(args[0], args[1], True)
    if op == "eq":
        a, b = args
        if isinstance(a, Interval):
            if a.is_point and b.is_point:
                return a.lo == b.lo
            return False if a.hi < b.lo or b.hi < a.lo else None
        return None if a is None or b is None else a == b
    raise FragmentError(f"unsupported operator {op}")


# ---------------------------------------------------------------------------
# Range assumptions
# ---------------------------------------------------------------------------


def _conjuncts(e: StreamExpr):
    if isinstance(e, Fun) and e.op == "and":
        for a in e.args:
            yield from _conjuncts(a)
    else:
        yield e


def _range_bound(c: StreamExpr, spec: Specification):
    """``(stream, lo, hi)`` for ``const <= x[now]``-style atoms over an input, else ``None``."""
    if not (isinstance(c, Fun) and c.op in ("le", "lt", "eq")):
        return None
    a, b = c.args
    if isinstance(a, Offset) and isinstance(b, Const):
        x, k, x_left = a, b.value, True
    elif isinstance(b, Offset) and isinstance(a, Const):
        x, k, x_left = b, a.value, False
    else:
        return None
    if x.offset != 0 or spec.decl(x.stream).kind != "input" or isinstance(k, bool):
        return None
    if c.op == "eq":
        return x.stream, k, k
    # strict bounds are widened to their closure
    return (x.stream, -INF, k) if x_left else (x.stream, k, INF)


def range_assumptions(spec: Specification) -> dict[str, tuple]:
    """Per-input interval constraints expressible from the assumptions; others are ignored with a warning."""
    out: dict[str, list] = {}
    for a in spec.assumptions:
        bounds = [_range_bound(c, spec) for c in _conjuncts(a)]
        if any(b is None for b in bounds):
            warnings.warn("interval monitor ignores a non-range assumption", stacklevel=2)
            continue
        for name, lo, hi in bounds:
            cur = out.setdefault(name, [-INF, INF])
            cur[0] = max(cur[0], lo)
            cur[1] = min(cur[1], hi)
    return {k: tuple(v) for k, v in out.items()}


# ---------------------------------------------------------------------------
# Monitor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbsState:
    spec: Specification
    order: tuple[str, ...]
    ranges: dict
    t: int = 0
    previous: tuple[tuple[str, AbsVal], ...] = ()


def init_abs(spec: Specification) -> AbsState:
    flat = flatten(spec)
    return AbsState(flat, tuple(check_well_formed(flat)), range_assumptions(flat))


def _abs_reading(spec: Specification, name: str, r, ranges) -> AbsVal:
    sort = spec.sort_of(name)
    r = as_reading(r)
    if isinstance(r, Unknown):
        val: AbsVal = None if sort is Sort.BOOL else TOP_REAL
    elif isinstance(r, Exact):
        if isinstance(r.value, bool) != (sort is Sort.BOOL):
            raise ReadingError(f"reading does not fit {sort.value} stream {name}")
        val = r.value if sort is Sort.BOOL else Interval.point(r.value)
    elif isinstance(r, Range):
        if sort is Sort.BOOL:
            raise ReadingError(f"range reading for Bool stream {name}")
        val = Interval(r.lo, r.hi)
    else:
        raise ReadingError(f"not a reading: {r!r}")
    if name in ranges and isinstance(val, Interval):
        lo, hi = ranges[name]
        lo, hi = max(val.lo, lo), min(val.hi, hi)
        if lo > hi:
            raise ReadingError(f"reading for {name} violates its range assumption")
        val = Interval(lo, hi)
    return val


def step_abs(state: AbsState, readings: Mapping[str, object] | None = None) -> tuple[list[Verdict], AbsState]:
    spec, t = state.spec, state.t
    readings = dict(readings or {})
    for name in readings:
        if name not in spec or spec.decl(name).kind != "input":
            raise ReadingError(f"reading for unknown input {name!r}")
    prev = dict(state.previous)
    cur: dict[str, AbsVal] = {}
    for s in spec.inputs:
        cur[s.name] = _abs_reading(spec, s.name, readings.get(s.name), state.ranges)

    def lookup(stream: str, u: int) -> AbsVal:
        return cur[stream] if u == t else prev[stream]

    for name in state.order:
        cur[name] = abs_eval(spec.decl(name).expr, t, lookup, spec.sort_of)
    verdicts = [Verdict(t, s.name, "abs", cur[s.name]) for s in spec.outputs if s.origin == "user"]
    return verdicts, replace(state, t=t + 1, previous=tuple(cur.items()))


def run_abs(spec: Specification, trace: Sequence[Mapping[str, object]]) -> list[Verdict]:
    state = init_abs(spec)
    out: list[Verdict] = []
    for readings in trace:
        vs, state = step_abs(state, readings)
        out += vs
    return out
