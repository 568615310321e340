"""Online symbolic monitor.

Each step instantiates the stream equations and assumptions at the current
instant, adds the readings, simplifies, emits one verdict per output stream
and prunes the knowledge to the variables later instants can still reference.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ReadingError
from .pruning import prune_boolean, prune_linear, prune_mixed
from .solver import (
    DEFAULT_BOOL_CAP,
    DEFAULT_CONFLICT_CAP,
    EMPTY,
    Outcome,
    _top_conjuncts,
    Entailment,
    LinearBounds,
    is_real_atom,
    lincon_of,
    linear_conjuncts,
    rref,
)
from .spec_ast import Fragment, Sort, Specification, classify_fragment, prepare
from .symbolic import (
    FALSE,
    TRUE,
    UNKNOWN,
    Affine,
    Exact,
    FreshSupply,
    InstantVar,
    Range,
    Reading,
    SConst,
    SFun,
    StreamAt,
    SVar,
    SymExpr,
    Unknown,
    encode_reading,
    eq,
    format_sym_value,
    free_vars,
    instantiate_assumptions,
    instantiate_step,
    measure,
    simplify,
    stream_var,
    substitute,
    to_text,
)


@dataclass(frozen=True)
class MonitorConfig:
    pruning: bool = True
    lookback: int = 0
    bool_cap: int = DEFAULT_BOOL_CAP
    conflict_cap: int = DEFAULT_CONFLICT_CAP
    profile: bool = True


@dataclass(frozen=True)
class Verdict:
    """What the monitor knows about one output at one instant.

    ``kind`` is ``val`` (value entailed), ``tri`` (Bool output; ``value`` is
    True, False or None for unknown), ``bounds``, ``residual`` (printed
    equation), ``revised`` (``value`` is the upgraded verdict) or ``abs``
    (interval monitor; an interval or a three-valued Bool).
    """

    t: int
    stream: str
    kind: str
    value: object

    @property
    def determined(self) -> bool:
        if self.kind == "revised":
            return self.value.determined
        if self.kind == "abs":
            return isinstance(self.value, bool) or (self.value is not None and self.value.is_point)
        return self.kind == "val" or (self.kind == "tri" and self.value is not None)

    @property
    def payload(self) -> str:
        if self.kind == "tri" or (self.kind == "abs" and not hasattr(self.value, "is_point")):
            return "?" if self.value is None else ("tt" if self.value else "ff")
        if self.kind == "val":
            return format_sym_value(self.value)
        if self.kind == "bounds":
            return str(self.value)
        if self.kind == "revised":
            return f"{self.value.kind} {self.value.payload}"
        return str(self.value)

    def record(self) -> str:
        return f"{self.t}\t{self.stream}\t{self.kind}\t{self.payload}"


@dataclass(frozen=True)
class MonitorState:
    spec: Specification
    config: MonitorConfig
    fragment: Fragment
    t: int = 0
    live: tuple[SymExpr, ...] = ()
    frontier: tuple[InstantVar, ...] = ()
    next_fresh: int = 0
    window: int = 0
    profile: tuple[int, ...] = ()
    last_knowledge: tuple[SymExpr, ...] = ()
    pending: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class RunResult:
    verdicts: tuple[Verdict, ...]
    revisions: tuple[Verdict, ...]
    profile: tuple[int, ...]
    state: MonitorState

    def records(self) -> list[str]:
        return [v.record() for v in self.verdicts + self.revisions]

    def table(self) -> dict[tuple[int, str], Verdict]:
        return {(v.t, v.stream): v for v in self.verdicts}


def init_state(spec: Specification, config: MonitorConfig | None = None) -> MonitorState:
    config = config or MonitorConfig()
    frag = classify_fragment(spec)
    prepared = prepare(spec)
    window = max(config.lookback, prepared.lookback - 1, 0)
    return MonitorState(prepared, config, frag, window=window)


def as_reading(x) -> Reading:
    """Accept readings or plain values (``None`` meaning unknown)."""
    if isinstance(x, (Exact, Range, Unknown)):
        return x
    if x is None:
        return UNKNOWN
    if isinstance(x, bool):
        return Exact(x)
    return Exact(Fraction(x))


def _reading_constraints(spec: Specification, t: int, readings: Mapping[str, object]) -> list[SymExpr]:
    out = []
    for name, r in readings.items():
        if name not in spec:
            raise ReadingError(f"reading for unknown stream {name!r}")
        decl = spec.decl(name)
        if decl.kind != "input" or decl.origin != "user":
            raise ReadingError(f"stream {name!r} is not an input")
        out += encode_reading(spec, name, t, as_reading(r))
    return out


# ---------------------------------------------------------------------------
# Knowledge maintenance
# ---------------------------------------------------------------------------


def _binding(c: SymExpr):
    """``(var, value)`` if the constraint fixes one variable to a constant."""
    if isinstance(c, SVar) and c.sort is Sort.BOOL:
        return c.var, True
    if isinstance(c, SFun) and c.op == "not" and isinstance(c.args[0], SVar):
        return c.args[0].var, False
    if is_real_atom(c) and c.op == "eq":
        lc = lincon_of(c)
        if len(lc.coeffs) == 1:
            v, a = lc.coeffs[0]
            return v, -lc.const / a
    return None


def _implied_constants(constraints: Sequence[SymExpr]) -> dict[InstantVar, Fraction]:
    """Variables whose value the linear equations alone fix."""
    eqs = [lc for lc in linear_conjuncts(constraints) if lc.rel == "eq"]
    if len(eqs) < 2:
        return {}
    cols = sorted({v for lc in eqs for v, _ in lc.coeffs}, key=lambda v: v.key)
    index = {v: j for j, v in enumerate(cols)}
    n = len(cols)
    rows = []
    for lc in eqs:
        row = [Fraction(0)] * (n + 1)
        for v, c in lc.coeffs:
            row[index[v]] = c
        row[n] = lc.const
        rows.append(row)
    red, piv = rref(rows, n + 1)
    out = {}
    for row, p in zip(red, piv):
        if p < n and sum(1 for x in row[:n] if x != 0) == 1:
            out[cols[p]] = -row[n]
    return out


def _binding_constraint(v: InstantVar, value) -> SymExpr:
    if v.sort is Sort.BOOL:
        return SVar(v) if value else SFun("not", (SVar(v),))
    return simplify(eq(SVar(v), SConst(value)))


def normalize_knowledge(constraints: Iterable[SymExpr]) -> tuple[list[SymExpr], dict[InstantVar, object]]:
    """Simplify, split conjunctions and propagate ground bindings to a fixpoint.

    The binding equations themselves are kept.  An inconsistent set collapses to ``[ff]``.
    """
    cs = [simplify(c) for c in constraints]
    bindings: dict[InstantVar, object] = {}
    while True:
        flat = []
        for c in _top_conjuncts(cs):
            if c == TRUE:
                continue
            if c == FALSE:
                return [FALSE], {}
            flat.append(c)
        new: dict[InstantVar, object] = {}
        rest = []
        seen: set[SymExpr] = set()
        for c in flat:
            if c in seen:
                continue
            seen.add(c)
            b = _binding(c)
            if b is not None and b[0] not in new:
                new[b[0]] = b[1]
            else:
                rest.append(c)
        if not new:
            new = {v: val for v, val in _implied_constants(rest).items() if v not in bindings}
        if not new:
            break
        bindings.update(new)
        sub = {v: SConst(val, v.sort) for v, val in new.items()}
        cs = [substitute(c, sub) for c in rest]
    out = rest + [_binding_constraint(v, val) for v, val in bindings.items()]
    return out, bindings


def _frontier(state: MonitorState, knowledge: Sequence[SymExpr]) -> list[InstantVar]:
    lo = state.t - state.window
    keep = [v for v in free_vars(knowledge) if isinstance(v, StreamAt) and lo <= v.t <= state.t]
    return sorted(keep, key=lambda v: v.key)


def _prune(knowledge: list[SymExpr], relevant: list[InstantVar], supply: FreshSupply, config: MonitorConfig):
    vars_ = free_vars(knowledge) | set(relevant)
    if all(v.sort is Sort.BOOL for v in vars_):
        return prune_boolean(knowledge, relevant, supply)
    if all(v.sort is Sort.REAL for v in relevant) and all(
        is_real_atom(c) and c.op == "eq" for c in knowledge
    ):
        return prune_linear(knowledge, relevant, supply)
    return prune_mixed(knowledge, relevant, supply)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


class _LinearView:
    """The linear part of a knowledge set, solved once for all Real verdicts of a step."""

    def __init__(self, knowledge: Sequence[SymExpr], spec: Specification):
        self.constraints = linear_conjuncts(knowledge)
        self.has_inequalities = any(lc.rel != "eq" for lc in self.constraints)
        self.spec = spec
        self._solved: dict[InstantVar, Affine] | None = None
        self._bounds: LinearBounds | None = None

    def bounds(self, y: InstantVar):
        if self._bounds is None:
            self._bounds = LinearBounds(self.constraints)
        return self._bounds(y)

    def _rank(self, v: InstantVar):
        # outputs (latest first) become pivots; inputs and fresh variables stay free
        if isinstance(v, StreamAt):
            if self.spec.decl(v.stream).kind == "output":
                return (0, -v.t, v.index)
            return (1, v.key)
        return (2, v.key)

    def solved(self) -> dict[InstantVar, Affine]:
        if self._solved is None:
            eqs = [lc for lc in self.constraints if lc.rel == "eq"]
            cols = sorted({v for lc in eqs for v, _ in lc.coeffs}, key=self._rank)
            index = {v: j for j, v in enumerate(cols)}
            n = len(cols)
            rows = []
            for lc in eqs:
                row = [Fraction(0)] * (n + 1)
                for v, c in lc.coeffs:
                    row[index[v]] = c
                row[n] = lc.const
                rows.append(row)
            red, piv = rref(rows, n + 1) if rows else ([], [])
            self._solved = {}
            for row, p in zip(red, piv):
                if p < n:
                    self._solved[cols[p]] = Affine(
                        -row[n], {SVar(cols[j]): -row[j] for j in range(p + 1, n) if row[j] != 0}
                    )
        return self._solved

    def residual(self, y: InstantVar) -> str:
        """``y`` expressed through the equations, or ``y = y`` if they leave it free."""
        expr = self.solved().get(y)
        return f"{y} = {to_text(expr.to_expr()) if expr is not None else y}"


class _Queries:
    """Verdict queries against one knowledge set, sharing a single solver encoding."""

    def __init__(self, knowledge: Sequence[SymExpr], bindings: Mapping, spec: Specification, config: MonitorConfig):
        self.knowledge = list(knowledge)
        self.bindings = bindings
        self.spec = spec
        self.config = config
        self._oracle: Entailment | None = None
        self._linear: _LinearView | None = None

    @property
    def linear(self) -> _LinearView:
        if self._linear is None:
            self._linear = _LinearView(self.knowledge, self.spec)
        return self._linear

    @property
    def oracle(self) -> Entailment:
        if self._oracle is None:
            self._oracle = Entailment(self.knowledge, self.config.conflict_cap)
        return self._oracle

    def verdict(self, t: int, stream: str) -> Verdict:
        return query_verdict(self.knowledge, self.bindings, self.spec, t, stream, self.config, self)


def query_verdict(knowledge: Sequence[SymExpr], bindings: Mapping, spec: Specification, t: int, stream: str,
                  config: MonitorConfig, queries: _Queries | None = None) -> Verdict:
    y = stream_var(spec, stream, t)
    if y.sort is Sort.BOOL:
        if y in bindings:
            return Verdict(t, stream, "tri", bindings[y])
        oracle = queries.oracle if queries is not None else Entailment(knowledge, config.conflict_cap)
        out = oracle.check(SVar(y))
        value = True if out is Outcome.VALID else False if out is Outcome.UNSAT else None
        return Verdict(t, stream, "tri", value)
    if y in bindings:
        return Verdict(t, stream, "val", bindings[y])
    if list(knowledge) == [FALSE]:
        return Verdict(t, stream, "bounds", EMPTY)
    linear = queries.linear if queries is not None else _LinearView(knowledge, spec)
    if not linear.has_inequalities:
        # equations alone either fix y or leave it unbounded in both directions
        expr = linear.solved().get(y)
        if expr is not None and expr.is_const():
            return Verdict(t, stream, "val", expr.const)
        return Verdict(t, stream, "residual", linear.residual(y))
    b = linear.bounds(y)
    if b.point is not None:
        return Verdict(t, stream, "val", Fraction(b.point))
    if b.finite:
        return Verdict(t, stream, "bounds", b)
    return Verdict(t, stream, "residual", linear.residual(y))


def _user_outputs(spec: Specification) -> list[str]:
    return [s.name for s in spec.outputs if s.origin == "user"]


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def step(state: MonitorState, readings: Mapping[str, object] | None = None) -> tuple[list[Verdict], MonitorState]:
    """Process one instant; returns its verdicts and the successor state."""
    spec, config, t = state.spec, state.config, state.t
    readings = dict(readings or {})
    new = list(state.live)
    new += instantiate_step(spec, t)
    new += instantiate_assumptions(spec, t)
    new += _reading_constraints(spec, t, readings)
    knowledge, bindings = normalize_knowledge(new)

    queries = _Queries(knowledge, bindings, spec, config)
    verdicts = [queries.verdict(t, name) for name in _user_outputs(spec)]
    pending = state.pending + tuple((v.t, v.stream) for v in verdicts if not v.determined)

    supply = FreshSupply(state.next_fresh)
    frontier = _frontier(state, knowledge)
    if config.pruning and knowledge != [FALSE]:
        live = tuple(_prune(knowledge, frontier, supply, config).constraints)
    else:
        live = tuple(knowledge)
    profile = state.profile + ((measure(live),) if config.profile else ())
    return verdicts, replace(
        state,
        t=t + 1,
        live=live,
        frontier=tuple(frontier),
        next_fresh=supply.next_id,
        profile=profile,
        last_knowledge=tuple(knowledge),
        pending=pending,
    )


def finalize(state: MonitorState) -> list[Verdict]:
    """Re-query verdicts left open, against the last knowledge before pruning."""
    knowledge, bindings = normalize_knowledge(state.last_knowledge)
    present = free_vars(knowledge)
    queries = _Queries(knowledge, bindings, state.spec, state.config)
    out = []
    for t, stream in state.pending:
        y = stream_var(state.spec, stream, t)
        if y not in present and y not in bindings:
            continue
        v = queries.verdict(t, stream)
        if v.determined:
            out.append(Verdict(t, stream, "revised", v))
    return out


def run(spec: Specification, trace: Sequence[Mapping[str, object]], config: MonitorConfig | None = None) -> RunResult:
    """Monitor a finite trace (one readings map per instant) and finalize."""
    state = init_state(spec, config)
    verdicts: list[Verdict] = []
    for readings in trace:
        vs, state = step(state, readings)
        verdicts += vs
    revisions = finalize(state) if trace else []
    return RunResult(tuple(verdicts), tuple(revisions), state.profile, state)


def memory_profile(result: RunResult) -> list[int]:
    """Measure of the live constraint set after each step."""
    return list(result.profile)
