"""Symbolic expressions over instant variables.

An instant variable ``x^t`` stands for the value of stream ``x`` at instant
``t``; fresh variables ``v<n>`` are introduced by pruning.  Real-valued
terms are kept in a canonical affine form so that equal linear terms are
structurally equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

from . import spec_ast as ast
from .errors import FragmentError, ReadingError
from .spec_ast import Sort, Specification, Value, format_value

# ---------------------------------------------------------------------------
# Instant variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamAt:
    stream: str
    t: int
    index: int
    sort: Sort

    @property
    def key(self) -> tuple:
        return (0, self.t, self.index, self.stream)

    def __str__(self) -> str:
        return f"{self.stream}^{self.t}"


@dataclass(frozen=True)
class Fresh:
    id: int
    sort: Sort

    @property
    def key(self) -> tuple:
        return (1, self.id)

    def __str__(self) -> str:
        return f"v{self.id}"


InstantVar = Union[StreamAt, Fresh]


class FreshSupply:
    """Hands out fresh variables with strictly increasing ids."""

    def __init__(self, next_id: int = 0):
        self.next_id = next_id

    def __call__(self, sort: Sort) -> Fresh:
        v = Fresh(self.next_id, sort)
        self.next_id += 1
        return v


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------


class SymExpr:
    """Base class; nodes are immutable and cache their hash."""

    __slots__ = ("_hash",)

    def _fields(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return type(other) is type(self) and self._hash == other._hash and self._fields() == other._fields()

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {to_text(self)}>"

    def __str__(self) -> str:
        return to_text(self)


class SConst(SymExpr):
    __slots__ = ("value", "sort")

    def __init__(self, value: Value, sort: Sort | None = None):
        if sort is None:
            sort = Sort.BOOL if isinstance(value, bool) else Sort.REAL
        if sort is Sort.REAL:
            value = Fraction(value)
        self.value = value
        self.sort = sort
        self._hash = hash((SConst, value, sort))

    def _fields(self):
        return (self.value, self.sort)


class SVar(SymExpr):
    __slots__ = ("var",)

    def __init__(self, var: InstantVar):
        self.var = var
        self._hash = hash((SVar, var))

    @property
    def sort(self) -> Sort:
        return self.var.sort

    def _fields(self):
        return (self.var,)


class Lin(SymExpr):
    """Canonical affine term ``const + sum(coeff * atom)``.

    Atoms are Real variables (or Real ite nodes), ordered by :func:`atom_key`;
    coefficients are nonzero.  A term that is a bare constant or a single atom
    with coefficient one is never represented as ``Lin``.
    """

    __slots__ = ("const", "terms")
    sort = Sort.REAL

    def __init__(self, const: Fraction, terms: tuple[tuple[SymExpr, Fraction], ...]):
        self.const = const
        self.terms = terms
        self._hash = hash((Lin, const, terms))

    def _fields(self):
        return (self.const, self.terms)


class SFun(SymExpr):
    __slots__ = ("op", "args")

    def __init__(self, op: str, args: Sequence[SymExpr]):
        self.op = op
        self.args = tuple(args)
        self._hash = hash((SFun, op, self.args))

    @property
    def sort(self) -> Sort:
        return Sort.REAL if self.op in REAL_OPS else Sort.BOOL

    def _fields(self):
        return (self.op, self.args)


class SIte(SymExpr):
    __slots__ = ("cond", "then", "other")

    def __init__(self, cond: SymExpr, then: SymExpr, other: SymExpr):
        self.cond, self.then, self.other = cond, then, other
        self._hash = hash((SIte, cond, then, other))

    @property
    def sort(self) -> Sort:
        return self.then.sort

    def _fields(self):
        return (self.cond, self.then, self.other)


REAL_OPS = frozenset({"add", "mul", "neg"})
CMP_OPS = frozenset({"le", "lt", "eq"})

TRUE = SConst(True)
FALSE = SConst(False)


def var(v: InstantVar) -> SVar:
    return SVar(v)


def const(v: Value) -> SConst:
    return SConst(v)


def eq(a: SymExpr, b: SymExpr) -> SFun:
    return SFun("eq", (a, b))


def le(a: SymExpr, b: SymExpr) -> SFun:
    return SFun("le", (a, b))


def lt(a: SymExpr, b: SymExpr) -> SFun:
    return SFun("lt", (a, b))


def neg(a: SymExpr) -> SFun:
    return SFun("not", (a,)) if a.sort is Sort.BOOL else SFun("neg", (a,))


def conj(*args: SymExpr) -> SymExpr:
    return TRUE if not args else args[0] if len(args) == 1 else SFun("and", args)


def disj(*args: SymExpr) -> SymExpr:
    return FALSE if not args else args[0] if len(args) == 1 else SFun("or", args)


def children(e: SymExpr) -> tuple[SymExpr, ...]:
    if isinstance(e, SFun):
        return e.args
    if isinstance(e, SIte):
        return (e.cond, e.then, e.other)
    if isinstance(e, Lin):
        return tuple(a for a, _ in e.terms)
    return ()


def atom_key(e: SymExpr) -> tuple:
    if isinstance(e, SVar):
        return e.var.key
    return (2, to_text(e))


def var_key(v: InstantVar) -> tuple:
    return v.key


# ---------------------------------------------------------------------------
# Affine arithmetic
# ---------------------------------------------------------------------------


class Affine:
    """Mutable accumulator for affine terms keyed by atom."""

    __slots__ = ("const", "coeffs")

    def __init__(self, const: Fraction = Fraction(0), coeffs: dict | None = None):
        self.const = Fraction(const)
        self.coeffs: dict[SymExpr, Fraction] = dict(coeffs or {})

    def add(self, other: "Affine", scale: Fraction = Fraction(1)) -> "Affine":
        self.const += scale * other.const
        for a, c in other.coeffs.items():
            nc = self.coeffs.get(a, 0) + scale * c
            if nc:
                self.coeffs[a] = nc
            else:
                self.coeffs.pop(a, None)
        return self

    def scaled(self, k: Fraction) -> "Affine":
        if k == 0:
            return Affine()
        return Affine(self.const * k, {a: c * k for a, c in self.coeffs.items()})

    def is_const(self) -> bool:
        return not self.coeffs

    def to_expr(self) -> SymExpr:
        if not self.coeffs:
            return SConst(self.const)
        terms = tuple(sorted(self.coeffs.items(), key=lambda ac: atom_key(ac[0])))
        if len(terms) == 1 and self.const == 0 and terms[0][1] == 1:
            return terms[0][0]
        return Lin(self.const, terms)


def affine_of(e: SymExpr) -> Affine:
    """Affine view of an already simplified Real expression."""
    if isinstance(e, SConst):
        return Affine(e.value)
    if isinstance(e, Lin):
        return Affine(e.const, dict(e.terms))
    if isinstance(e, SFun) and e.op in REAL_OPS:
        raise FragmentError(f"not simplified: {to_text(e)}")
    return Affine(Fraction(0), {e: Fraction(1)})


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------


def simplify(e: SymExpr) -> SymExpr:
    """Semantics-preserving normalisation.

    Folds ground subterms, canonicalises affine terms, and applies the usual
    Boolean identities; no normal-form conversion is attempted.

    >>> from symstream.spec_ast import Sort
    >>> x = SVar(StreamAt("ld", 0, 0, Sort.REAL))
    >>> to_text(simplify(SFun("add", (x, SConst(9), SConst(7), SFun("neg", (x,))))))
    '16'
    """
    return _simplify_cached(e)


@lru_cache(maxsize=1 << 16)
def _simplify_cached(e: SymExpr) -> SymExpr:
    # monitors re-simplify every retained constraint at each step; nodes are immutable
    return _Simplifier().run(e)


class _Simplifier:
    def __init__(self):
        self.cache: dict[SymExpr, SymExpr] = {}

    def run(self, e: SymExpr) -> SymExpr:
        hit = self.cache.get(e)
        if hit is None:
            hit = self._simp(e)
            self.cache[e] = hit
        return hit

    def affine(self, e: SymExpr) -> Affine:
        if isinstance(e, SFun) and e.op in REAL_OPS:
            if e.op == "add":
                acc = Affine()
                for a in e.args:
                    acc.add(self.affine(a))
                return acc
            if e.op == "neg":
                return self.affine(e.args[0]).scaled(Fraction(-1))
            a, b = (self.affine(x) for x in e.args)
            if a.is_const():
                return b.scaled(a.const)
            if b.is_const():
                return a.scaled(b.const)
            raise FragmentError(f"nonlinear product {to_text(e)}")
        if isinstance(e, Lin):
            acc = Affine(e.const)
            for a, c in e.terms:
                acc.add(self.affine(a), c)
            return acc
        s = self.run(e)
        if isinstance(s, (SConst, Lin)):
            return affine_of(s)
        return Affine(Fraction(0), {s: Fraction(1)})

    def _simp(self, e: SymExpr) -> SymExpr:
        if isinstance(e, (SConst, SVar)):
            return e
        if isinstance(e, Lin) or (isinstance(e, SFun) and e.op in REAL_OPS):
            return self.affine(e).to_expr()
        if isinstance(e, SIte):
            c = self.run(e.cond)
            if isinstance(c, SConst):
                return self.run(e.then if c.value else e.other)
            a, b = self.run(e.then), self.run(e.other)
            if a == b:
                return a
            if a.sort is Sort.BOOL:
                if isinstance(a, SConst) and isinstance(b, SConst):
                    return c if a.value else self._not(c)
            return SIte(c, a, b)
        op = e.op
        if op in ("le", "lt"):
            return self._cmp(op, self.run(e.args[0]), self.run(e.args[1]))
        if op == "eq":
            a, b = self.run(e.args[0]), self.run(e.args[1])
            if a.sort is Sort.REAL:
                return self._cmp("eq", a, b)
            return self._beq(a, b)
        if op == "not":
            return self._not(self.run(e.args[0]))
        if op in ("and", "or"):
            return self._junction(op, [self.run(a) for a in e.args])
        if op == "xor":
            return self._xor([self.run(a) for a in e.args])
        if op == "implies":
            a, b = self.run(e.args[0]), self.run(e.args[1])
            if isinstance(a, SConst):
                return b if a.value else TRUE
            if isinstance(b, SConst):
                return TRUE if b.value else self._not(a)
            if a == b:
                return TRUE
            return SFun("implies", (a, b))
        raise FragmentError(f"unknown operator {op!r}")

    def _cmp(self, op: str, a: SymExpr, b: SymExpr) -> SymExpr:
        d = affine_of(a).add(affine_of(b), Fraction(-1))
        if d.is_const():
            v = d.const
            return SConst(v <= 0 if op == "le" else v < 0 if op == "lt" else v == 0)
        return SFun(op, (a, b))

    def _not(self, a: SymExpr) -> SymExpr:
        if isinstance(a, SConst):
            return SConst(not a.value)
        if isinstance(a, SFun) and a.op == "not":
            return a.args[0]
        return SFun("not", (a,))

    @staticmethod
    def _complementary(a: SymExpr, b: SymExpr) -> bool:
        return (isinstance(a, SFun) and a.op == "not" and a.args[0] == b) or (
            isinstance(b, SFun) and b.op == "not" and b.args[0] == a
        )

    def _beq(self, a: SymExpr, b: SymExpr) -> SymExpr:
        if isinstance(a, SConst) and isinstance(b, SConst):
            return SConst(a.value == b.value)
        if isinstance(b, SConst):
            return a if b.value else self._not(a)
        if isinstance(a, SConst):
            return b if a.value else self._not(b)
        if a == b:
            return TRUE
        if self._complementary(a, b):
            return FALSE
        return SFun("eq", (a, b))

    def _junction(self, op: str, args: list[SymExpr]) -> SymExpr:
        unit, zero = (True, False) if op == "and" else (False, True)
        flat: list[SymExpr] = []
        for a in args:
            if isinstance(a, SFun) and a.op == op:
                flat.extend(a.args)
            else:
                flat.append(a)
        out: list[SymExpr] = []
        seen: set[SymExpr] = set()
        for a in flat:
            if isinstance(a, SConst):
                if a.value == zero:
                    return SConst(zero)
                continue
            if a in seen:
                continue
            seen.add(a)
            out.append(a)
        for a in out:
            if isinstance(a, SFun) and a.op == "not" and a.args[0] in seen:
                return SConst(zero)
        if not out:
            return SConst(unit)
        if len(out) == 1:
            return out[0]
        return SFun(op, out)

    def _xor(self, args: list[SymExpr]) -> SymExpr:
        parity = False
        counts: dict[SymExpr, int] = {}
        stack = list(reversed(args))
        while stack:
            a = stack.pop()
            if isinstance(a, SConst):
                parity ^= a.value
            elif isinstance(a, SFun) and a.op == "xor":
                stack.extend(reversed(a.args))
            elif isinstance(a, SFun) and a.op == "not":
                parity = not parity
                stack.append(a.args[0])
            else:
                counts[a] = counts.get(a, 0) + 1
        items = [a for a, n in counts.items() if n % 2]
        if not items:
            return SConst(parity)
        base = items[0] if len(items) == 1 else SFun("xor", items)
        return self._not(base) if parity else base


# ---------------------------------------------------------------------------
# Traversal utilities
# ---------------------------------------------------------------------------


def free_vars(e: SymExpr | Iterable[SymExpr]) -> set[InstantVar]:
    out: set[InstantVar] = set()
    stack = [e] if isinstance(e, SymExpr) else list(e)
    seen: set[int] = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, SVar):
            out.add(n.var)
        else:
            stack.extend(children(n))
    return out


def _rebuild(e: SymExpr, f) -> SymExpr:
    if isinstance(e, SFun):
        return SFun(e.op, [f(a) for a in e.args])
    if isinstance(e, SIte):
        return SIte(f(e.cond), f(e.then), f(e.other))
    if isinstance(e, Lin):
        return SFun("add", [SConst(e.const)] + [SFun("mul", (SConst(c), f(a))) for a, c in e.terms])
    return e


def substitute(e: SymExpr, binding: Mapping[InstantVar, SymExpr]) -> SymExpr:
    """Simultaneous substitution followed by :func:`simplify`."""
    if not binding:
        return simplify(e)
    cache: dict[SymExpr, SymExpr] = {}

    def go(n: SymExpr) -> SymExpr:
        hit = cache.get(n)
        if hit is None:
            if isinstance(n, SVar):
                hit = binding.get(n.var, n)
            else:
                hit = _rebuild(n, go)
            cache[n] = hit
        return hit

    return simplify(go(e))


def eval_sym(e: SymExpr, env: Mapping[InstantVar, Value]) -> Value:
    """Concrete value of ``e`` under a total assignment of its variables."""
    if isinstance(e, SConst):
        return e.value
    if isinstance(e, SVar):
        return env[e.var]
    if isinstance(e, Lin):
        return e.const + sum((c * eval_sym(a, env) for a, c in e.terms), Fraction(0))
    if isinstance(e, SIte):
        return eval_sym(e.then if eval_sym(e.cond, env) else e.other, env)
    vals = [eval_sym(a, env) for a in e.args]
    return _apply(e.op, vals)


def _apply(op: str, vals: list):
    if op == "add":
        return sum(vals, Fraction(0))
    if op == "mul":
        return vals[0] * vals[1]
    if op == "neg":
        return -vals[0]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "not":
        return not vals[0]
    if op == "and":
        return all(vals)
    if op == "or":
        return any(vals)
    if op == "xor":
        return sum(bool(v) for v in vals) % 2 == 1
    if op == "implies":
        return (not vals[0]) or vals[1]
    if op == "eq":
        return vals[0] == vals[1]
    if op == "le":
        return vals[0] <= vals[1]
    if op == "lt":
        return vals[0] < vals[1]
    raise FragmentError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# Size measure and printing
# ---------------------------------------------------------------------------


def expr_measure(e: SymExpr) -> int:
    """Number of constant and variable occurrences.

    Coefficients of one (or minus one) and a zero affine constant are implicit
    and do not count.
    """
    if isinstance(e, (SConst, SVar)):
        return 1
    if isinstance(e, Lin):
        n = 1 if e.const != 0 else 0
        for a, c in e.terms:
            n += expr_measure(a) + (0 if c in (1, -1) else 1)
        return n
    return sum(expr_measure(a) for a in children(e))


def measure(constraints: Iterable[SymExpr]) -> int:
    """Size of a constraint set: the sum of its members' measures."""
    return sum(expr_measure(c) for c in constraints)


_PREC = {"implies": 1, "or": 2, "xor": 3, "and": 4, "not": 5, "le": 6, "lt": 6, "eq": 6,
         "add": 7, "mul": 8, "neg": 9}
_TEXT = {"implies": "->", "or": "or", "xor": "xor", "and": "and", "le": "<=", "lt": "<", "eq": "="}


def format_number(v: Fraction) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def format_sym_value(v: Value) -> str:
    return format_value(v) if isinstance(v, bool) else format_number(v)


def _prec(e: SymExpr) -> int:
    if isinstance(e, SFun):
        return _PREC[e.op]
    if isinstance(e, Lin):
        return 7
    if isinstance(e, SConst) and e.sort is Sort.REAL and e.value < 0:
        return 9
    return 10


def to_text(e: SymExpr) -> str:
    """Canonical text, e.g. ``24 + ld^0 + ld^3 + ld^4`` or ``ok^0 = (acc^0 <= 15)``."""
    if isinstance(e, SConst):
        return format_sym_value(e.value)
    if isinstance(e, SVar):
        return str(e.var)
    if isinstance(e, SIte):
        return f"ite({to_text(e.cond)}, {to_text(e.then)}, {to_text(e.other)})"
    if isinstance(e, Lin):
        parts: list[str] = []
        if e.const != 0:
            parts.append(format_number(e.const))
        for a, c in e.terms:
            at = to_text(a) if _prec(a) > 8 else f"({to_text(a)})"
            mag = abs(c)
            body = at if mag == 1 else f"{format_number(mag)}*{at}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(("+ " if c > 0 else "- ") + body)
        return " ".join(parts)
    p = _PREC[e.op]

    def wrap(a: SymExpr, strict: bool) -> str:
        q = _prec(a)
        s = to_text(a)
        return f"({s})" if q < p or (strict and q == p) else s

    if e.op == "not":
        return f"not {wrap(e.args[0], False)}"
    if e.op == "neg":
        return f"-{wrap(e.args[0], True)}"
    if e.op == "add":
        return " + ".join(wrap(a, False) for a in e.args)
    if e.op == "mul":
        return f"{wrap(e.args[0], False)}*{wrap(e.args[1], True)}"
    if e.op in CMP_OPS:
        return f"{wrap(e.args[0], True)} {_TEXT[e.op]} {wrap(e.args[1], True)}"
    if e.op == "implies":
        return f"{wrap(e.args[0], True)} -> {wrap(e.args[1], False)}"
    return f" {_TEXT[e.op]} ".join(wrap(a, True) for a in e.args)


# ---------------------------------------------------------------------------
# Readings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exact:
    value: Value

    def __post_init__(self):
        if not isinstance(self.value, bool):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Range:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ReadingError(f"invalid range [{format_number(lo)}, {format_number(hi)}]: lower bound exceeds upper")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class Unknown:
    pass


UNKNOWN = Unknown()
Reading = Union[Exact, Range, Unknown]


def stream_var(spec: Specification, stream: str, t: int) -> StreamAt:
    return StreamAt(stream, t, spec.index(stream), spec.sort_of(stream))


def encode_reading(spec: Specification, stream: str, t: int, reading: Reading) -> list[SymExpr]:
    """Constraints expressing what a reading says about ``stream`` at ``t``."""
    if stream not in spec:
        raise ReadingError(f"reading for unknown stream {stream!r}")
    v = SVar(stream_var(spec, stream, t))
    sort = spec.sort_of(stream)
    if isinstance(reading, Unknown):
        return []
    if isinstance(reading, Exact):
        if isinstance(reading.value, bool) != (sort is Sort.BOOL):
            raise ReadingError(f"reading {format_sym_value(reading.value)} does not fit {sort.value} stream {stream}")
        return [eq(v, SConst(reading.value, sort))]
    if isinstance(reading, Range):
        if sort is Sort.BOOL:
            raise ReadingError(f"range reading for Bool stream {stream}")
        return [le(SConst(reading.lo), v), le(v, SConst(reading.hi))]
    raise ReadingError(f"not a reading: {reading!r}")


# ---------------------------------------------------------------------------
# Instantiation
# ---------------------------------------------------------------------------

_AST_OPS = {"add": "add", "mul": "mul", "neg": "neg", "not": "not", "and": "and", "or": "or",
            "xor": "xor", "implies": "implies", "eq": "eq", "le": "le", "lt": "lt"}


def instantiate_expr(spec: Specification, e: ast.StreamExpr, t: int) -> SymExpr:
    """Raw symbolic form of ``e`` evaluated at instant ``t`` (not simplified)."""
    if isinstance(e, ast.Const):
        return SConst(e.value, e.sort)
    if isinstance(e, ast.Offset):
        u = t + e.offset
        if u >= 0:
            return SVar(stream_var(spec, e.stream, u))
        return SConst(e.default, spec.sort_of(e.stream))
    if isinstance(e, ast.Ite):
        return SIte(*(instantiate_expr(spec, x, t) for x in (e.cond, e.then, e.other)))
    args = [instantiate_expr(spec, a, t) for a in e.args]
    if e.op == "sub":
        return SFun("add", (args[0], SFun("neg", (args[1],))))
    return SFun(_AST_OPS[e.op], args)


def instantiate_step(spec: Specification, t: int) -> list[SymExpr]:
    """One equation ``y^t = [[E_y]](t)`` per output ``y``, right-hand sides simplified."""
    out = []
    for s in spec.outputs:
        rhs = simplify(instantiate_expr(spec, s.expr, t))
        out.append(eq(SVar(stream_var(spec, s.name, t)), rhs))
    return out


def assumption_depth(a: ast.StreamExpr) -> int:
    return max((-o.offset for o in ast.offsets_in(a)), default=0)


def instantiate_assumptions(spec: Specification, t: int) -> list[SymExpr]:
    """Assumptions at ``t``; one whose past references reach before the trace start is not yet in force."""
    out = []
    for a in spec.assumptions:
        if assumption_depth(a) > t:
            continue
        e = simplify(instantiate_expr(spec, a, t))
        if e != TRUE:
            out.append(e)
    return out


# ---------------------------------------------------------------------------
# Concrete semantics
# ---------------------------------------------------------------------------


def _eval_ast(e: ast.StreamExpr, t: int, lookup) -> Value:
    if isinstance(e, ast.Const):
        return e.value
    if isinstance(e, ast.Offset):
        u = t + e.offset
        return lookup(e.stream, u) if u >= 0 else e.default
    if isinstance(e, ast.Ite):
        return _eval_ast(e.then if _eval_ast(e.cond, t, lookup) else e.other, t, lookup)
    return _apply(e.op, [_eval_ast(a, t, lookup) for a in e.args])


def eval_concrete(
    spec: Specification, inputs: Mapping[str, Sequence[Value]], length: int | None = None
) -> dict[str, list[Value]]:
    """Reference evaluator: output streams for fully known input streams.

    >>> from symstream.spec_ast import parse_spec
    >>> spec = parse_spec("input ld: Real\\noutput acc := acc[-1|0] + ld[now]\\noutput ok := acc[now] <= 15")
    >>> out = eval_concrete(spec, {"ld": [3, 4, 5, 7]})
    >>> [int(v) for v in out["acc"]], out["ok"]
    ([3, 7, 12, 19], [True, True, True, False])
    """
    if length is None:
        lengths = {len(v) for v in inputs.values()}
        if len(lengths) > 1:
            raise ValueError("input streams differ in length")
        length = lengths.pop() if lengths else 0
    values: dict[str, list] = {s.name: [] for s in spec.outputs}
    for s in spec.inputs:
        vals = list(inputs[s.name])
        if len(vals) != length:
            raise ValueError(f"input {s.name} has {len(vals)} values, expected {length}")
        values[s.name] = [v if isinstance(v, bool) else Fraction(v) for v in vals]
    order = ast.check_well_formed(spec)

    def lookup(stream: str, u: int) -> Value:
        return values[stream][u]

    for t in range(length):
        for name in order:
            values[name].append(_eval_ast(spec.decl(name).expr, t, lookup))
    return {s.name: values[s.name] for s in spec.outputs}


def eval_assumptions(spec: Specification, values: Mapping[str, Sequence[Value]], t: int) -> bool:
    """Whether every assumption holds at ``t`` for complete stream values."""
    return all(_eval_ast(a, t, lambda s, u: values[s][u]) for a in spec.assumptions if assumption_depth(a) <= t)
