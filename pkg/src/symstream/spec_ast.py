"""Specification language: AST, parser, printer, and static transformations.

A specification declares typed input streams, output streams defined by
expressions over past and present stream values, and assumptions that are
asserted at every instant::

    input ld : Real
    output acc := acc[-1|0] + ld[now] - ld[-3|0]
    output ok := acc[now] <= 15
    assumption 0 <= ld[now] and ld[now] <= 10
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator, Union

from .errors import (
    CycleError,
    DuplicateStreamError,
    FragmentError,
    ParseError,
    SortError,
    SpecError,
    UnknownIdentifierError,
    UnsupportedFutureError,
)


class Sort(str, Enum):
    BOOL = "Bool"
    REAL = "Real"


Value = Union[bool, Fraction]


def sort_of_value(v: Value) -> Sort:
    return Sort.BOOL if isinstance(v, bool) else Sort.REAL


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

BOOL_OPS = frozenset({"not", "and", "or", "xor", "implies"})
ARITH_OPS = frozenset({"add", "sub", "neg", "mul"})
CMP_OPS = frozenset({"lt", "le", "eq"})


@dataclass(frozen=True)
class Const:
    value: Value
    sort: Sort

    @staticmethod
    def of(v: Value) -> "Const":
        if isinstance(v, bool):
            return Const(v, Sort.BOOL)
        return Const(Fraction(v), Sort.REAL)


@dataclass(frozen=True)
class Offset:
    """Reference to ``stream`` at ``offset`` instants from now.

    ``default`` is used when the referenced instant falls before the trace
    start; it is ``None`` exactly when ``offset == 0``.
    """

    stream: str
    offset: int
    default: Value | None = None


@dataclass(frozen=True)
class Fun:
    op: str
    args: tuple["StreamExpr", ...]


@dataclass(frozen=True)
class Ite:
    cond: "StreamExpr"
    then: "StreamExpr"
    other: "StreamExpr"


StreamExpr = Union[Const, Offset, Fun, Ite]

TT = Const(True, Sort.BOOL)
FF = Const(False, Sort.BOOL)


def now(stream: str) -> Offset:
    return Offset(stream, 0)


def children(e: StreamExpr) -> tuple[StreamExpr, ...]:
    if isinstance(e, Fun):
        return e.args
    if isinstance(e, Ite):
        return (e.cond, e.then, e.other)
    return ()


def walk(e: StreamExpr) -> Iterator[StreamExpr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def offsets_in(e: StreamExpr) -> Iterator[Offset]:
    return (n for n in walk(e) if isinstance(n, Offset))


def map_expr(e: StreamExpr, fn: Callable[[StreamExpr], StreamExpr | None]) -> StreamExpr:
    """Bottom-up rewrite; ``fn`` returns a replacement or ``None`` to keep the node."""
    if isinstance(e, Fun):
        e = Fun(e.op, tuple(map_expr(a, fn) for a in e.args))
    elif isinstance(e, Ite):
        e = Ite(map_expr(e.cond, fn), map_expr(e.then, fn), map_expr(e.other, fn))
    out = fn(e)
    return e if out is None else out


# ---------------------------------------------------------------------------
# Specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamDecl:
    name: str
    sort: Sort
    kind: str  # "input" or "output"
    expr: StreamExpr | None = None
    origin: str = field(default="user", compare=False)  # "user", "delay" or "helper"
    line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("input", "output"):
            raise ValueError(f"bad stream kind {self.kind!r}")
        if (self.kind == "input") != (self.expr is None):
            raise ValueError("inputs carry no expression and outputs exactly one")


@dataclass(frozen=True)
class Specification:
    streams: tuple[StreamDecl, ...]
    assumptions: tuple[StreamExpr, ...] = ()

    def __post_init__(self):
        seen = set()
        for s in self.streams:
            if s.name in seen:
                raise DuplicateStreamError(f"duplicate stream name {s.name!r}", s.line)
            seen.add(s.name)

    @cached_property
    def _by_name(self) -> dict[str, tuple[int, StreamDecl]]:
        return {s.name: (i, s) for i, s in enumerate(self.streams)}

    @property
    def inputs(self) -> tuple[StreamDecl, ...]:
        return tuple(s for s in self.streams if s.kind == "input")

    @property
    def outputs(self) -> tuple[StreamDecl, ...]:
        return tuple(s for s in self.streams if s.kind == "output")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.streams)

    def decl(self, name: str) -> StreamDecl:
        return self._by_name[name][1]

    def index(self, name: str) -> int:
        return self._by_name[name][0]

    def sort_of(self, name: str) -> Sort:
        return self._by_name[name][1].sort

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def lookback(self) -> int:
        """Deepest past offset referenced by any assumption."""
        depth = 0
        for a in self.assumptions:
            for o in offsets_in(a):
                depth = max(depth, -o.offset)
        return depth


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------


def expr_sort(e: StreamExpr, sorts: Callable[[str], Sort]) -> Sort:
    """Sort of an expression, assuming it is well-sorted."""
    if isinstance(e, Const):
        return e.sort
    if isinstance(e, Offset):
        return sorts(e.stream)
    if isinstance(e, Ite):
        return expr_sort(e.then, sorts)
    if e.op in ARITH_OPS:
        return Sort.REAL
    return Sort.BOOL


def _check_sorts(e: StreamExpr, sorts: dict[str, Sort], pos: dict[int, tuple[int, int]]) -> Sort:
    def fail(node, msg):
        line, col = pos.get(id(node), (None, None))
        raise SortError(msg, line, col)

    if isinstance(e, Const):
        return e.sort
    if isinstance(e, Offset):
        s = sorts[e.stream]
        if e.default is not None and sort_of_value(e.default) is not s:
            fail(e, f"default of {e.stream} must be {s.value}")
        return s
    if isinstance(e, Ite):
        if _check_sorts(e.cond, sorts, pos) is not Sort.BOOL:
            fail(e, "ite condition must be Bool")
        a = _check_sorts(e.then, sorts, pos)
        b = _check_sorts(e.other, sorts, pos)
        if a is not b:
            fail(e, "ite branches have different sorts")
        return a
    arg_sorts = [_check_sorts(a, sorts, pos) for a in e.args]
    if e.op in BOOL_OPS:
        if any(s is not Sort.BOOL for s in arg_sorts):
            fail(e, f"'{e.op}' expects Bool operands")
        return Sort.BOOL
    if e.op in ARITH_OPS:
        if any(s is not Sort.REAL for s in arg_sorts):
            fail(e, f"arithmetic '{_OP_TEXT[e.op]}' expects Real operands")
        return Sort.REAL
    if e.op == "eq":
        if arg_sorts[0] is not arg_sorts[1]:
            fail(e, "'=' compares operands of different sorts")
        return Sort.BOOL
    if any(s is not Sort.REAL for s in arg_sorts):
        fail(e, f"'{_OP_TEXT[e.op]}' expects Real operands")
    return Sort.BOOL


def _guess_sort(e: StreamExpr, known: dict[str, Sort]) -> Sort | None:
    if isinstance(e, Const):
        return e.sort
    if isinstance(e, Offset):
        if e.stream in known:
            return known[e.stream]
        if e.default is not None:
            return sort_of_value(e.default)
        return None
    if isinstance(e, Ite):
        return _guess_sort(e.then, known) or _guess_sort(e.other, known)
    return Sort.REAL if e.op in ARITH_OPS else Sort.BOOL


# ---------------------------------------------------------------------------
# Lexer and parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<num>\d+/\d+|\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|&&|\|\||<=|>=|[:^<>=+\-*()\[\]|,!])
    """,
    re.VERBOSE,
)

_KEYWORD_OPS = {"not": "not", "and": "and", "or": "or", "xor": "xor", "implies": "implies"}


@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    line: int
    col: int


def _lex_line(text: str, line: int) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, i + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, i + 1))
        i = m.end()
    toks.append(_Tok("end", "", line, len(text) + 1))
    return toks


def _parse_number(text: str) -> Fraction:
    return Fraction(text)


class _LineParser:
    """Recursive-descent parser over the tokens of one declaration line."""

    def __init__(self, toks: list[_Tok], pos: dict[int, tuple[int, int]], keep: list):
        self.toks = toks
        self.i = 0
        self.pos = pos
        self.keep = keep

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "name") and t.text in texts

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            found = self.tok.text or "end of line"
            self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def name(self) -> _Tok:
        if self.tok.kind != "name":
            self.error(f"expected a name, found {self.tok.text or 'end of line'!r}")
        return self.advance()

    def finish(self):
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")

    def mark(self, node, tok: _Tok):
        self.pos[id(node)] = (tok.line, tok.col)
        self.keep.append(node)
        return node

    # expr := implies
    def expr(self) -> StreamExpr:
        return self.implies()

    def implies(self):
        left = self.or_()
        if self.at("->", "implies"):
            t = self.advance()
            right = self.implies()
            return self.mark(Fun("implies", (left, right)), t)
        return left

    def _left_assoc(self, sub, ops: dict[str, str]):
        left = sub()
        while self.at(*ops):
            t = self.advance()
            right = sub()
            left = self.mark(Fun(ops[t.text], (left, right)), t)
        return left

    def or_(self):
        return self._left_assoc(self.xor, {"or": "or", "||": "or"})

    def xor(self):
        return self._left_assoc(self.and_, {"xor": "xor", "^": "xor"})

    def and_(self):
        return self._left_assoc(self.not_, {"and": "and", "&&": "and"})

    def not_(self):
        if self.at("not", "!"):
            t = self.advance()
            return self.mark(Fun("not", (self.not_(),)), t)
        return self.cmp()

    def cmp(self):
        left = self.additive()
        if self.at("<", "<=", "=", ">", ">="):
            t = self.advance()
            right = self.additive()
            op = {"<": "lt", "<=": "le", "=": "eq", ">": "lt", ">=": "le"}[t.text]
            args = (right, left) if t.text in (">", ">=") else (left, right)
            node = self.mark(Fun(op, args), t)
            if self.at("<", "<=", "=", ">", ">="):
                self.error("comparisons do not chain; use 'and'")
            return node
        return left

    def additive(self):
        return self._left_assoc(self.mult, {"+": "add", "-": "sub"})

    def mult(self):
        return self._left_assoc(self.unary, {"*": "mul"})

    def unary(self):
        if self.at("-"):
            t = self.advance()
            operand = self.unary()
            if isinstance(operand, Const) and operand.sort is Sort.REAL and self.toks[self.i - 1].kind == "num":
                return self.mark(Const(-operand.value, Sort.REAL), t)
            return self.mark(Fun("neg", (operand,)), t)
        return self.atom()

    def literal(self) -> Value:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind == "num":
            self.advance()
            v = _parse_number(t.text)
            return -v if neg else v
        if not neg and t.kind == "name" and t.text in ("tt", "ff"):
            self.advance()
            return t.text == "tt"
        self.error(f"expected a literal, found {t.text or 'end of line'!r}")

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return self.mark(Const(_parse_number(t.text), Sort.REAL), t)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            if t.text in ("tt", "ff"):
                self.advance()
                return self.mark(Const(t.text == "tt", Sort.BOOL), t)
            if t.text == "ite":
                self.advance()
                self.expect("(")
                c = self.expr()
                self.expect(",")
                a = self.expr()
                self.expect(",")
                b = self.expr()
                self.expect(")")
                return self.mark(Ite(c, a, b), t)
            if t.text in _KEYWORDS:
                self.error(f"unexpected keyword {t.text!r}")
            self.advance()
            if not self.at("["):
                return self.mark(Offset(t.text, 0), t)
            self.advance()
            if self.at("now"):
                self.advance()
                self.expect("]")
                return self.mark(Offset(t.text, 0), t)
            sign = 1
            if self.at("-", "+"):
                sign = -1 if self.advance().text == "-" else 1
            if self.tok.kind != "num" or not self.tok.text.isdigit():
                self.error("expected an integer offset or 'now'")
            o = sign * int(self.advance().text)
            if o == 0:
                self.error("offset 0 takes no default; write [now]")
            self.expect("|")
            d = self.literal()
            self.expect("]")
            return self.mark(Offset(t.text, o, d), t)
        self.error(f"unexpected {t.text or 'end of line'!r}")


_KEYWORDS = frozenset(
    {"input", "output", "assumption", "now", "tt", "ff", "not", "and", "or", "xor", "implies", "ite"}
)


def parse_spec(text: str) -> Specification:
    """Parse, resolve, sort-check and validate a specification.

    >>> spec = parse_spec("input ld: Real\\noutput acc := acc[-1|0] + ld[now]\\noutput ok := acc[now] <= 15")
    >>> [s.name for s in spec.inputs], [s.name for s in spec.outputs]
    (['ld'], ['acc', 'ok'])
    """
    pos: dict[int, tuple[int, int]] = {}
    keep: list = []
    decls: list[tuple[str, Sort | None, str, StreamExpr | None, int]] = []
    assumptions: list[tuple[StreamExpr, int]] = []
    names: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        toks = _lex_line(body, lineno)
        p = _LineParser(toks, pos, keep)
        head = p.tok
        if p.at("input"):
            p.advance()
            nt = p.name()
            p.expect(":")
            st = p.name()
            if st.text not in ("Bool", "Real"):
                p.error(f"unknown sort {st.text!r}", st)
            p.finish()
            entry = (nt.text, Sort(st.text), "input", None, lineno)
        elif p.at("output"):
            p.advance()
            nt = p.name()
            sort = None
            if p.at(":"):
                p.advance()
                st = p.name()
                if st.text not in ("Bool", "Real"):
                    p.error(f"unknown sort {st.text!r}", st)
                sort = Sort(st.text)
            p.expect(":=")
            e = p.expr()
            p.finish()
            entry = (nt.text, sort, "output", e, lineno)
        elif p.at("assumption"):
            p.advance()
            e = p.expr()
            p.finish()
            assumptions.append((e, lineno))
            continue
        else:
            p.error(f"expected 'input', 'output' or 'assumption', found {head.text!r}")
        if nt.text in _KEYWORDS:
            raise ParseError(f"{nt.text!r} is a keyword", nt.line, nt.col)
        if nt.text in names:
            raise DuplicateStreamError(
                f"duplicate stream name {nt.text!r} (first declared on line {names[nt.text]})", nt.line, nt.col
            )
        names[nt.text] = lineno
        decls.append(entry)

    all_exprs = [d[3] for d in decls if d[3] is not None] + [a for a, _ in assumptions]
    for e in all_exprs:
        for o in offsets_in(e):
            if o.stream not in names:
                line, col = pos.get(id(o), (None, None))
                raise UnknownIdentifierError(f"unknown stream {o.stream!r}", line, col)

    # cycles first: a same-instant self reference would otherwise surface as an inference failure
    out_names = [d[0] for d in decls if d[2] == "output"]
    outs = set(out_names)
    raw_deps = {
        n: list(dict.fromkeys(o.stream for o in offsets_in(e) if o.offset == 0 and o.stream in outs))
        for n, _, kind, e, _ in decls
        if kind == "output"
    }
    line_of = {d[0]: d[4] for d in decls}
    _order_outputs(out_names, raw_deps, line_of.get)

    sorts: dict[str, Sort] = {n: s for n, s, _, _, _ in decls if s is not None}
    changed = True
    while changed:
        changed = False
        for n, s, kind, e, _ in decls:
            if n not in sorts:
                g = _guess_sort(e, sorts)
                if g is not None:
                    sorts[n] = g
                    changed = True
    for n, s, kind, e, line in decls:
        if n not in sorts:
            raise SortError(f"cannot infer the sort of {n!r}; annotate it as 'output {n} : Real := ...'", line)

    for n, s, kind, e, line in decls:
        if e is not None:
            got = _check_sorts(e, sorts, pos)
            if got is not sorts[n]:
                raise SortError(f"{n} is {sorts[n].value} but its definition is {got.value}", line)
    for e, line in assumptions:
        if _check_sorts(e, sorts, pos) is not Sort.BOOL:
            raise SortError("assumptions must be Bool", line)

    spec = Specification(
        tuple(StreamDecl(n, sorts[n], kind, e, line=line) for n, _, kind, e, line in decls),
        tuple(a for a, _ in assumptions),
    )
    check_well_formed(spec)
    return spec


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_OP_TEXT = {
    "implies": "->",
    "or": "or",
    "xor": "xor",
    "and": "and",
    "lt": "<",
    "le": "<=",
    "eq": "=",
    "add": "+",
    "sub": "-",
    "mul": "*",
}
_PREC = {"implies": 1, "or": 2, "xor": 3, "and": 4, "not": 5, "lt": 6, "le": 6, "eq": 6,
         "add": 7, "sub": 7, "mul": 8, "neg": 9}


def format_rational(v: Fraction) -> str:
    """Decimal text when exact, otherwise ``p/q``."""
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    digits = max(twos, fives)
    scaled = abs(v.numerator) * 10**digits // v.denominator
    s = str(scaled).rjust(digits + 1, "0")
    s = s[:-digits] + "." + s[-digits:]
    return ("-" if v < 0 else "") + s


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "tt" if v else "ff"
    return format_rational(v)


def _prec(e: StreamExpr) -> int:
    if isinstance(e, Fun):
        return _PREC[e.op]
    if isinstance(e, Const) and e.sort is Sort.REAL and e.value < 0:
        return 9
    return 10


def expr_to_text(e: StreamExpr) -> str:
    if isinstance(e, Const):
        return format_value(e.value)
    if isinstance(e, Offset):
        if e.offset == 0:
            return f"{e.stream}[now]"
        return f"{e.stream}[{e.offset}|{format_value(e.default)}]"
    if isinstance(e, Ite):
        return f"ite({expr_to_text(e.cond)}, {expr_to_text(e.then)}, {expr_to_text(e.other)})"
    p = _PREC[e.op]

    def wrap(a: StreamExpr, need_strict: bool) -> str:
        q = _prec(a)
        text = expr_to_text(a)
        if q < p or (need_strict and q == p):
            return f"({text})"
        return text

    if e.op == "not":
        return f"not {wrap(e.args[0], False)}"
    if e.op == "neg":
        return f"-{wrap(e.args[0], False)}"
    a, b = e.args
    if e.op == "implies":
        return f"{wrap(a, True)} -> {wrap(b, False)}"
    if e.op in ("lt", "le", "eq"):
        return f"{wrap(a, True)} {_OP_TEXT[e.op]} {wrap(b, True)}"
    return f"{wrap(a, False)} {_OP_TEXT[e.op]} {wrap(b, True)}"


def spec_to_text(spec: Specification) -> str:
    lines = []
    for s in spec.streams:
        if s.kind == "input":
            lines.append(f"input {s.name} : {s.sort.value}")
        else:
            lines.append(f"output {s.name} : {s.sort.value} := {expr_to_text(s.expr)}")
    for a in spec.assumptions:
        lines.append(f"assumption {expr_to_text(a)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Well-formedness
# ---------------------------------------------------------------------------


def _zero_deps(spec: Specification, decl: StreamDecl) -> list[str]:
    deps = []
    for o in offsets_in(decl.expr):
        if o.offset == 0 and spec.decl(o.stream).kind == "output" and o.stream not in deps:
            deps.append(o.stream)
    return deps


def _order_outputs(outputs: list[str], deps: dict[str, list[str]], line_of: Callable[[str], int | None]) -> list[str]:
    color = {n: 0 for n in outputs}
    rank = {n: i for i, n in enumerate(outputs)}
    stack: list[str] = []

    def visit(n: str):
        color[n] = 1
        stack.append(n)
        for d in deps[n]:
            if color[d] == 1:
                cycle = stack[stack.index(d):]
                k = cycle.index(min(cycle, key=rank.__getitem__))
                cycle = cycle[k:] + cycle[:k]
                raise CycleError(cycle, line_of(cycle[0]))
            if color[d] == 0:
                visit(d)
        stack.pop()
        color[n] = 2

    for n in outputs:
        if color[n] == 0:
            visit(n)

    order: list[str] = []
    placed: set[str] = set()
    while len(order) < len(outputs):
        for n in outputs:
            if n not in placed and all(d in placed for d in deps[n]):
                order.append(n)
                placed.add(n)
                break
    return order


def check_well_formed(spec: Specification) -> list[str]:
    """Evaluation order of the outputs in which every same-instant dependency comes first.

    Raises :class:`CycleError` naming the streams of a same-instant cycle.
    """
    outputs = [s.name for s in spec.outputs]
    deps = {s.name: _zero_deps(spec, s) for s in spec.outputs}
    return _order_outputs(outputs, deps, lambda n: spec.decl(n).line)


# ---------------------------------------------------------------------------
# Flattening
# ---------------------------------------------------------------------------


def _reject_future(spec: Specification):
    for s in spec.outputs:
        for o in offsets_in(s.expr):
            if o.offset > 0:
                raise UnsupportedFutureError(
                    f"{s.name} references {o.stream}[{o.offset}|...]: future offsets are not supported", s.line
                )
    for a in spec.assumptions:
        for o in offsets_in(a):
            if o.offset > 0:
                raise UnsupportedFutureError(f"an assumption references future value {o.stream}[{o.offset}|...]")


def flatten(spec: Specification) -> Specification:
    """Rewrite output definitions so every offset is -1 or 0.

    An offset of -k introduces delay streams ``<s>_d1 .. <s>_d(k-1)``.
    Assumptions keep their offsets; their depth is the specification's lookback.
    """
    _reject_future(spec)
    if all(o.offset >= -1 for s in spec.outputs for o in offsets_in(s.expr)):
        return spec

    taken = set(spec.names)
    chains: dict[tuple[str, Value, Sort], list[str]] = {}
    new_decls: list[StreamDecl] = []

    def delay_name(stream: str, depth: int, variant: int) -> str:
        name = f"{stream}_d{depth}" if variant == 1 else f"{stream}_d{depth}_{variant}"
        while name in taken:
            name += "_"
        taken.add(name)
        return name

    def chain(stream: str, default: Value, depth: int) -> str:
        # one delay chain per (stream, default) pair, since defaults differ per reference
        key = (stream, default, sort_of_value(default))
        names = chains.setdefault(key, [])
        variant = [k for k in chains if k[0] == stream].index(key) + 1
        while len(names) < depth:
            d = len(names) + 1
            name = delay_name(stream, d, variant)
            src = stream if d == 1 else names[-1]
            new_decls.append(
                StreamDecl(name, spec.sort_of(stream), "output", Offset(src, -1, default), origin="delay")
            )
            names.append(name)
        return names[depth - 1]

    def rewrite(node: StreamExpr):
        if isinstance(node, Offset) and node.offset < -1:
            return Offset(chain(node.stream, node.default, -node.offset - 1), -1, node.default)
        return None

    streams = []
    for s in spec.streams:
        if s.kind == "output":
            s = replace(s, expr=map_expr(s.expr, rewrite))
        streams.append(s)
    return Specification(tuple(streams) + tuple(new_decls), spec.assumptions)


# ---------------------------------------------------------------------------
# Fragments
# ---------------------------------------------------------------------------


class Fragment(str, Enum):
    B = "B"
    LA = "LA"
    B_LA = "B_LA"
    B_LA_ITE = "B_LA_ite"
    UNSUPPORTED = "Unsupported"

    @property
    def rank(self) -> int:
        return {"B": 0, "LA": 0, "B_LA": 1, "B_LA_ite": 2, "Unsupported": 3}[self.value]


def _is_ground(e: StreamExpr) -> bool:
    return not any(isinstance(n, Offset) for n in walk(e))


def _scan(e: StreamExpr, sorts: Callable[[str], Sort], flags: dict):
    if isinstance(e, Ite):
        flags["ite"] = True
    elif isinstance(e, Fun):
        if e.op == "mul" and not (_is_ground(e.args[0]) or _is_ground(e.args[1])):
            flags["nonlinear"] = True
        elif e.op in ("lt", "le"):
            flags["cmp"] = True
        elif e.op == "eq" and expr_sort(e.args[0], sorts) is Sort.REAL:
            flags["cmp"] = True
    elif isinstance(e, Const) and e.sort is Sort.REAL:
        flags["real"] = True
    elif isinstance(e, Offset) and sorts(e.stream) is Sort.REAL:
        flags["real"] = True
    for c in children(e):
        _scan(c, sorts, flags)


def classify_fragment(spec: Specification) -> Fragment:
    """Most specific fragment containing every stream definition."""
    flags: dict = {}
    for s in spec.outputs:
        _scan(s.expr, spec.sort_of, flags)
    asm_flags: dict = {}
    for a in spec.assumptions:
        _scan(a, spec.sort_of, asm_flags)
    if flags.get("nonlinear") or asm_flags.get("nonlinear"):
        return Fragment.UNSUPPORTED
    if flags.get("ite") or asm_flags.get("ite"):
        return Fragment.B_LA_ITE
    sorts = {s.sort for s in spec.streams}
    if sorts <= {Sort.BOOL} and not flags.get("real"):
        return Fragment.B
    if sorts == {Sort.REAL} and not flags.get("cmp"):
        return Fragment.LA
    return Fragment.B_LA


# ---------------------------------------------------------------------------
# ite elimination
# ---------------------------------------------------------------------------


def _bool_ite(c: StreamExpr, a: StreamExpr, b: StreamExpr) -> StreamExpr:
    return Fun("or", (Fun("and", (c, a)), Fun("and", (Fun("not", (c,)), b))))


def rewrite_ite(spec: Specification) -> Specification:
    """Remove every ite.

    A Bool ite becomes ``(c and t) or (not c and e)`` in place.  A Real ite
    is replaced by a fresh helper stream ``h`` that behaves like an input,
    together with the assumption ``(c and h = t) or (not c and h = e)``.
    """
    if not any(isinstance(n, Ite) for s in spec.outputs for n in walk(s.expr)) and not any(
        isinstance(n, Ite) for a in spec.assumptions for n in walk(a)
    ):
        return spec

    taken = set(spec.names)
    helpers: list[StreamDecl] = []
    extra: list[StreamExpr] = []
    sorts: dict[str, Sort] = {s.name: s.sort for s in spec.streams}

    def fresh_name(owner: str) -> str:
        k = 1
        while f"{owner}_ite{k}" in taken:
            k += 1
        name = f"{owner}_ite{k}"
        taken.add(name)
        return name

    def rw(e: StreamExpr, owner: str) -> StreamExpr:
        if isinstance(e, Fun):
            return Fun(e.op, tuple(rw(a, owner) for a in e.args))
        if not isinstance(e, Ite):
            return e
        c = rw(e.cond, owner)
        a = rw(e.then, owner)
        b = rw(e.other, owner)
        if expr_sort(a, sorts.__getitem__) is Sort.BOOL:
            return _bool_ite(c, a, b)
        h = fresh_name(owner)
        sorts[h] = Sort.REAL
        helpers.append(StreamDecl(h, Sort.REAL, "input", origin="helper"))
        hn = Offset(h, 0)
        extra.append(_bool_ite(c, Fun("eq", (hn, a)), Fun("eq", (hn, b))))
        return hn

    streams = []
    for s in spec.streams:
        if s.kind == "output":
            s = replace(s, expr=rw(s.expr, s.name))
        streams.append(s)
    assumptions = [rw(a, f"assumption{i + 1}") for i, a in enumerate(spec.assumptions)]
    return Specification(tuple(streams) + tuple(helpers), tuple(assumptions) + tuple(extra))


def prepare(spec: Specification) -> Specification:
    """Flatten and remove ite so the specification can be monitored symbolically."""
    spec = rewrite_ite(flatten(spec))
    frag = classify_fragment(spec)
    if frag is Fragment.UNSUPPORTED:
        raise FragmentError("the specification uses operations outside the supported fragments")
    return spec


__all__ = [
    "Sort", "Value", "Const", "Offset", "Fun", "Ite", "StreamExpr", "StreamDecl", "Specification",
    "Fragment", "TT", "FF", "now", "parse_spec", "spec_to_text", "expr_to_text", "check_well_formed",
    "flatten", "classify_fragment", "rewrite_ite", "prepare", "format_rational", "format_value",
    "expr_sort", "walk", "offsets_in", "map_expr", "SpecError",
]
