"""Exact decision procedures for the supported fragments.

* Boolean reasoning: Tseitin encoding into CNF plus a small CDCL solver.
* Linear arithmetic over the rationals: Gaussian elimination for equations
  and Fourier-Motzkin elimination for inequalities (strictness tracked).
* Mixed queries: the CDCL solver enumerates Boolean skeletons; each
  skeleton's linear literals are checked by Fourier-Motzkin and refuted
  skeletons are blocked by a minimised conflict clause.

Everything works on :class:`fractions.Fraction`, so results are exact.
"""

from __future__ import annotations

import math
from functools import lru_cache
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .errors import FragmentError, SolverResourceError
from .spec_ast import Sort
from .symbolic import (
    FALSE,
    TRUE,
    Fresh,
    InstantVar,
    Lin,
    SConst,
    SFun,
    SIte,
    SVar,
    SymExpr,
    affine_of,
    children,
    format_number,
    free_vars,
    simplify,
    to_text,
)

INF = math.inf
DEFAULT_BOOL_CAP = 24
DEFAULT_CONFLICT_CAP = 200_000

Number = Fraction | float  # float only for the infinities


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


class Outcome(str, Enum):
    VALID = "valid"
    UNSAT = "unsat"
    CONTINGENT = "contingent"


@dataclass(frozen=True)
class Bounds:
    lo: Number
    hi: Number
    lo_attained: bool = True
    hi_attained: bool = True

    @property
    def empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_attained and self.hi_attained)

    @property
    def finite(self) -> bool:
        return not self.empty and self.lo != -INF and self.hi != INF

    @property
    def point(self) -> Fraction | None:
        if not self.empty and self.lo == self.hi:
            return self.lo
        return None

    def contains(self, x: Fraction) -> bool:
        if self.empty:
            return False
        lo_ok = x > self.lo or (x == self.lo and self.lo_attained)
        hi_ok = x < self.hi or (x == self.hi and self.hi_attained)
        return lo_ok and hi_ok

    def __str__(self) -> str:
        if self.empty:
            return "empty"
        lo = "-inf" if self.lo == -INF else format_number(self.lo)
        hi = "inf" if self.hi == INF else format_number(self.hi)
        left = "[" if self.lo_attained and self.lo != -INF else "("
        right = "]" if self.hi_attained and self.hi != INF else ")"
        return f"{left}{lo},{hi}{right}"


EMPTY = Bounds(INF, -INF, False, False)
UNBOUNDED = Bounds(-INF, INF, False, False)


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------

Matrix = tuple[tuple[Fraction, ...], ...]


def rref(rows: Sequence[Sequence[Fraction]], ncols: int | None = None) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form, pivoting on the first nonzero column.

    Returns the nonzero rows and their pivot columns.
    """
    m = [[x if type(x) is Fraction else Fraction(x) for x in r] for r in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        pv = m[r][c]
        if pv != 1:
            m[r] = [x / pv if x else x for x in m[r]]
        prow = m[r]
        nz = [j for j in range(c, len(prow)) if prow[j]]
        for i in range(len(m)):
            f = m[i][c]
            if i != r and f:
                row = m[i]
                for j in nz:
                    row[j] = row[j] - f * prow[j]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


@dataclass(frozen=True)
class LinearSystem:
    """The affine map ``r = N s + o``, optionally restricted by ``side`` equations ``a . s = b``."""

    matrix: Matrix
    offsets: tuple[Fraction, ...]
    side: tuple[tuple[tuple[Fraction, ...], Fraction], ...] = ()
    ncols: int | None = None

    @property
    def n(self) -> int:
        if self.ncols is not None:
            return self.ncols
        if self.matrix:
            return len(self.matrix[0])
        return len(self.side[0][0]) if self.side else 0


@dataclass(frozen=True)
class Inconsistent:
    pass


@dataclass(frozen=True)
class Solved:
    """``basis`` is ``r = N' v + o'`` over ``rank`` new variables, with ``v = change_of_basis . s``."""

    rank: int
    basis: LinearSystem
    change_of_basis: Matrix


def _as_matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(x) for x in r) for r in rows)


def _solve_combination(basis: list[list[Fraction]], target: list[Fraction]) -> list[Fraction]:
    """Coefficients ``x`` with ``sum(x_j * basis_j) == target``; the target must lie in the span."""
    r = len(basis)
    if r == 0:
        if any(target):
            raise ArithmeticError("target outside span")
        return []
    n = len(target)
    aug = [[basis[j][k] for j in range(r)] + [target[k]] for k in range(n)]
    red, piv = rref(aug, r + 1)
    if r in piv:
        raise ArithmeticError("target outside span")
    x = [Fraction(0)] * r
    for row, c in zip(red, piv):
        x[c] = row[r]
    return x


def gaussian_solve(sys: LinearSystem) -> Inconsistent | Solved:
    """Rank, a column basis, and a change of basis for ``r = N s + o``.

    Basis vectors are chosen to stay close to the source variables: any single
    source variable determined by the rows becomes its own basis direction, and
    the remaining directions are taken from the rows themselves in order.

    >>> h = Fraction(1, 2)
    >>> res = gaussian_solve(LinearSystem(_as_matrix([[1, 0, 1, 0], [0, 1, 0, 1], [h, h, h, h]]), (0, 0, 0)))
    >>> res.rank, [[str(x) for x in row] for row in res.basis.matrix]
    (2, [['1', '0'], ['0', '1'], ['1/2', '1/2']])
    """
    n = sys.n
    N = [list(map(Fraction, r)) for r in sys.matrix]
    o = [Fraction(x) for x in sys.offsets]
    m = len(N)

    if sys.side:
        aug = [list(map(Fraction, a)) + [Fraction(b)] for a, b in sys.side]
        red, piv = rref(aug, n + 1)
        if n in piv:
            return Inconsistent()
        free = [c for c in range(n) if c not in piv]
        s0 = [Fraction(0)] * n
        for row, c in zip(red, piv):
            s0[c] = row[n]
        K = [[Fraction(0)] * len(free) for _ in range(n)]
        for k, f in enumerate(free):
            K[f][k] = Fraction(1)
            for row, c in zip(red, piv):
                K[c][k] = -row[f]
    else:
        free = list(range(n))
        s0 = [Fraction(0)] * n
        K = [[Fraction(int(i == k)) for k in range(n)] for i in range(n)]

    nf = len(free)
    N_eff = [[sum((N[i][a] * K[a][k] for a in range(n)), Fraction(0)) for k in range(nf)] for i in range(m)]
    o_eff = [o[i] + sum((N[i][a] * s0[a] for a in range(n)), Fraction(0)) for i in range(m)]

    red, piv = rref(N_eff, nf)
    units = [row for row in red if sum(1 for x in row if x != 0) == 1]
    unit_cols = {next(c for c, x in enumerate(row) if x != 0) for row in units}
    basis: list[list[Fraction]] = [[Fraction(int(c == u)) for c in range(nf)] for u in sorted(unit_cols)]
    chosen: list[list[Fraction]] = []
    for row in N_eff:
        reduced = [Fraction(0) if c in unit_cols else x for c, x in enumerate(row)]
        if not any(reduced):
            continue
        if len(rref(chosen + [reduced], nf)[1]) > len(chosen):
            chosen.append(reduced)
    basis.extend(chosen)
    rank = len(basis)
    assert rank == len(piv)

    Np = [_solve_combination(basis, row) for row in N_eff]
    cob = [[Fraction(0)] * n for _ in range(rank)]
    for j, b in enumerate(basis):
        for k, f in enumerate(free):
            cob[j][f] = b[k]
    return Solved(rank, LinearSystem(_as_matrix(Np), tuple(o_eff), ncols=rank), _as_matrix(cob))


# ---------------------------------------------------------------------------
# Linear constraints and Fourier-Motzkin elimination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinCon:
    """``sum(coeffs) + const REL 0`` with REL one of ``eq``, ``le``, ``lt``."""

    coeffs: tuple[tuple[InstantVar, Fraction], ...]
    const: Fraction
    rel: str

    @staticmethod
    def make(coeffs: dict, const: Fraction, rel: str) -> "LinCon":
        items = tuple(sorted(((v, Fraction(c)) for v, c in coeffs.items() if c != 0), key=lambda vc: vc[0].key))
        return LinCon(items, Fraction(const), rel)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def holds(self, env) -> bool:
        val = self.const + sum((c * env[v] for v, c in self.coeffs), Fraction(0))
        return val == 0 if self.rel == "eq" else val <= 0 if self.rel == "le" else val < 0

    def negated(self) -> list["LinCon"]:
        """Disjuncts of the negation."""
        neg = {v: -c for v, c in self.coeffs}
        if self.rel == "le":
            return [LinCon.make(neg, -self.const, "lt")]
        if self.rel == "lt":
            return [LinCon.make(neg, -self.const, "le")]
        return [LinCon.make(self.as_dict(), self.const, "lt"), LinCon.make(neg, -self.const, "lt")]


def _real_var(e: SymExpr) -> InstantVar:
    if isinstance(e, SVar):
        return e.var
    raise FragmentError(f"non-linear term {to_text(e)}")


@lru_cache(maxsize=1 << 16)
def lincon_of(atom: SFun) -> LinCon:
    """Linear constraint for a comparison ``a op b`` over Reals."""
    d = affine_of(atom.args[0]).add(affine_of(atom.args[1]), Fraction(-1))
    coeffs = {_real_var(a): c for a, c in d.coeffs.items()}
    return LinCon.make(coeffs, d.const, atom.op)


def is_real_atom(e: SymExpr) -> bool:
    return isinstance(e, SFun) and e.op in ("le", "lt", "eq") and e.args[0].sort is Sort.REAL


def _normalize(coeffs: dict, const: Fraction, strict: bool):
    """Scale an inequality so its leading coefficient has magnitude one."""
    items = sorted(((v, c) for v, c in coeffs.items() if c != 0), key=lambda vc: vc[0].key)
    if not items:
        return (), const, strict
    k = abs(items[0][1])
    return tuple((v, c / k) for v, c in items), const / k, strict


class _Infeasible(Exception):
    pass


def _substitute_eq(target: dict, const: Fraction, pivot, expr: dict, expr_const: Fraction):
    """Replace ``pivot`` in ``target`` by ``expr + expr_const``; returns new (dict, const)."""
    c = target.get(pivot)
    if not c:
        return target, const
    out = dict(target)
    del out[pivot]
    for v, a in expr.items():
        nv = out.get(v, 0) + c * a
        if nv:
            out[v] = nv
        else:
            out.pop(v, None)
    return out, const + c * expr_const


def _eliminate_equalities(cons: Iterable[LinCon], keep: set):
    """Solve equations for non-kept variables and substitute them away.

    Returns (kept equations, inequalities) where inequalities are triples
    ``(coeffs, const, strict)``.  Raises :class:`_Infeasible`.
    """
    eqs = []
    ineqs = []
    for c in cons:
        d = dict(c.coeffs)
        if c.rel == "eq":
            eqs.append((d, c.const))
        else:
            ineqs.append((d, c.const, c.rel == "lt"))
    kept: list[tuple[dict, Fraction]] = []
    while eqs:
        d, k = eqs.pop()
        d = {v: a for v, a in d.items() if a != 0}
        if not d:
            if k != 0:
                raise _Infeasible
            continue
        candidates = [v for v in d if v not in keep]
        if not candidates:
            kept.append((d, k))
            continue
        pivot = max(candidates, key=lambda v: v.key)
        a = d[pivot]
        expr = {v: -c / a for v, c in d.items() if v != pivot}
        expr_const = -k / a
        eqs = [_substitute_eq(e, ek, pivot, expr, expr_const) for e, ek in eqs]
        kept = [_substitute_eq(e, ek, pivot, expr, expr_const) for e, ek in kept]
        new_ineqs = []
        for e, ek, s in ineqs:
            ne, nk = _substitute_eq(e, ek, pivot, expr, expr_const)
            new_ineqs.append((ne, nk, s))
        ineqs = new_ineqs
    # kept equations only mention kept variables; reduce them among themselves
    return kept, ineqs


def _fm(ineqs: list, keep: set) -> list:
    """Fourier-Motzkin elimination of every variable outside ``keep``.

    Each row remembers the input rows it combines and the variables that vanished
    on the way, whether eliminated or cancelled; a row built from more than one
    plus that many inputs is a sum of other rows and is dropped, which keeps the
    result exact.
    """
    table: dict[tuple, tuple[Fraction, bool, frozenset, frozenset]] = {}

    def add(coeffs: dict, const: Fraction, strict: bool, sources: frozenset, eliminated: frozenset):
        key, k, s = _normalize(coeffs, const, strict)
        if not key:
            if k > 0 or (k == 0 and s):
                raise _Infeasible
            return
        old = table.get((key, sources))
        if old is None or k > old[0] or (k == old[0] and s and not old[1]):
            table[(key, sources)] = (k, s, sources, eliminated)

    for i, (d, k, s) in enumerate(ineqs):
        add(d, k, s, frozenset((i,)), frozenset())

    while True:
        occ: dict = defaultdict(lambda: [0, 0])
        for key, _ in table:
            for v, c in key:
                if v not in keep:
                    occ[v][0 if c > 0 else 1] += 1
        if not occ:
            break
        x = min(occ, key=lambda v: (occ[v][0] * occ[v][1] - occ[v][0] - occ[v][1], v.key))
        pos, negs, rest = [], [], {}
        for (key, hist), row in table.items():
            c = dict(key).get(x)
            if c is None:
                rest[(key, hist)] = row
            elif c > 0:
                pos.append((dict(key), c, row))
            else:
                negs.append((dict(key), c, row))
        table = rest
        for dp, cp, (kp, sp, hp, ep) in pos:
            for dn, cn, (kn, sn, hn, en) in negs:
                comb: dict = {}
                for v, a in dp.items():
                    comb[v] = comb.get(v, 0) + (-cn) * a
                for v, a in dn.items():
                    comb[v] = comb.get(v, 0) + cp * a
                comb.pop(x, None)
                comb = {v: a for v, a in comb.items() if a != 0}
                sources = hp | hn
                eliminated = (ep | en | dp.keys() | dn.keys()) - comb.keys()
                if len(sources) > len(eliminated) + 1:
                    continue
                add(comb, (-cn) * kp + cp * kn, sp or sn, sources, eliminated)
    return [(dict(key), k, s) for (key, _), (k, s, _, _) in table.items()]


def fm_feasible(cons: Iterable[LinCon]) -> bool:
    """Whether a conjunction of linear constraints has a rational solution."""
    try:
        kept, ineqs = _eliminate_equalities(cons, set())
        _fm(ineqs, set())
    except _Infeasible:
        return False
    return True


def fm_bounds(cons: Iterable[LinCon], v: InstantVar) -> Bounds:
    """Exact bounds of ``v`` over the solutions of a conjunction."""
    try:
        kept, ineqs = _eliminate_equalities(cons, {v})
        rest = _fm(ineqs, {v})
    except _Infeasible:
        return EMPTY
    lo, hi = -INF, INF
    lo_at, hi_at = False, False
    for d, k in kept:
        a = d[v]
        val = -k / a
        lo, hi, lo_at, hi_at = _tighten(lo, hi, lo_at, hi_at, val, False, True)
        lo, hi, lo_at, hi_at = _tighten(lo, hi, lo_at, hi_at, val, True, True)
    for d, k, s in rest:
        a = d[v]
        val = -k / a
        lo, hi, lo_at, hi_at = _tighten(lo, hi, lo_at, hi_at, val, a < 0, not s)
    b = Bounds(lo, hi, lo_at, hi_at)
    return EMPTY if b.empty else b


def _tighten(lo, hi, lo_at, hi_at, val, is_lower: bool, attained: bool):
    if is_lower:
        if val > lo or (val == lo and lo_at and not attained):
            lo, lo_at = val, attained
    else:
        if val < hi or (val == hi and hi_at and not attained):
            hi, hi_at = val, attained
    return lo, hi, lo_at, hi_at


def fm_project(cons: Iterable[LinCon], keep: Iterable[InstantVar]) -> list[LinCon] | None:
    """Constraints over ``keep`` describing the projection, or ``None`` if infeasible."""
    keep = set(keep)
    try:
        kept, ineqs = _eliminate_equalities(cons, keep)
        rest = _fm(ineqs, keep)
    except _Infeasible:
        return None
    out = [LinCon.make(d, k, "eq") for d, k in kept]
    out += [LinCon.make(d, k, "lt" if s else "le") for d, k, s in rest]
    return out if fm_feasible(out) else None


# ---------------------------------------------------------------------------
# Simplex
# ---------------------------------------------------------------------------


class _Delta(NamedTuple):
    """The number ``real + inf * delta`` for an arbitrarily small positive delta."""

    real: Fraction
    inf: Fraction

    def __add__(self, other):
        return _Delta(self.real + other.real, self.inf + other.inf)

    def __sub__(self, other):
        return _Delta(self.real - other.real, self.inf - other.inf)

    def scale(self, k: Fraction) -> "_Delta":
        return _Delta(self.real * k, self.inf * k)


_DELTA_ZERO = _Delta(Fraction(0), Fraction(0))


class _Simplex:
    """Feasibility of bounded linear forms by Bland-rule pivoting on a tableau.

    Every constraint becomes a bound on one variable; multi-variable forms get
    a slack variable defined by a tableau row.  Strict bounds use delta values.
    Each bound remembers the reason it was asserted with, so an infeasible
    check can report the reasons of the bounds in the conflicting row.
    """

    def __init__(self):
        self.rows: dict[int, dict[int, Fraction]] = {}
        self.lower: dict[int, tuple[_Delta, object]] = {}
        self.upper: dict[int, tuple[_Delta, object]] = {}
        self.value: dict[int, _Delta] = {}
        self.ids: dict = {}
        self.forms: dict[tuple, int] = {}
        self.next_id = 0
        self.conflict: set = set()

    def _fresh(self) -> int:
        self.next_id += 1
        return self.next_id - 1

    def _var(self, v) -> int:
        if v not in self.ids:
            self.ids[v] = self._fresh()
            self.value[self.ids[v]] = _DELTA_ZERO
        return self.ids[v]

    def bound(self, con: LinCon, reason=None) -> bool:
        """Add ``con``; returns False when its bounds already clash."""
        items = sorted(con.coeffs, key=lambda vc: vc[0].key)
        if not items:
            if con.const < 0 or (con.const == 0 and con.rel != "lt"):
                return True
            self.conflict = {reason}
            return False
        lead = abs(items[0][1])
        form = tuple((v, c / lead) for v, c in items)
        limit = -con.const / lead
        if len(form) == 1:
            x = self._var(form[0][0])
            sign = form[0][1]
        else:
            x = self._slack(form)
            sign = Fraction(1)
        # sign * x  rel  limit
        limit = limit / sign
        strict = Fraction(1) if con.rel == "lt" else Fraction(0)
        if con.rel == "eq":
            point = _Delta(limit, Fraction(0))
            return self._set_lower(x, point, reason) and self._set_upper(x, point, reason)
        if sign > 0:
            return self._set_upper(x, _Delta(limit, -strict), reason)
        return self._set_lower(x, _Delta(limit, strict), reason)

    def _slack(self, form: tuple) -> int:
        """The variable standing for the linear form ``form`` (pairs of variable and coefficient)."""
        x = self.forms.get(form)
        if x is None:
            x = self._fresh()
            self.forms[form] = x
            row: dict[int, Fraction] = {}
            for v, c in form:
                j = self._var(v)
                if j in self.rows:
                    for k, a in self.rows[j].items():
                        row[k] = row.get(k, 0) + c * a
                else:
                    row[j] = row.get(j, 0) + c
            self.rows[x] = {k: a for k, a in row.items() if a != 0}
            self.value[x] = sum((self.value[k].scale(a) for k, a in self.rows[x].items()), _DELTA_ZERO)
        return x

    def _set_upper(self, x: int, b: _Delta, reason) -> bool:
        if x in self.upper and self.upper[x][0] <= b:
            return True
        if x in self.lower and b < self.lower[x][0]:
            self.conflict = {reason, self.lower[x][1]}
            return False
        self.upper[x] = (b, reason)
        if x not in self.rows and self.value[x] > b:
            self._update(x, b)
        return True

    def _set_lower(self, x: int, b: _Delta, reason) -> bool:
        if x in self.lower and self.lower[x][0] >= b:
            return True
        if x in self.upper and b > self.upper[x][0]:
            self.conflict = {reason, self.upper[x][1]}
            return False
        self.lower[x] = (b, reason)
        if x not in self.rows and self.value[x] < b:
            self._update(x, b)
        return True

    def _update(self, x: int, v: _Delta) -> None:
        """Move non-basic ``x`` to ``v`` and adjust the basic variables."""
        change = v - self.value[x]
        for b, row in self.rows.items():
            a = row.get(x)
            if a:
                self.value[b] = self.value[b] + change.scale(a)
        self.value[x] = v

    def _pivot(self, basic: int, entering: int) -> None:
        row = self.rows.pop(basic)
        a = row.pop(entering)
        new = {k: -c / a for k, c in row.items()}
        new[basic] = 1 / a
        for b, other in self.rows.items():
            c = other.pop(entering, None)
            if c is None:
                continue
            for k, d in new.items():
                nv = other.get(k, 0) + c * d
                if nv:
                    other[k] = nv
                else:
                    other.pop(k, None)
        self.rows[entering] = new

    def check(self) -> bool:
        while True:
            broken = None
            for b in sorted(self.rows):
                if b in self.lower and self.value[b] < self.lower[b][0]:
                    broken, raise_ = b, True
                    break
                if b in self.upper and self.value[b] > self.upper[b][0]:
                    broken, raise_ = b, False
                    break
            if broken is None:
                return True
            target, why = (self.lower if raise_ else self.upper)[broken]
            row = self.rows[broken]
            entering = None
            blocking = {why}
            for j in sorted(row):
                up = (row[j] > 0) == raise_
                limits = self.upper if up else self.lower
                if j not in limits or (self.value[j] < limits[j][0] if up else self.value[j] > limits[j][0]):
                    entering = j
                    break
                blocking.add(limits[j][1])
            if entering is None:
                self.conflict = blocking
                return False
            theta = (target - self.value[broken]).scale(1 / row[entering])
            self._update(entering, self.value[entering] + theta)
            self._pivot(broken, entering)

    def feasible_with(self, extra: Iterable[tuple[LinCon, object]]) -> bool:
        """Feasibility with tagged constraints added temporarily; pivots are kept as a warm start.

        On failure ``conflict`` holds the tags of an infeasible subset (``None`` stands for the base set).
        """
        saved = dict(self.lower), dict(self.upper)
        try:
            return all(self.bound(c, tag) for c, tag in extra) and self.check()
        finally:
            self.lower, self.upper = saved

    def optimum(self, x: int, sense: int) -> _Delta | None:
        """The value of ``x`` where ``sense * x`` is largest on a feasible tableau, or None when unbounded.

        Primal simplex with Bland's rule for both the entering and the leaving variable.
        """
        while True:
            row = self.rows[x] if x in self.rows else {x: Fraction(1)}
            entering = None
            for j in sorted(row):
                up = (row[j] * sense) > 0
                limits = self.upper if up else self.lower
                if j not in limits or (self.value[j] < limits[j][0] if up else self.value[j] > limits[j][0]):
                    entering, direction = j, (1 if up else -1)
                    break
            if entering is None:
                return self.value[x]
            own = self.upper if direction > 0 else self.lower
            best, leaving = None, None
            if entering in own:
                best = (own[entering][0] - self.value[entering]).scale(Fraction(direction))
            for b in sorted(self.rows):
                rate = self.rows[b].get(entering, 0) * direction
                if rate > 0 and b in self.upper:
                    theta = (self.upper[b][0] - self.value[b]).scale(1 / rate)
                elif rate < 0 and b in self.lower:
                    theta = (self.value[b] - self.lower[b][0]).scale(-1 / rate)
                else:
                    continue
                if best is None or theta < best:
                    best, leaving = theta, b
            if best is None:
                return None
            self._update(entering, self.value[entering] + best.scale(Fraction(direction)))
            if leaving is not None:
                self._pivot(leaving, entering)


class LinearBounds:
    """Exact bounds of single variables over one conjunction, independent of FM.

    Equations are solved once by Gauss-Jordan elimination; the remaining
    inequalities, rewritten over the free variables, go into one simplex
    tableau that is warm-started for every query.
    """

    def __init__(self, cons: Iterable[LinCon]):
        cons = list(cons)
        self.solved: dict[InstantVar, tuple[Fraction, dict[InstantVar, Fraction]]] = {}
        self.tableau = _Simplex()
        self.feasible = self._solve_equations([c for c in cons if c.rel == "eq"])
        if self.feasible:
            rest = [self._substituted(c) for c in cons if c.rel != "eq"]
            self.feasible = all(self.tableau.bound(c) for c in rest) and self.tableau.check()

    def _solve_equations(self, eqs: list[LinCon]) -> bool:
        cols = sorted({v for c in eqs for v, _ in c.coeffs}, key=lambda v: v.key)
        index = {v: j for j, v in enumerate(cols)}
        n = len(cols)
        rows = []
        for c in eqs:
            row = [Fraction(0)] * (n + 1)
            for v, a in c.coeffs:
                row[index[v]] = a
            row[n] = c.const
            rows.append(row)
        red, piv = rref(rows, n + 1) if rows else ([], [])
        for row, p in zip(red, piv):
            if p == n:
                return False
            self.solved[cols[p]] = (-row[n], {cols[j]: -row[j] for j in range(p + 1, n) if row[j] != 0})
        return True

    def _substituted(self, con: LinCon) -> LinCon:
        coeffs: dict[InstantVar, Fraction] = {}
        const = con.const
        for v, a in con.coeffs:
            if v in self.solved:
                k, expr = self.solved[v]
                const += a * k
                for w, b in expr.items():
                    coeffs[w] = coeffs.get(w, 0) + a * b
            else:
                coeffs[v] = coeffs.get(v, 0) + a
        return LinCon.make(coeffs, const, con.rel)

    def __call__(self, v: InstantVar) -> Bounds:
        if not self.feasible:
            return EMPTY
        const, expr = self.solved.get(v, (Fraction(0), {v: Fraction(1)}))
        if not expr:
            return Bounds(const, const)
        items = sorted(((w, a) for w, a in expr.items()), key=lambda wa: wa[0].key)
        if len(items) == 1 and items[0][0] not in self.tableau.ids:
            return UNBOUNDED
        scale = abs(items[0][1])
        form = tuple((w, a / scale) for w, a in items)
        x = self.tableau._var(form[0][0]) if len(form) == 1 and form[0][1] == 1 else self.tableau._slack(form)
        hi = self.tableau.optimum(x, 1)
        lo = self.tableau.optimum(x, -1)
        return Bounds(
            -INF if lo is None else const + scale * lo.real,
            INF if hi is None else const + scale * hi.real,
            lo is not None and lo.inf <= 0,
            hi is not None and hi.inf >= 0,
        )


def lp_feasible(cons: Iterable[LinCon]) -> bool:
    """Whether a conjunction of linear constraints has a rational solution (simplex)."""
    tableau = _Simplex()
    return all(tableau.bound(c) for c in cons) and tableau.check()


# ---------------------------------------------------------------------------
# CDCL
# ---------------------------------------------------------------------------


class _Cdcl:
    """Conflict-driven clause learning with two watched literals and 1UIP learning."""

    def __init__(self, conflict_cap: int = DEFAULT_CONFLICT_CAP):
        self.n = 0
        self.clauses: list[list[int]] = []
        self.units: list[int] = []
        self.unsat = False
        self.watches: dict[int, list[int]] = defaultdict(list)
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.conflict_cap = conflict_cap
        self.conflicts = 0

    def new_var(self) -> int:
        self.n += 1
        self.activity.append(0.0)
        self.phase.append(False)
        return self.n

    def add_clause(self, lits: Iterable[int]):
        seen: set[int] = set()
        out = []
        for l in lits:
            if -l in seen:
                return
            if l not in seen:
                seen.add(l)
                out.append(l)
        if not out:
            self.unsat = True
        elif len(out) == 1:
            self.units.append(out[0])
        else:
            self.clauses.append(out)
            ci = len(self.clauses) - 1
            self.watches[out[0]].append(ci)
            self.watches[out[1]].append(ci)

    def solve(self, assumptions: Sequence[int] = ()) -> list[bool] | None:
        """A model, or ``None`` if the clauses are unsatisfiable under the assumed literals."""
        if self.unsat:
            return None
        n = self.n
        assign: list = [None] * (n + 1)
        level = [0] * (n + 1)
        reason: list = [None] * (n + 1)
        trail: list[int] = []
        lim: list[int] = []
        clauses, watches, activity = self.clauses, self.watches, self.activity
        inc = [1.0]

        def value(l: int):
            a = assign[l if l > 0 else -l]
            if a is None:
                return None
            return a if l > 0 else not a

        def enqueue(l: int, why):
            v = l if l > 0 else -l
            assign[v] = l > 0
            level[v] = len(lim)
            reason[v] = why
            trail.append(l)

        qhead = [0]

        def propagate():
            while qhead[0] < len(trail):
                p = trail[qhead[0]]
                qhead[0] += 1
                false_lit = -p
                ws = watches[false_lit]
                keep = []
                i = 0
                while i < len(ws):
                    ci = ws[i]
                    i += 1
                    c = clauses[ci]
                    if c[0] == false_lit:
                        c[0], c[1] = c[1], c[0]
                    if value(c[0]) is True:
                        keep.append(ci)
                        continue
                    moved = False
                    for k in range(2, len(c)):
                        if value(c[k]) is not False:
                            c[1], c[k] = c[k], c[1]
                            watches[c[1]].append(ci)
                            moved = True
                            break
                    if moved:
                        continue
                    keep.append(ci)
                    if value(c[0]) is False:
                        keep.extend(ws[i:])
                        watches[false_lit] = keep
                        return ci
                    enqueue(c[0], ci)
                watches[false_lit] = keep
            return None

        def analyze(ci: int):
            seen: set[int] = set()
            learnt: list[int] = []
            counter = 0
            p = None
            idx = len(trail) - 1
            cur = len(lim)
            clause = clauses[ci]
            while True:
                for q in clause:
                    if p is not None and q == p:
                        continue
                    v = q if q > 0 else -q
                    if v in seen or level[v] == 0:
                        continue
                    seen.add(v)
                    activity[v] += inc[0]
                    if level[v] == cur:
                        counter += 1
                    else:
                        learnt.append(q)
                while True:
                    lit = trail[idx]
                    idx -= 1
                    if (lit if lit > 0 else -lit) in seen:
                        break
                p = lit
                counter -= 1
                if counter == 0:
                    break
                clause = clauses[reason[p if p > 0 else -p]]
            learnt.insert(0, -p)
            if len(learnt) == 1:
                return learnt, 0
            best = max(range(1, len(learnt)), key=lambda j: level[abs(learnt[j])])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            return learnt, level[abs(learnt[1])]

        def backtrack(lv: int):
            if len(lim) <= lv:
                return
            cut = lim[lv]
            for l in trail[cut:]:
                v = l if l > 0 else -l
                self.phase[v] = l > 0
                assign[v] = None
                reason[v] = None
            del trail[cut:]
            del lim[lv:]
            qhead[0] = min(qhead[0], len(trail))

        for u in self.units:
            val = value(u)
            if val is False:
                return None
            if val is None:
                enqueue(u, None)
        if propagate() is not None:
            return None

        while True:
            if len(lim) < len(assumptions):
                # assumed literals are the first decisions, one level each
                a = assumptions[len(lim)]
                val = value(a)
                if val is False:
                    return None
                lim.append(len(trail))
                if val is None:
                    enqueue(a, None)
            else:
                pick = 0
                best = -1.0
                for v in range(1, n + 1):
                    if assign[v] is None and activity[v] > best:
                        best = activity[v]
                        pick = v
                if pick == 0:
                    return [False] + [bool(assign[v]) for v in range(1, n + 1)]
                lim.append(len(trail))
                enqueue(pick if self.phase[pick] else -pick, None)
            while True:
                conflict = propagate()
                if conflict is None:
                    break
                self.conflicts += 1
                if self.conflicts > self.conflict_cap:
                    raise SolverResourceError(f"CDCL exceeded {self.conflict_cap} conflicts")
                if not lim:
                    self.unsat = True
                    return None
                learnt, bj = analyze(conflict)
                backtrack(bj)
                if len(learnt) == 1:
                    self.units.append(learnt[0])
                    enqueue(learnt[0], None)
                else:
                    clauses.append(learnt)
                    ci = len(clauses) - 1
                    watches[learnt[0]].append(ci)
                    watches[learnt[1]].append(ci)
                    enqueue(learnt[0], ci)
                inc[0] *= 1.05
                if inc[0] > 1e100:
                    for v in range(1, n + 1):
                        activity[v] *= 1e-100
                    inc[0] *= 1e-100


# ---------------------------------------------------------------------------
# Encoding of constraint sets
# ---------------------------------------------------------------------------


def _lift_real_ite(constraints: list[SymExpr], counter: list[int]) -> list[SymExpr]:
    """Replace Real ite terms by auxiliary variables with defining constraints."""
    defs: list[SymExpr] = []
    memo: dict[SymExpr, SymExpr] = {}

    def go(e: SymExpr) -> SymExpr:
        if e in memo:
            return memo[e]
        if isinstance(e, SIte) and e.sort is Sort.REAL:
            c, a, b = go(e.cond), go(e.then), go(e.other)
            counter[0] -= 1
            aux = SVar(Fresh(counter[0], Sort.REAL))
            defs.append(
                SFun("or", (SFun("and", (c, SFun("eq", (aux, a)))), SFun("and", (SFun("not", (c,)), SFun("eq", (aux, b))))))
            )
            out = aux
        elif isinstance(e, (SFun, SIte, Lin)):
            if isinstance(e, SFun):
                out = SFun(e.op, [go(x) for x in e.args])
            elif isinstance(e, SIte):
                out = SIte(go(e.cond), go(e.then), go(e.other))
            else:
                out = simplify(SFun("add", [SConst(e.const)] + [SFun("mul", (SConst(c), go(x))) for x, c in e.terms]))
        else:
            out = e
        memo[e] = out
        return out

    if not any(isinstance(n, SIte) and n.sort is Sort.REAL for c in constraints for n in _nodes(c)):
        return constraints
    out = [go(c) for c in constraints]
    return out + defs


def _nodes(e: SymExpr):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(children(n))


class _Encoder:
    """Tseitin encoding of Boolean structure; Real comparisons become theory atoms."""

    def __init__(self, sat: _Cdcl, abstract_atoms: bool = False):
        self.sat = sat
        self.abstract = abstract_atoms
        self.vars: dict[InstantVar, int] = {}
        self.memo: dict[SymExpr, int] = {}
        self.atoms: dict[tuple, int] = {}
        self.atom_info: dict[int, tuple[dict, Fraction, bool]] = {}
        self.true = sat.new_var()
        sat.add_clause([self.true])

    def bool_var(self, v: InstantVar) -> int:
        x = self.vars.get(v)
        if x is None:
            x = self.vars[v] = self.sat.new_var()
        return x

    def _atom(self, coeffs: dict, const: Fraction, strict: bool) -> int:
        key = (tuple(sorted(coeffs.items(), key=lambda vc: vc[0].key)), const, strict)
        x = self.atoms.get(key)
        if x is None:
            x = self.atoms[key] = self.sat.new_var()
            self.atom_info[x] = (dict(coeffs), const, strict)
        return x

    def real_atom(self, e: SFun) -> int:
        lc = lincon_of(e)
        d = dict(lc.coeffs)
        if not d:
            holds = lc.holds({})
            return self.true if holds else -self.true
        lead = min(d, key=lambda v: v.key)
        k = d[lead]
        sign = 1 if k > 0 else -1
        f = {v: c / abs(k) * sign for v, c in d.items()}
        fk = lc.const / abs(k) * sign
        P = self._atom(f, fk, False)
        Q = self._atom(f, fk, True)
        if lc.rel == "eq":
            return self._gate_and([P, -Q])
        if sign > 0:
            return P if lc.rel == "le" else Q
        return -Q if lc.rel == "le" else -P

    def _gate_and(self, lits: list[int]) -> int:
        g = self.sat.new_var()
        for l in lits:
            self.sat.add_clause([-g, l])
        self.sat.add_clause([g] + [-l for l in lits])
        return g

    def _gate_xor(self, a: int, b: int) -> int:
        g = self.sat.new_var()
        add = self.sat.add_clause
        add([-g, a, b])
        add([-g, -a, -b])
        add([g, -a, b])
        add([g, a, -b])
        return g

    def lit(self, e: SymExpr) -> int:
        hit = self.memo.get(e)
        if hit is not None:
            return hit
        out = self._lit(e)
        self.memo[e] = out
        return out

    def _lit(self, e: SymExpr) -> int:
        if isinstance(e, SConst):
            return self.true if e.value else -self.true
        if isinstance(e, SVar):
            return self.bool_var(e.var)
        if isinstance(e, SIte):
            c, a, b = self.lit(e.cond), self.lit(e.then), self.lit(e.other)
            g = self.sat.new_var()
            add = self.sat.add_clause
            add([-c, -a, g])
            add([c, -b, g])
            add([-c, a, -g])
            add([c, b, -g])
            return g
        op = e.op
        if op in ("le", "lt", "eq") and e.args[0].sort is Sort.REAL:
            if self.abstract:
                return self._opaque(e)
            return self.real_atom(e)
        if op == "not":
            return -self.lit(e.args[0])
        if op == "and":
            return self._gate_and([self.lit(a) for a in e.args])
        if op == "or":
            return -self._gate_and([-self.lit(a) for a in e.args])
        if op == "xor":
            lits = [self.lit(a) for a in e.args]
            acc = lits[0]
            for l in lits[1:]:
                acc = self._gate_xor(acc, l)
            return acc
        if op == "implies":
            return -self._gate_and([self.lit(e.args[0]), -self.lit(e.args[1])])
        if op == "eq":
            return -self._gate_xor(self.lit(e.args[0]), self.lit(e.args[1]))
        raise FragmentError(f"cannot encode {to_text(e)}")

    def _opaque(self, e: SFun) -> int:
        key = ("opaque", e)
        x = self.atoms.get(key)
        if x is None:
            x = self.atoms[key] = self.sat.new_var()
        return x

    def theory_literal(self, x: int, value: bool) -> LinCon:
        coeffs, const, strict = self.atom_info[x]
        if value:
            return LinCon.make(coeffs, const, "lt" if strict else "le")
        return LinCon.make({v: -c for v, c in coeffs.items()}, -const, "le" if strict else "lt")


def _top_conjuncts(constraints: Iterable[SymExpr]) -> list[SymExpr]:
    out = []
    stack = list(reversed(list(constraints)))
    while stack:
        c = stack.pop()
        if isinstance(c, SFun) and c.op == "and":
            stack.extend(reversed(c.args))
        else:
            out.append(c)
    return out


def linear_conjuncts(constraints: Iterable[SymExpr]) -> list[LinCon]:
    """Linear constraints entailed conjunctively (top-level comparisons and their negations)."""
    out = []
    for c in _top_conjuncts(constraints):
        if is_real_atom(c):
            out.append(lincon_of(c))
        elif isinstance(c, SFun) and c.op == "not" and is_real_atom(c.args[0]):
            neg = lincon_of(c.args[0]).negated()
            if len(neg) == 1:
                out.append(neg[0])
    return out


class _Problem:
    """A constraint set prepared for repeated satisfiability checks."""

    def __init__(self, constraints: Iterable[SymExpr], conflict_cap: int = DEFAULT_CONFLICT_CAP,
                 abstract_atoms: bool = False):
        aux = [0]
        cs = _lift_real_ite([simplify(c) for c in constraints], aux)
        self.sat = _Cdcl(conflict_cap)
        self.enc = _Encoder(self.sat, abstract_atoms)
        self.hard: list[LinCon] = []
        self.trivially_unsat = False
        for c in _top_conjuncts(cs):
            if isinstance(c, SConst):
                if not c.value:
                    self.trivially_unsat = True
                continue
            if not abstract_atoms and is_real_atom(c):
                self.hard.append(lincon_of(c))
                continue
            if not abstract_atoms and isinstance(c, SFun) and c.op == "not" and is_real_atom(c.args[0]):
                neg = lincon_of(c.args[0]).negated()
                if len(neg) == 1:
                    self.hard.append(neg[0])
                    continue
            self.sat.add_clause([self.enc.lit(c)])
        self.cap = conflict_cap
        self.hard_feasible: bool | None = None
        self.tableau = _Simplex()

    def add(self, e: SymExpr):
        e = simplify(e)
        if e == FALSE:
            self.trivially_unsat = True
        elif e != TRUE:
            self.sat.add_clause([self.enc.lit(e)])

    def literal(self, e: SymExpr) -> int:
        """Solver literal equivalent to ``e``, without asserting it."""
        return self.enc.lit(simplify(e))

    def solve(self, assumptions: Sequence[int] = ()) -> list[bool] | None:
        """A Boolean model whose theory literals are consistent, or ``None``."""
        if self.trivially_unsat:
            return None
        if self.hard_feasible is None:
            self.hard_feasible = all(self.tableau.bound(c) for c in self.hard) and self.tableau.check()
        if not self.hard_feasible:
            return None
        rounds = 0
        while True:
            model = self.sat.solve(assumptions)
            if model is None:
                return None
            if not self.enc.atom_info:
                return model
            lits = [(x, model[x]) for x in self.enc.atom_info]
            if self.tableau.feasible_with([(self.enc.theory_literal(x, v), (x, v)) for x, v in lits]):
                return model
            rounds += 1
            if rounds > self.cap:
                raise SolverResourceError("too many theory refinements")
            core = sorted(t for t in self.tableau.conflict if t is not None)
            i = 0
            while i < len(core):
                trial = core[:i] + core[i + 1:]
                if not self.tableau.feasible_with([(self.enc.theory_literal(x, v), (x, v)) for x, v in trial]):
                    # the explanation is a subset of the trial, so the core only shrinks
                    core = sorted(t for t in self.tableau.conflict if t is not None)
                else:
                    i += 1
            self.sat.add_clause([-x if v else x for x, v in core])


# ---------------------------------------------------------------------------
# Public queries
# ---------------------------------------------------------------------------


def satisfiable(constraints: Iterable[SymExpr], cap: int = DEFAULT_CONFLICT_CAP) -> bool:
    return _Problem(constraints, cap).solve() is not None


def check_predicate(constraints: Iterable[SymExpr], p: SymExpr, cap: int = DEFAULT_CONFLICT_CAP) -> Outcome:
    """Valid if the constraints entail ``p``, Unsat if they entail ``not p``, else Contingent.

    An inconsistent constraint set entails everything and is reported as Valid.
    """
    return Entailment(constraints, cap).check(p)


class Entailment:
    """Answers several entailment queries against one constraint set.

    The constraint set is encoded once; each query is decided by solving
    under an assumed literal, and models found along the way settle later
    queries without further search.
    """

    def __init__(self, constraints: Iterable[SymExpr], cap: int = DEFAULT_CONFLICT_CAP):
        self.problem = _Problem(list(constraints), cap)
        self.models: list[list[bool]] = []
        self.consistent: bool | None = None

    def _sat_with(self, lit: int) -> bool:
        if any(m[abs(lit)] == (lit > 0) for m in self.models if abs(lit) < len(m)):
            return True
        model = self.problem.solve([lit])
        if model is None:
            return False
        self.models.append(model)
        return True

    def check(self, p: SymExpr) -> Outcome:
        if self.consistent is None:
            model = self.problem.solve()
            self.consistent = model is not None
            if model is not None:
                self.models.append(model)
        if not self.consistent:
            return Outcome.VALID
        p = simplify(p)
        if p == TRUE:
            return Outcome.VALID
        if p == FALSE:
            return Outcome.UNSAT
        x = self.problem.literal(p)
        if not self._sat_with(-x):
            return Outcome.VALID
        if not self._sat_with(x):
            return Outcome.UNSAT
        return Outcome.CONTINGENT


def bounds_of(constraints: Iterable[SymExpr], v: InstantVar) -> Bounds:
    """Sound bounds of the Real variable ``v``.

    Exact for conjunctions of linear constraints.  For other constraint sets
    the bounds are those of the linear constraints that hold conjunctively,
    which over-approximates.
    """
    return fm_bounds(linear_conjuncts(constraints), v)


def enumerate_bool_models(
    constraints: Iterable[SymExpr], variables: Sequence[InstantVar], cap: int = DEFAULT_BOOL_CAP
) -> list[dict[InstantVar, bool]]:
    """All satisfying assignments over ``variables`` in lexicographic order (ff before tt)."""
    variables = list(variables)
    if len(variables) > cap:
        raise SolverResourceError(f"{len(variables)} Boolean variables exceed the cap of {cap}")
    rows = project_bool_models(constraints, variables, abstract_atoms=False)
    return [dict(zip(variables, r)) for r in rows]


def project_bool_models(
    constraints: Iterable[SymExpr], variables: Sequence[InstantVar], abstract_atoms: bool = True,
    cap: int = DEFAULT_CONFLICT_CAP,
) -> list[tuple[bool, ...]]:
    """Distinct projections of the models onto ``variables``, sorted lexicographically.

    With ``abstract_atoms`` every Real comparison is treated as an unconstrained
    Boolean variable, so the result may contain projections of no real model.
    """
    prob = _Problem(constraints, cap, abstract_atoms=abstract_atoms)
    xs = [prob.enc.bool_var(v) for v in variables]
    found: list[tuple[bool, ...]] = []
    while True:
        model = prob.solve()
        if model is None:
            break
        row = tuple(model[x] for x in xs)
        found.append(row)
        if not xs:
            break
        prob.sat.add_clause([-x if b else x for x, b in zip(xs, row)])
    return sorted(found)


# ---------------------------------------------------------------------------
# Debug output
# ---------------------------------------------------------------------------


def _smt_name(v: InstantVar) -> str:
    if isinstance(v, Fresh):
        return f"v{v.id}" if v.id >= 0 else f"aux{-v.id}"
    return f"{v.stream}_{v.t}"


def _smt_num(x: Fraction) -> str:
    x = Fraction(x)
    body = f"(/ {abs(x.numerator)}.0 {x.denominator}.0)" if x.denominator != 1 else f"{abs(x.numerator)}.0"
    return f"(- {body})" if x < 0 else body


def _smt(e: SymExpr) -> str:
    if isinstance(e, SConst):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return _smt_num(e.value)
    if isinstance(e, SVar):
        return _smt_name(e.var)
    if isinstance(e, Lin):
        parts = [_smt_num(e.const)] + [f"(* {_smt_num(c)} {_smt(a)})" for a, c in e.terms]
        return f"(+ {' '.join(parts)})"
    if isinstance(e, SIte):
        return f"(ite {_smt(e.cond)} {_smt(e.then)} {_smt(e.other)})"
    op = {"le": "<=", "lt": "<", "eq": "=", "implies": "=>", "add": "+", "mul": "*", "neg": "-"}.get(e.op, e.op)
    return f"({op} {' '.join(_smt(a) for a in e.args)})"


def to_smtlib(constraints: Iterable[SymExpr], negated_goal: SymExpr | None = None) -> str:
    """SMT-LIB2 script asserting the constraints (and the negation of a goal) for manual cross-checks."""
    cs = list(constraints)
    if negated_goal is not None:
        cs.append(SFun("not", (negated_goal,)))
    lines = ["(set-logic QF_LRA)"]
    for v in sorted(free_vars(cs), key=lambda v: v.key):
        sort = "Bool" if v.sort is Sort.BOOL else "Real"
        lines.append(f"(declare-fun {_smt_name(v)} () {sort})")
    for c in cs:
        lines.append(f"(assert {_smt(c)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
