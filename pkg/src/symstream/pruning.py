"""Constant-size pruning strategies.

Each strategy maps a constraint set ``C`` and an ordered list ``R`` of
relevant variables to a smaller constraint set over ``R`` and fresh
variables.  The Boolean and linear strategies keep the projection of the
models onto ``R`` exactly; the mixed strategy over-approximates it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .errors import FragmentError, InvariantViolation
from .solver import (
    Inconsistent,
    LinearBounds,
    LinearSystem,
    gaussian_solve,
    is_real_atom,
    lincon_of,
    linear_conjuncts,
    project_bool_models,
    rref,
    satisfiable,
    _top_conjuncts,
)
from .spec_ast import Sort
from .symbolic import (
    FALSE,
    TRUE,
    Affine,
    FreshSupply,
    InstantVar,
    SConst,
    SFun,
    SVar,
    SymExpr,
    free_vars,
    measure,
    simplify,
)


class Quality(str, Enum):
    PERFECT = "perfect"
    SOUND = "sound"


@dataclass(frozen=True)
class PruneResult:
    constraints: tuple[SymExpr, ...]
    fresh_introduced: tuple[InstantVar, ...]
    quality: Quality


def boolean_bound(m: int, columns: int) -> int:
    return m * (columns * columns + 1)


def linear_bound(m: int) -> int:
    return 2 * m * m + 2 * m


def _check(constraints, bound: int, what: str):
    size = measure(constraints)
    if size > bound:
        raise InvariantViolation(f"{what} pruning produced measure {size} above its bound {bound}")


# ---------------------------------------------------------------------------
# Boolean strategy
# ---------------------------------------------------------------------------


def _tree_formula(columns: list[tuple[bool, ...]], i: int, lo: int, hi: int, fresh: list[SVar], depth: int) -> SymExpr:
    """Formula over the fresh variables that is true exactly on codes of columns where ``r_i`` is true.

    Columns ``lo..hi`` are split at the ceiling midpoint; ``fresh[depth]``
    false selects the left half.
    """
    vals = [columns[j][i] for j in range(lo, hi)]
    if all(vals):
        return TRUE
    if not any(vals):
        return FALSE
    mid = lo + (hi - lo + 1) // 2
    v = fresh[depth]
    left = _tree_formula(columns, i, lo, mid, fresh, depth + 1)
    right = _tree_formula(columns, i, mid, hi, fresh, depth + 1)
    return simplify(SFun("or", (SFun("and", (SFun("not", (v,)), left)), SFun("and", (v, right)))))


def _encode_columns(
    columns: list[tuple[bool, ...]], relevant: Sequence[InstantVar], supply: FreshSupply
) -> tuple[list[SymExpr], list[InstantVar]]:
    c = len(columns)
    k = math.ceil(math.log2(c)) if c > 1 else 0
    fresh_vars = [supply(Sort.BOOL) for _ in range(k)]
    fresh = [SVar(v) for v in fresh_vars]
    out = [SFun("eq", (SVar(r), _tree_formula(columns, i, 0, c, fresh, 0))) for i, r in enumerate(relevant)]
    return out, fresh_vars


def prune_boolean(constraints: Sequence[SymExpr], relevant: Sequence[InstantVar], supply: FreshSupply) -> PruneResult:
    """Exact projection of Boolean constraints onto ``relevant``.

    The distinct projections (columns) are numbered in lexicographic order and
    addressed by a balanced binary decision over ``ceil(log2 c)`` fresh
    variables, so every assignment of the fresh variables denotes a column.

    >>> from symstream.symbolic import StreamAt
    >>> r = StreamAt("r", 0, 0, Sort.BOOL)
    >>> [str(c) for c in prune_boolean([], [r], FreshSupply()).constraints]
    ['r^0 = v0']
    """
    relevant = list(relevant)
    if any(v.sort is not Sort.BOOL for v in relevant):
        raise FragmentError("Boolean pruning needs Bool relevant variables")
    for v in free_vars(list(constraints)):
        if v.sort is not Sort.BOOL:
            raise FragmentError("Boolean pruning needs an all-Bool constraint set")
    columns = project_bool_models(constraints, relevant, abstract_atoms=False)
    if not columns:
        return PruneResult((FALSE,), (), Quality.PERFECT)
    if not relevant:
        return PruneResult((TRUE,), (), Quality.PERFECT)
    out, fresh = _encode_columns(columns, relevant, supply)
    _check(out, boolean_bound(len(relevant), len(columns)), "Boolean")
    return PruneResult(tuple(out), tuple(fresh), Quality.PERFECT)


# ---------------------------------------------------------------------------
# Linear strategy
# ---------------------------------------------------------------------------


def _affine_expr(const: Fraction, terms: list[tuple[InstantVar, Fraction]]) -> SymExpr:
    acc = Affine(const, {SVar(v): c for v, c in terms if c != 0})
    return acc.to_expr()


def _linear_rows(
    equations, relevant: Sequence[InstantVar], supply: FreshSupply
) -> tuple[list[SymExpr], list[InstantVar]] | None:
    """``r_i = sum_j c_ij v_j + c_i`` for each relevant variable, or ``None`` if inconsistent."""
    relevant = list(relevant)
    rel_set = set(relevant)
    others = sorted({v for lc in equations for v, _ in lc.coeffs} - rel_set, key=lambda v: v.key)
    cols = relevant + others
    index = {v: j for j, v in enumerate(cols)}
    n = len(cols)
    rows = []
    for lc in equations:
        row = [Fraction(0)] * (n + 1)
        for v, c in lc.coeffs:
            row[index[v]] = c
        row[n] = lc.const
        rows.append(row)
    red, piv = rref(rows, n + 1)
    if n in piv:
        return None

    pivot_row = {p: row for row, p in zip(red, piv)}
    free = [j for j in range(n) if j not in pivot_row]
    expressions: list[tuple[dict[int, Fraction], Fraction]] = []
    for j in range(len(relevant)):
        if j in pivot_row:
            row = pivot_row[j]
            expr = {f: -row[f] for f in free if row[f] != 0}
            expressions.append((expr, -row[n]))
        else:
            expressions.append(({j: Fraction(1)}, Fraction(0)))
    sources = sorted({f for e, _ in expressions for f in e})
    matrix = tuple(tuple(e.get(f, Fraction(0)) for f in sources) for e, _ in expressions)
    offsets = tuple(o for _, o in expressions)
    solved = gaussian_solve(LinearSystem(matrix, offsets, ncols=len(sources)))
    assert not isinstance(solved, Inconsistent)
    fresh = [supply(Sort.REAL) for _ in range(solved.rank)]
    out = []
    for r, coeffs, off in zip(relevant, solved.basis.matrix, solved.basis.offsets):
        out.append(SFun("eq", (SVar(r), _affine_expr(off, list(zip(fresh, coeffs))))))
    return out, fresh


def prune_linear(constraints: Sequence[SymExpr], relevant: Sequence[InstantVar], supply: FreshSupply) -> PruneResult:
    """Exact projection of a system of linear equations onto ``relevant``.

    The relevant variables are solved for in terms of the remaining free
    variables, and that affine map is re-expressed over a basis of its row
    space, one fresh variable per basis direction.
    """
    relevant = list(relevant)
    if any(v.sort is not Sort.REAL for v in relevant):
        raise FragmentError("linear pruning needs Real relevant variables")
    equations = []
    for c in _top_conjuncts(constraints):
        if c == TRUE:
            continue
        if c == FALSE:
            return PruneResult((SFun("eq", (SConst(Fraction(0)), SConst(Fraction(1)))),), (), Quality.PERFECT)
        if not (is_real_atom(c) and c.op == "eq"):
            raise FragmentError("linear pruning needs a conjunction of linear equations")
        equations.append(lincon_of(c))
    res = _linear_rows(equations, relevant, supply)
    if res is None:
        return PruneResult((SFun("eq", (SConst(Fraction(0)), SConst(Fraction(1)))),), (), Quality.PERFECT)
    out, fresh = res
    _check(out, linear_bound(len(relevant)), "linear")
    return PruneResult(tuple(out), tuple(fresh), Quality.PERFECT)


# ---------------------------------------------------------------------------
# Mixed strategy
# ---------------------------------------------------------------------------


def prune_mixed(constraints: Sequence[SymExpr], relevant: Sequence[InstantVar], supply: FreshSupply) -> PruneResult:
    """Sound pruning for Boolean structure over linear atoms.

    Boolean relevant variables are projected with Real comparisons treated as
    opaque propositions; Real relevant variables are projected through the
    linear equations alone, and each fresh Real variable is boxed by the bounds
    the full constraint set implies.
    """
    constraints = list(constraints)
    relevant = list(relevant)
    if not satisfiable(constraints):
        return PruneResult((FALSE,), (), Quality.SOUND)
    rel_bool = [v for v in relevant if v.sort is Sort.BOOL]
    rel_real = [v for v in relevant if v.sort is Sort.REAL]
    out: list[SymExpr] = []
    fresh: list[InstantVar] = []

    columns = 0
    if rel_bool:
        cols = project_bool_models(constraints, rel_bool, abstract_atoms=True)
        columns = len(cols)
        bool_part, bool_fresh = _encode_columns(cols, rel_bool, supply)
        out += bool_part
        fresh += bool_fresh

    n_bounds = 0
    if rel_real:
        equations = [lc for lc in linear_conjuncts(constraints) if lc.rel == "eq"]
        res = _linear_rows(equations, rel_real, supply)
        assert res is not None, "equations of a satisfiable set are consistent"
        real_part, real_fresh = res
        out += real_part
        fresh += real_fresh
        bounds = LinearBounds(linear_conjuncts(constraints + real_part))
        for v in real_fresh:
            b = bounds(v)
            sv = SVar(v)
            if b.point is not None:
                out.append(SFun("eq", (sv, SConst(Fraction(b.point)))))
                n_bounds += 1
                continue
            if b.lo != -math.inf:
                out.append(SFun("le" if b.lo_attained else "lt", (SConst(Fraction(b.lo)), sv)))
                n_bounds += 1
            if b.hi != math.inf:
                out.append(SFun("le" if b.hi_attained else "lt", (sv, SConst(Fraction(b.hi)))))
                n_bounds += 1

    bound = 2 * n_bounds
    if rel_bool:
        bound += boolean_bound(len(rel_bool), columns)
    if rel_real:
        bound += linear_bound(len(rel_real))
    if not out:
        out = [TRUE]
    _check(out, max(bound, 1), "mixed")
    return PruneResult(tuple(out), tuple(fresh), Quality.SOUND)
