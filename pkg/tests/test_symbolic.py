import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batteries import check_simplify
from oracles import random_bool_spec, random_inputs, random_linear_spec, random_mixed_spec
from symstream.errors import ReadingError
from symstream.harness import WINDOW_SUM_SPEC
from symstream.spec_ast import Sort, flatten, parse_spec
from symstream.symbolic import (
    FALSE,
    TRUE,
    Exact,
    FreshSupply,
    Lin,
    Range,
    SConst,
    SFun,
    SIte,
    StreamAt,
    SVar,
    UNKNOWN,
    encode_reading,
    eq,
    eval_sym,
    expr_measure,
    free_vars,
    instantiate_step,
    measure,
    simplify,
    stream_var,
    substitute,
    to_text,
)
from symstream.symbolic import eval_concrete

REALS = [StreamAt(f"x{i}", 0, i, Sort.REAL) for i in range(3)]
BOOLS = [StreamAt(f"b{i}", 0, 3 + i, Sort.BOOL) for i in range(3)]

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def real_exprs(bools):
    leaves = st.one_of(fractions.map(SConst), st.sampled_from(REALS).map(SVar))

    def extend(sub):
        return st.one_of(
            st.lists(sub, min_size=2, max_size=3).map(lambda xs: SFun("add", xs)),
            sub.map(lambda x: SFun("neg", (x,))),
            st.tuples(fractions, sub).map(lambda p: SFun("mul", (SConst(p[0]), p[1]))),
            st.tuples(fractions, st.lists(st.tuples(sub, fractions), min_size=1, max_size=2)).map(
                lambda p: Lin(p[0], tuple(p[1]))
            ),
            st.tuples(bools, sub, sub).map(lambda p: SIte(*p)),
        )

    return st.recursive(leaves, extend, max_leaves=8)


def bool_exprs():
    leaves = st.one_of(st.sampled_from([TRUE, FALSE]), st.sampled_from(BOOLS).map(SVar))
    base = st.recursive(
        leaves,
        lambda sub: st.one_of(
            sub.map(lambda x: SFun("not", (x,))),
            st.tuples(st.sampled_from(["and", "or", "xor", "implies", "eq"]), sub, sub).map(
                lambda p: SFun(p[0], (p[1], p[2]))
            ),
            st.tuples(sub, sub, sub).map(lambda p: SIte(*p)),
        ),
        max_leaves=6,
    )
    reals = real_exprs(base)
    atoms = st.tuples(st.sampled_from(["le", "lt", "eq"]), reals, reals).map(lambda p: SFun(p[0], (p[1], p[2])))
    return st.recursive(
        st.one_of(base, atoms),
        lambda sub: st.tuples(st.sampled_from(["and", "or", "xor", "implies"]), sub, sub).map(
            lambda p: SFun(p[0], (p[1], p[2]))
        ),
        max_leaves=4,
    )


envs = st.tuples(
    st.lists(st.integers(-3, 3).map(Fraction), min_size=3, max_size=3),
    st.lists(st.booleans(), min_size=3, max_size=3),
).map(lambda p: dict(zip(REALS, p[0])) | dict(zip(BOOLS, p[1])))


@settings(max_examples=300, deadline=None)
@given(e=bool_exprs(), env=envs)
def test_simplify_preserves_bool_meaning(e, env):
    assert eval_sym(simplify(e), env) == eval_sym(e, env)


@settings(max_examples=300, deadline=None)
@given(e=real_exprs(st.sampled_from(BOOLS).map(SVar)), env=envs)
def test_simplify_preserves_real_meaning(e, env):
    assert eval_sym(simplify(e), env) == eval_sym(e, env)


@settings(max_examples=200, deadline=None)
@given(e=bool_exprs())
def test_simplify_is_idempotent_and_adds_no_variables(e):
    s = simplify(e)
    assert simplify(s) == s
    assert free_vars(s) <= free_vars(e)


def test_simplify_collects_like_terms():
    x = SVar(REALS[0])
    e = SFun("add", (x, SFun("mul", (SConst(Fraction(2)), x)), SConst(Fraction(1)), SFun("neg", (x,))))
    assert to_text(simplify(e)) == "1 + 2*x0^0"


def test_simplify_folds_ground_and_constant_ite():
    b = SVar(BOOLS[0])
    assert simplify(SFun("and", (b, FALSE))) == FALSE
    assert simplify(SFun("or", (b, SFun("not", (b,))))) == TRUE
    assert simplify(SIte(TRUE, SConst(Fraction(3)), SVar(REALS[1]))) == SConst(Fraction(3))


def test_measure_counts_constants_and_variables():
    spec = parse_spec(WINDOW_SUM_SPEC)
    eqs = instantiate_step(spec, 1)
    # the ld[-3|0] reference falls before the trace start and folds to 0
    assert [to_text(e) for e in eqs] == ["acc^1 = acc^0 + ld^1", "ok^1 = (acc^1 <= 15)"]
    assert [expr_measure(e) for e in eqs] == [3, 3]
    assert measure(eqs) == 6


def test_measure_counts_nontrivial_coefficients():
    x, y = SVar(REALS[0]), SVar(REALS[1])
    assert expr_measure(Lin(Fraction(0), ((x, Fraction(1)), (y, Fraction(-1))))) == 2
    assert expr_measure(Lin(Fraction(2), ((x, Fraction(1, 2)),))) == 3


def test_encode_reading_forms():
    spec = parse_spec(WINDOW_SUM_SPEC)
    v = SVar(stream_var(spec, "ld", 0))
    assert encode_reading(spec, "ld", 0, UNKNOWN) == []
    assert encode_reading(spec, "ld", 0, Exact(Fraction(3))) == [eq(v, SConst(Fraction(3)))]
    assert [to_text(c) for c in encode_reading(spec, "ld", 0, Range(Fraction(1), Fraction(5)))] == [
        "1 <= ld^0",
        "ld^0 <= 5",
    ]
    with pytest.raises(ReadingError):
        encode_reading(spec, "ld", 0, Exact(True))
    with pytest.raises(ReadingError):
        encode_reading(spec, "nope", 0, UNKNOWN)


def test_range_rejects_inverted_bounds():
    with pytest.raises(ReadingError):
        Range(Fraction(5), Fraction(1))


def test_fresh_supply_is_monotone():
    supply = FreshSupply(4)
    a, b = supply(Sort.REAL), supply(Sort.BOOL)
    assert (a.id, b.id) == (4, 5)
    assert supply.next_id == 6


def _unrolled(spec, inputs, length):
    equations = {}
    for t in range(length):
        for e in instantiate_step(spec, t):
            lhs, rhs = e.args
            equations[lhs.var] = rhs
    env = {stream_var(spec, s.name, t): (v if isinstance(v, bool) else Fraction(v))
           for s in spec.inputs for t, v in enumerate(inputs[s.name])}
    out = {}
    for s in spec.outputs:
        vals = []
        for t in range(length):
            e = SVar(stream_var(spec, s.name, t))
            while free_vars(e) - set(env):
                e = substitute(e, {v: equations[v] for v in free_vars(e) if v in equations})
            vals.append(eval_sym(e, env))
        out[s.name] = vals
    return out


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), kind=st.sampled_from(["bool", "linear", "mixed"]), length=st.integers(1, 10))
def test_unrolled_equations_agree_with_concrete_evaluation(seed, kind, length):
    rng = random.Random(seed)
    gen = {"bool": random_bool_spec, "linear": random_linear_spec, "mixed": random_mixed_spec}[kind]
    spec = flatten(parse_spec(gen(rng)))
    inputs = random_inputs(rng, spec, length)
    assert _unrolled(spec, inputs, length) == eval_concrete(spec, inputs)


def test_simplify_battery():
    rng = random.Random(43)
    for _ in range(250):
        check_simplify(rng)
