import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import determined, obscure, random_bool_spec, random_inputs, random_linear_spec, random_mixed_spec
from symstream.errors import FragmentError, ReadingError
from symstream.harness import ACCUMULATOR_SPEC, WINDOW_SUM_SPEC, LOAD_EXAMPLE_SPEC, XOR_SPEC
from symstream.monitor import MonitorConfig, Verdict, init_state, memory_profile, run, step
from symstream.solver import Bounds
from symstream.spec_ast import parse_spec
from symstream.symbolic import UNKNOWN, Exact, Range, eval_concrete

F = Fraction
GENERATORS = {"bool": random_bool_spec, "linear": random_linear_spec, "mixed": random_mixed_spec}


def payloads(result, stream):
    return [v.payload for v in result.verdicts if v.stream == stream]


def test_window_sum_exact_trace():
    res = run(parse_spec(WINDOW_SUM_SPEC), [{"ld": x} for x in (3, 4, 5, 7)])
    assert payloads(res, "acc") == ["3", "7", "12", "16"]
    assert payloads(res, "ok") == ["tt", "tt", "tt", "ff"]


def test_window_sum_range_reading_cancels_out():
    trace = [{"ld": Range(F(1), F(5))}, {"ld": 4}, {"ld": 5}, {"ld": 7}]
    res = run(parse_spec(WINDOW_SUM_SPEC), trace)
    assert payloads(res, "ok") == ["tt", "tt", "tt", "ff"]
    assert payloads(res, "acc") == ["[1,5]", "[5,9]", "[10,14]", "16"]


def test_load_example_determines_ok_at_six():
    ld = [None, 10, 4, None, None, 1, 9]
    usr = [False, False, False, True, True, True, False]
    res = run(parse_spec(LOAD_EXAMPLE_SPEC), [{"ld": a, "usr_a": b} for a, b in zip(ld, usr)])
    table = res.table()
    assert table[(6, "ok")].payload == "tt"
    assert table[(6, "acc_a")] == Verdict(6, "acc_a", "bounds", Bounds(F(1), F(21)))
    # ok^4 and ok^5 hinge on ld^3 + ld^4 <= ld^0 + 14, which the bounds do not settle
    assert [table[(t, "ok")].payload for t in range(6)] == ["tt", "tt", "tt", "tt", "?", "?"]


def test_later_reading_revises_earlier_verdict():
    spec = parse_spec("input ld: Real\noutput acc := acc[-1|0] + ld[now]\nassumption ld[-1|0] = ld[now]")
    res = run(spec, [{"ld": None}, {"ld": 4}], MonitorConfig(lookback=1))
    assert [v.record() for v in res.verdicts] == ["0\tacc\tresidual\tacc^0 = ld^0", "1\tacc\tval\t8"]
    assert [v.record() for v in res.revisions] == ["0\tacc\trevised\tval 4"]


def test_xor_spec_keeps_parity_symbolically():
    res = run(parse_spec(XOR_SPEC), [{"x": None}, {"x": True}, {"x": None}])
    assert all(v.kind == "tri" for v in res.verdicts)


def test_accumulator_residual_and_values():
    spec = parse_spec(ACCUMULATOR_SPEC)
    names = [s.name for s in spec.inputs]
    res = run(spec, [{n: 2 for n in names}, {n: 4 for n in names}])
    assert all(v.kind == "val" for v in res.verdicts)
    blank = run(spec, [{n: None for n in names}])
    assert all(v.kind == "residual" for v in blank.verdicts)


def test_inconsistent_readings_give_empty_bounds():
    spec = parse_spec("input x: Real\noutput y := x[now]\nassumption 0 <= x[now]")
    res = run(spec, [{"x": -1}])
    assert res.verdicts[0].payload == "empty"


def test_reading_errors():
    spec = parse_spec(WINDOW_SUM_SPEC)
    state = init_state(spec)
    with pytest.raises(ReadingError):
        step(state, {"nope": 1})
    with pytest.raises(ReadingError):
        step(state, {"acc": 1})
    with pytest.raises(ReadingError):
        step(state, {"ld": True})


def test_helper_streams_take_no_readings():
    state = init_state(parse_spec(LOAD_EXAMPLE_SPEC))
    helper = next(s.name for s in state.spec.inputs if s.origin == "helper")
    with pytest.raises(ReadingError):
        step(state, {helper: 1})


def test_unsupported_fragment_is_rejected():
    with pytest.raises(FragmentError):
        init_state(parse_spec("input x: Real\ninput z: Real\noutput y := x[now] * z[now]"))


def test_step_is_pure():
    state = init_state(parse_spec(WINDOW_SUM_SPEC))
    a, s1 = step(state, {"ld": 3})
    b, s2 = step(state, {"ld": 3})
    assert a == b and s1 == s2 and state.t == 0


def test_verdict_records_print_rationals_exactly():
    res = run(parse_spec("input x: Real\noutput y := 1/3 * x[now]"), [{"x": 1}])
    assert res.records() == ["0\ty\tval\t1/3"]


def test_memory_profile_is_flat_on_unknown_input():
    spec = parse_spec(ACCUMULATOR_SPEC)
    names = [s.name for s in spec.inputs]
    profile = memory_profile(run(spec, [{n: None for n in names}] * 40))
    assert max(profile[:10]) == max(profile)


def truth_check(verdicts, spec, values):
    truth = eval_concrete(spec, values)
    for v in verdicts:
        actual = truth[v.stream][v.t]
        if v.kind == "tri" and v.value is not None:
            assert v.value == actual, v.record()
        elif v.kind == "val":
            assert v.value == actual, v.record()
        elif v.kind == "bounds":
            assert v.value.contains(actual), v.record()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), kind=st.sampled_from(sorted(GENERATORS)), pruning=st.booleans())
def test_verdicts_agree_with_ground_truth(seed, kind, pruning):
    rng = random.Random(seed)
    spec = parse_spec(GENERATORS[kind](rng))
    values = random_inputs(rng, spec, 8)
    trace = obscure(rng, values, unknown=0.4, ranged=0.3 if kind == "mixed" else 0.0)
    res = run(spec, trace, MonitorConfig(pruning=pruning))
    truth_check(res.verdicts, spec, values)
    for r in res.revisions:
        truth_check([Verdict(r.t, r.stream, r.value.kind, r.value.value)], spec, values)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), kind=st.sampled_from(["bool", "linear"]))
def test_perfect_pruning_matches_reference(seed, kind):
    rng = random.Random(seed)
    spec = parse_spec(GENERATORS[kind](rng))
    trace = obscure(rng, random_inputs(rng, spec, 10), unknown=0.5)
    pruned = run(spec, trace, MonitorConfig(pruning=True))
    reference = run(spec, trace, MonitorConfig(pruning=False))
    assert determined(pruned.verdicts) == determined(reference.verdicts)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_more_readings_never_lose_verdicts(seed):
    rng = random.Random(seed)
    spec = parse_spec(random_bool_spec(rng))
    values = random_inputs(rng, spec, 8)
    coarse = obscure(random.Random(seed), values, unknown=0.6)
    fine = [{k: (Exact(values[k][t]) if rng.random() < 0.5 else r) for k, r in row.items()}
            for t, row in enumerate(coarse)]
    a = determined(run(spec, coarse).verdicts)
    b = determined(run(spec, fine).verdicts)
    assert a.items() <= b.items()


def test_unknown_readings_may_be_omitted():
    spec = parse_spec(WINDOW_SUM_SPEC)
    assert run(spec, [{}, {"ld": 1}]).records() == run(spec, [{"ld": UNKNOWN}, {"ld": 1}]).records()
