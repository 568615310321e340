import pytest

from symstream.cli import EXIT_INPUT, EXIT_OK, main
from symstream.harness import ACCUMULATOR_SPEC, WINDOW_SUM_SPEC


@pytest.fixture
def window_sum(tmp_path):
    spec = tmp_path / "window_sum.spec"
    spec.write_text(WINDOW_SUM_SPEC)
    trace = tmp_path / "window_sum.csv"
    trace.write_text("ld\n[1,5]\n4\n5\n7\n")
    return spec, trace


def test_run_prints_records(window_sum, capsys):
    spec, trace = window_sum
    assert main(["run", str(spec), str(trace)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "3\tacc\tval\t16" in lines
    assert "3\tok\ttri\tff" in lines


def test_run_interval_monitor(window_sum, capsys):
    spec, trace = window_sum
    assert main(["run", str(spec), str(trace), "--abs"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "3\tacc\tabs\t[12,20]" in lines
    assert "3\tok\tabs\t?" in lines


def test_run_without_pruning_agrees(window_sum, capsys):
    spec, trace = window_sum
    main(["run", str(spec), str(trace)])
    pruned = capsys.readouterr().out
    main(["run", str(spec), str(trace), "--no-prune"])
    assert capsys.readouterr().out == pruned


def test_inject_is_reproducible(window_sum, capsys):
    _, trace = window_sum
    main(["inject", str(trace), "--blank", "0.5", "--seed", "3"])
    first = capsys.readouterr().out
    main(["inject", str(trace), "--blank", "0.5", "--seed", "3"])
    assert capsys.readouterr().out == first
    assert first.splitlines()[0] == "ld"
    assert first.count("?") == 2


def test_inject_perturb(window_sum, capsys):
    _, trace = window_sum
    assert main(["inject", str(trace), "--perturb", "1", "0", "--seed", "1"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[1:] == ["[1,5]", "[4,4]", "[5,5]", "[7,7]"]


def test_compare_csv(window_sum, capsys):
    spec, trace = window_sum
    assert main(["compare", str(spec), str(trace)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ok,4,0,3,1" in out.splitlines()


def test_bench_csv(tmp_path, capsys):
    spec = tmp_path / "acc.spec"
    spec.write_text(ACCUMULATOR_SPEC)
    assert main(["bench", str(spec), "--lengths", "5", "20"]) == EXIT_OK
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "length,seconds_per_event,max_measure"
    assert len({r.split(",")[2] for r in rows[1:]}) == 1


def test_spec_error_exit_code(tmp_path, window_sum, capsys):
    _, trace = window_sum
    bad = tmp_path / "bad.spec"
    bad.write_text("input ld: Real\noutput y := z[now]\n")
    assert main(["run", str(bad), str(trace)]) == EXIT_INPUT
    assert "line 2" in capsys.readouterr().err


def test_trace_mismatch_exit_code(tmp_path, window_sum, capsys):
    spec, _ = window_sum
    trace = tmp_path / "other.csv"
    trace.write_text("x\n1\n")
    assert main(["run", str(spec), str(trace)]) == EXIT_INPUT


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["run", str(tmp_path / "none.spec"), str(tmp_path / "none.csv")]) == EXIT_INPUT
