"""Trace files, uncertainty injection, synthetic workloads and comparison reports."""

from __future__ import annotations

import io
import math
import random
import re
import time
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .errors import InvariantViolation, TraceError
from .interval import run_abs
from .monitor import MonitorConfig, Verdict, as_reading, run
from .spec_ast import Sort, Specification, format_rational
from .symbolic import UNKNOWN, Exact, Range, Reading, Unknown

# ---------------------------------------------------------------------------
# Specifications used by the examples, benchmarks and acceptance tests
# ---------------------------------------------------------------------------

WINDOW_SUM_SPEC = """\
input ld : Real
output acc := acc[-1|0] + ld[now] - ld[-3|0]
output ok := acc[now] <= 15
"""

XOR_SPEC = """\
input x : Bool
output a := x[-1|ff] xor x[now]
output b := not (x[-1|ff] xor x[now])
output ok := a[now] xor b[now]
"""

LOAD_EXAMPLE_SPEC = """\
input ld : Real
input usr_a : Bool
output acc := acc[-1|0] + ld[now]
output acc_a := acc_a[-1|0] + ite(usr_a[now], ld[now], 0)
output ok := acc_a[now] <= 0.5 * acc[now]
assumption 0 <= ld[now] and ld[now] <= 10
"""

ACCUMULATOR_SPEC = """\
input ld_a : Real
input ld_b : Real
output acc_a := acc_a[-1|0] + ld_a[now]
output acc_b := acc_b[-1|0] + ld_b[now]
output total := 0.5 * (acc_a[now] + acc_b[now])
"""

PEAK_WINDOW = 10

PEAK_SPEC = f"""\
input x : Real
output s := s[-1|0] + x[now] - x[-{PEAK_WINDOW}|0]
output peak := s[-1|0] > s[-2|0] and s[-1|0] > s[now]
"""

LOAD_START = Fraction(5)

LOAD_RATIO_SPEC = """\
input ld : Real
output n := n[-1|0] + 1
output acc := acc[-1|0] + ld[now]
output ok := acc[now] <= 5.5 * n[now]
"""

LOAD_RATIO_ASSUMPTION = "assumption 0.9 * ld[-1|0] <= ld[now] and ld[now] <= 1.1 * ld[-1|0]\n"


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceFile:
    header: tuple[str, ...]
    rows: tuple[tuple[Reading, ...], ...]

    def __len__(self) -> int:
        return len(self.rows)

    def readings(self) -> list[dict[str, Reading]]:
        return [dict(zip(self.header, row)) for row in self.rows]

    def column(self, name: str) -> list[Reading]:
        j = self.header.index(name)
        return [row[j] for row in self.rows]


_NUMBER = r"[-+]?(\d+(\.\d*)?|\.\d+)(/\d+)?"
_RANGE = re.compile(rf"^\[\s*({_NUMBER})\s*,\s*({_NUMBER})\s*\]$")


def _number(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise TraceError(f"not a number: {text!r}") from None


def parse_cell(text: str) -> Reading:
    """``tt``/``ff``, a decimal or ``p/q``, ``[a,b]`` or ``?``."""
    s = text.strip()
    if s == "?":
        return UNKNOWN
    if s in ("tt", "ff"):
        return Exact(s == "tt")
    m = _RANGE.match(s)
    if m:
        lo, hi = _number(m.group(1)), _number(m.group(5))
        if lo > hi:
            raise TraceError(f"empty range {s}")
        return Range(lo, hi)
    if re.fullmatch(_NUMBER, s):
        return Exact(_number(s))
    raise TraceError(f"malformed cell {text!r}")


def format_cell(r: Reading) -> str:
    if isinstance(r, Unknown):
        return "?"
    if isinstance(r, Range):
        return f"[{format_rational(r.lo)},{format_rational(r.hi)}]"
    if isinstance(r.value, bool):
        return "tt" if r.value else "ff"
    return format_rational(r.value)


def _split(line: str) -> list[str]:
    # commas inside [a,b] do not separate cells
    cells, depth, cur = [], 0, []
    for ch in line:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            cells.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    cells.append("".join(cur))
    return [c.strip() for c in cells]


def loads_trace(text: str) -> TraceFile:
    header: tuple[str, ...] | None = None
    rows = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cells = _split(line)
        if header is None:
            if len(set(cells)) != len(cells) or not all(cells):
                raise TraceError(f"line {n}: bad header")
            header = tuple(cells)
            continue
        if len(cells) != len(header):
            raise TraceError(f"line {n}: expected {len(header)} cells, found {len(cells)}")
        try:
            rows.append(tuple(parse_cell(c) for c in cells))
        except TraceError as e:
            raise TraceError(f"line {n}: {e}") from None
    if header is None:
        raise TraceError("trace has no header")
    return TraceFile(header, tuple(rows))


def dumps_trace(trace: TraceFile) -> str:
    out = io.StringIO()
    out.write(",".join(trace.header) + "\n")
    for row in trace.rows:
        out.write(",".join(format_cell(r) for r in row) + "\n")
    return out.getvalue()


def load_trace(path: str | Path, spec: Specification | None = None) -> TraceFile:
    trace = loads_trace(Path(path).read_text())
    if spec is not None:
        check_trace(trace, spec)
    return trace


def save_trace(trace: TraceFile, path: str | Path) -> None:
    Path(path).write_text(dumps_trace(trace))


def check_trace(trace: TraceFile, spec: Specification) -> None:
    """The header must list exactly the user inputs, and cells must fit their sorts."""
    inputs = [s.name for s in spec.inputs if s.origin == "user"]
    if set(trace.header) != set(inputs):
        raise TraceError(f"trace columns {list(trace.header)} do not match inputs {inputs}")
    for t, row in enumerate(trace.rows):
        for name, r in zip(trace.header, row):
            sort = spec.sort_of(name)
            if isinstance(r, Range) and sort is Sort.BOOL:
                raise TraceError(f"instant {t}: range for Bool stream {name}")
            if isinstance(r, Exact) and isinstance(r.value, bool) != (sort is Sort.BOOL):
                raise TraceError(f"instant {t}: cell for {name} does not fit {sort.value}")


def trace_from_columns(columns: Mapping[str, Sequence]) -> TraceFile:
    """Build a trace from per-stream value lists (``None`` is unknown)."""
    header = tuple(columns)
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise TraceError("columns differ in length")
    n = lengths.pop() if lengths else 0
    rows = tuple(tuple(as_reading(columns[h][t]) for h in header) for t in range(n))
    return TraceFile(header, rows)


# ---------------------------------------------------------------------------
# Uncertainty injection (random.Random, i.e. the Mersenne Twister, seeded per plan)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Perturb:
    fraction: float
    width: float
    seed: int = 0


@dataclass(frozen=True)
class Bursts:
    count: int
    min_len: int
    max_len: int
    seed: int = 0


@dataclass(frozen=True)
class Blank:
    """Replace a fraction of the cells by unknowns."""

    fraction: float
    seed: int = 0


InjectionPlan = Perturb | Bursts | Blank


def _real_cells(trace: TraceFile) -> list[tuple[int, int]]:
    cells = []
    skipped = False
    for t, row in enumerate(trace.rows):
        for j, r in enumerate(row):
            if isinstance(r, Exact) and not isinstance(r.value, bool):
                cells.append((t, j))
            elif isinstance(r, Exact):
                skipped = True
    if skipped:
        warnings.warn("perturbation skips Bool cells", stacklevel=3)
    return cells


def _with_cells(trace: TraceFile, changes: Mapping[tuple[int, int], Reading]) -> TraceFile:
    rows = tuple(
        tuple(changes.get((t, j), r) for j, r in enumerate(row)) for t, row in enumerate(trace.rows)
    )
    return TraceFile(trace.header, rows)


def burst_windows(length: int, plan: Bursts) -> list[tuple[int, int]]:
    """Half-open windows ``[start, end)`` chosen by a burst plan, in order of start."""
    rng = random.Random(plan.seed)
    out = []
    for _ in range(plan.count):
        n = rng.randint(plan.min_len, plan.max_len)
        start = rng.randrange(0, max(1, length - n + 1))
        out.append((start, min(length, start + n)))
    return sorted(out)


def inject(trace: TraceFile, plan: InjectionPlan) -> TraceFile:
    """Apply an uncertainty plan; the result depends only on the trace and the plan."""
    if isinstance(plan, Perturb):
        if not (0 <= plan.fraction <= 1 and 0 <= plan.width <= 1):
            raise ValueError("fraction and width must lie in [0, 1]")
        rng = random.Random(plan.seed)
        cells = _real_cells(trace)
        chosen = rng.sample(cells, math.floor(plan.fraction * len(cells)))
        y = Fraction(str(plan.width))
        changes = {}
        for t, j in chosen:
            v = trace.rows[t][j].value
            a, b = v * (1 - y), v * (1 + y)
            changes[(t, j)] = Range(min(a, b), max(a, b))
        return _with_cells(trace, changes)
    if isinstance(plan, Bursts):
        if plan.min_len < 0 or plan.min_len > plan.max_len:
            raise ValueError("bad burst lengths")
        changes = {}
        for start, end in burst_windows(len(trace), plan):
            for t in range(start, end):
                for j in range(len(trace.header)):
                    changes[(t, j)] = UNKNOWN
        return _with_cells(trace, changes)
    if isinstance(plan, Blank):
        rng = random.Random(plan.seed)
        cells = [(t, j) for t in range(len(trace)) for j in range(len(trace.header))]
        chosen = rng.sample(cells, math.floor(plan.fraction * len(cells)))
        return _with_cells(trace, {c: UNKNOWN for c in chosen})
    raise TypeError(f"not an injection plan: {plan!r}")


# ---------------------------------------------------------------------------
# Synthetic workloads
# ---------------------------------------------------------------------------


def load_walk(length: int, seed: int, start: Fraction = LOAD_START, lo=Fraction(0), hi=Fraction(10)) -> list[Fraction]:
    """Multiplicative random walk; consecutive values stay within a factor [0.9, 1.1] and inside [lo, hi]."""
    rng = random.Random(seed)
    out = []
    v = Fraction(start)
    for t in range(length):
        if t:
            step = Fraction(rng.randint(900, 1100), 1000)
            cand = Fraction(round(v * step * 100), 100)
            low = Fraction(math.ceil(v * Fraction(9, 10) * 100), 100)
            high = Fraction(math.floor(v * Fraction(11, 10) * 100), 100)
            v = min(max(cand, low, lo), high, hi)
        out.append(v)
    return out


def spike_series(length: int, seed: int, period: int = 25, width: int = 5, height: int = 10) -> list[Fraction]:
    """Noise in [0, 1] with triangular spikes every ``period`` instants."""
    rng = random.Random(seed)
    out = []
    for t in range(length):
        v = Fraction(rng.randint(0, 100), 100)
        phase = t % period
        if phase < width:
            v += Fraction(height * (width - abs(2 * phase - width + 1)), width)
        out.append(v)
    return out


def synthetic_trace(spec: Specification, length: int, seed: int = 0) -> TraceFile:
    """Generic trace: Real inputs follow a load walk, Bool inputs are fair coin flips."""
    rng = random.Random(seed)
    cols: dict[str, list] = {}
    for k, s in enumerate(x for x in spec.inputs if x.origin == "user"):
        if s.sort is Sort.BOOL:
            cols[s.name] = [rng.random() < 0.5 for _ in range(length)]
        else:
            cols[s.name] = load_walk(length, seed * 1000 + k)
    return trace_from_columns(cols)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _verdict_value(v: Verdict):
    if v.kind == "abs":
        return v.value if isinstance(v.value, bool) else v.value.lo
    return v.value


@dataclass
class CompareReport:
    counts: dict[str, dict[str, int]]
    disagreements: list[tuple[int, str, str, str]]
    max_measure: int
    seconds_per_event: float

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("stream,symbolic_determined,symbolic_open,interval_determined,interval_open\n")
        for name, c in self.counts.items():
            out.write(f"{name},{c['sym_det']},{c['sym_open']},{c['abs_det']},{c['abs_open']}\n")
        out.write(f"# max_measure,{self.max_measure}\n")
        out.write(f"# seconds_per_event,{self.seconds_per_event:.6f}\n")
        for t, name, a, b in self.disagreements:
            out.write(f"# disagreement,{t},{name},{a},{b}\n")
        return out.getvalue()


def compare(spec: Specification, trace: TraceFile, config: MonitorConfig | None = None) -> CompareReport:
    """Run the symbolic and the interval monitor on the same trace."""
    readings = trace.readings()
    start = time.perf_counter()
    sym = run(spec, readings, config)
    elapsed = time.perf_counter() - start
    abs_verdicts = run_abs(spec, readings)
    counts: dict[str, dict[str, int]] = {}
    for v in sym.verdicts:
        c = counts.setdefault(v.stream, {"sym_det": 0, "sym_open": 0, "abs_det": 0, "abs_open": 0})
        c["sym_det" if v.determined else "sym_open"] += 1
    for v in abs_verdicts:
        c = counts.setdefault(v.stream, {"sym_det": 0, "sym_open": 0, "abs_det": 0, "abs_open": 0})
        c["abs_det" if v.determined else "abs_open"] += 1
    table = sym.table()
    disagreements = []
    for a in abs_verdicts:
        s = table.get((a.t, a.stream))
        if s is not None and s.determined and a.determined and _verdict_value(s) != _verdict_value(a):
            disagreements.append((a.t, a.stream, s.payload, a.payload))
    n = max(1, len(readings))
    return CompareReport(counts, disagreements, max(sym.profile, default=0), elapsed / n)


@dataclass(frozen=True)
class BenchRow:
    length: int
    seconds_per_event: float
    max_measure: int


def bench(
    spec: Specification,
    lengths: Sequence[int],
    config: MonitorConfig | None = None,
    make_trace: Callable[[int], TraceFile] | None = None,
) -> list[BenchRow]:
    """Per-length time per event and peak measure; with pruning the peak must not depend on length."""
    config = config or MonitorConfig()
    if make_trace is None:
        def make_trace(n: int) -> TraceFile:
            return inject(synthetic_trace(spec, n), Blank(1.0))
    rows = []
    for n in lengths:
        readings = make_trace(n).readings()
        start = time.perf_counter()
        res = run(spec, readings, config)
        elapsed = time.perf_counter() - start
        rows.append(BenchRow(n, elapsed / max(1, n), max(res.profile, default=0)))
    if config.pruning and len({r.max_measure for r in rows}) > 1:
        raise InvariantViolation(
            "peak measure depends on trace length: " + ", ".join(f"{r.length}:{r.max_measure}" for r in rows)
        )
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    out = "length,seconds_per_event,max_measure\n"
    return out + "".join(f"{r.length},{r.seconds_per_event:.6f},{r.max_measure}\n" for r in rows)
