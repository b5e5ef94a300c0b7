"""Multi-run experiments: independent seeded runs per case, summary statistics,
average best-fitness curves and CSV import/export for comparison tables."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .driver import MastaConfig, RunResult, run
from .objective import make_benchmark

log = logging.getLogger(__name__)

STATS_HEADER = ["function", "dim", "algo", "runs", "best", "median", "worst", "mean", "stdev"]
CURVE_HEADER = ["function", "dim", "generation", "mean_best_f"]
DEFAULT_ALGO = "MASTA"


class StatsFormatError(ValueError):
    """A stats CSV did not match the expected schema."""


@dataclass(frozen=True)
class RunStats:
    best: float
    median: float
    worst: float
    mean: float
    stdev: float

    def as_tuple(self) -> tuple:
        return (self.best, self.median, self.worst, self.mean, self.stdev)


@dataclass(frozen=True)
class StatsRow:
    function: str
    dim: int
    algo: str
    runs: int
    stats: RunStats

    @property
    def case(self) -> tuple[str, int]:
        return (self.function, self.dim)


@dataclass
class CurveTable:
    """Mean best fitness across runs, one value per generation (1-based)."""

    function: str
    dim: int
    mean_best_f: np.ndarray

    @property
    def generations(self) -> np.ndarray:
        return np.arange(1, len(self.mean_best_f) + 1)


@dataclass
class CaseResult:
    stats: RunStats
    curve: CurveTable
    results: list = field(repr=False, default_factory=list)


@dataclass(frozen=True)
class ExperimentConfig:
    cases: Sequence[tuple[str, int]]
    runs: int = 30
    masta: MastaConfig = field(default_factory=MastaConfig)
    output_dir: Optional[Path] = None
    curve_sampling: int = 1
    workers: int = 1
    algo: str = DEFAULT_ALGO

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not self.cases:
            raise ValueError("at least one case is required")
        if self.curve_sampling < 1:
            raise ValueError("curve_sampling must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


def compute_stats(values: Iterable[float]) -> RunStats:
    """Best/median/worst/mean and sample standard deviation (divisor R-1)."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarize an empty list of results")
    stdev = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    mean = float(np.mean(v))
    best, worst = float(v.min()), float(v.max())
    # summation rounding can push the mean of near-identical values past an end
    mean = min(max(mean, best), worst)
    return RunStats(best=best, median=float(np.median(v)), worst=worst, mean=mean, stdev=stdev)


def average_curve(histories: Sequence[Sequence[float]]) -> np.ndarray:
    """Average per-generation best fitness; short runs hold their final value."""
    if len(histories) == 0:
        raise ValueError("need at least one history")
    length = max(len(h) for h in histories)
    padded = np.empty((len(histories), length))
    for i, h in enumerate(histories):
        h = np.asarray(h, dtype=float)
        if h.size == 0:
            raise ValueError("histories must be non-empty")
        padded[i, :h.size] = h
        padded[i, h.size:] = h[-1]
    return padded.mean(axis=0)


def _run_one(args) -> RunResult:
    config, name, dim = args
    return run(config, make_benchmark(name, dim))


def run_case(name: str, dim: int, runs: int, template: MastaConfig,
             workers: int = 1) -> list[RunResult]:
    """``runs`` independent runs; run ``r`` uses seed ``template.seed + r``."""
    jobs = [(replace(template, seed=template.seed + r), name, dim) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(job) for job in jobs]


def run_experiment(cfg: ExperimentConfig) -> dict[tuple[str, int], CaseResult]:
    """Run every case and, when ``output_dir`` is set, write its stats and curve CSVs."""
    for name, dim in cfg.cases:
        make_benchmark(name, dim)  # unknown case fails before any work is done
    out = None
    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
    results: dict[tuple[str, int], CaseResult] = {}
    for name, dim in cfg.cases:
        log.info("running %s %dD x %d", name, dim, cfg.runs)
        rr = run_case(name, dim, cfg.runs, cfg.masta, cfg.workers)
        stats = compute_stats(r.best_f for r in rr)
        curve = CurveTable(name, dim, average_curve([[h[1] for h in r.history] for r in rr]))
        results[(name, dim)] = CaseResult(stats, curve, rr)
    if out is not None:
        for (name, dim), res in results.items():
            stem = f"{name}_{dim}d"
            write_stats_csv(out / f"{stem}_stats.csv",
                            [StatsRow(name, dim, cfg.algo, cfg.runs, res.stats)])
            write_curve_csv(out / f"{stem}_curve.csv", res.curve, cfg.curve_sampling)
    return results


def format_value(v: float) -> str:
    """Full-precision scientific notation (round-trips exactly)."""
    return format(float(v), ".16e")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def stats_to_csv(rows: Iterable[StatsRow]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(STATS_HEADER)
    for r in rows:
        w.writerow([r.function, r.dim, r.algo, r.runs]
                   + [format_value(v) for v in r.stats.as_tuple()])
    return buf.getvalue()


def write_stats_csv(path, rows: Iterable[StatsRow]) -> None:
    Path(path).write_text(stats_to_csv(rows), encoding="utf-8", newline="")


def write_curve_csv(path, curve: CurveTable, stride: int = 1) -> None:
    gens = curve.generations
    keep = (gens % stride == 0) | (gens == gens[-1]) if len(gens) else np.zeros(0, bool)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(CURVE_HEADER)
    for g, v in zip(gens[keep], curve.mean_best_f[keep]):
        w.writerow([curve.function, curve.dim, int(g), format_value(v)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_stats_csv(path) -> list[StatsRow]:
    """Parse a stats CSV; errors name the file, line and column."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = list(csv.reader(io.StringIO(text)))
    if not lines:
        raise StatsFormatError(f"{path}: empty file, expected header {','.join(STATS_HEADER)}")
    header = [h.strip() for h in lines[0]]
    if header != STATS_HEADER:
        raise StatsFormatError(
            f"{path}:1: header {','.join(header)!r} does not match {','.join(STATS_HEADER)!r}")
    rows = []
    for lineno, fields in enumerate(lines[1:], start=2):
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(STATS_HEADER):
            raise StatsFormatError(
                f"{path}:{lineno}: expected {len(STATS_HEADER)} columns, got {len(fields)}")
        parsed = {}
        for col, raw in zip(STATS_HEADER, fields):
            raw = raw.strip()
            try:
                if col in ("function", "algo"):
                    if not raw:
                        raise ValueError
                    parsed[col] = raw
                elif col in ("dim", "runs"):
                    parsed[col] = int(raw)
                else:
                    parsed[col] = float(raw)
            except ValueError:
                raise StatsFormatError(
                    f"{path}:{lineno}: column {col!r}: cannot parse {raw!r}") from None
        rows.append(StatsRow(parsed["function"], parsed["dim"], parsed["algo"], parsed["runs"],
                             RunStats(parsed["best"], parsed["median"], parsed["worst"],
                                      parsed["mean"], parsed["stdev"])))
    if not rows:
        raise StatsFormatError(f"{path}: no data rows")
    return rows


def import_baseline(path) -> dict[tuple[str, int, str], RunStats]:
    """Stats of externally produced results, keyed by (function, dim, algo)."""
    out = {}
    for row in read_stats_csv(path):
        key = (row.function, row.dim, row.algo)
        if key in out:
            raise StatsFormatError(f"{path}: duplicate entry for {key}")
        out[key] = row.stats
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    return format(v, ".10g")


def merge_rows(groups: Sequence[tuple[str, Sequence[StatsRow]]]) -> list[StatsRow]:
    """Concatenate rows from several sources, rejecting a repeated (case, algo)."""
    seen: dict[tuple[str, int, str], str] = {}
    merged = []
    for source, rows in groups:
        for r in rows:
            key = (r.function, r.dim, r.algo)
            if key in seen:
                raise StatsFormatError(
                    f"duplicate case {r.function} {r.dim}D ({r.algo}) in {seen[key]} and {source}")
            seen[key] = source
            merged.append(r)
    return merged


def format_report(rows: Sequence[StatsRow], primary: str = DEFAULT_ALGO) -> str:
    """Side-by-side table: one block per case, one column per algorithm.

    The ``primary`` algorithm comes first; others follow in order of appearance.
    """
    algos: list[str] = []
    for r in rows:
        if r.algo not in algos:
            algos.append(r.algo)
    algos.sort(key=lambda a: a != primary)
    cases: list[tuple[str, int]] = []
    table: dict[tuple[str, int, str], RunStats] = {}
    for r in rows:
        if r.case not in cases:
            cases.append(r.case)
        table[(r.function, r.dim, r.algo)] = r.stats
    labels = ("best", "median", "worst", "mean", "st.dev.")
    head = ["Fcn", "D", "Statistic"] + algos
    body = []
    for fn, dim in cases:
        for k, label in enumerate(labels):
            cells = [fn if k == 0 else "", str(dim) if k == 0 else "", label]
            for a in algos:
                s = table.get((fn, dim, a))
                cells.append("-" if s is None else _fmt(s.as_tuple()[k]))
            body.append(cells)
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(head, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def results_to_rows(results: dict, runs: int, algo: str = DEFAULT_ALGO) -> list[StatsRow]:
    return [StatsRow(fn, dim, algo, runs, res.stats) for (fn, dim), res in results.items()]

