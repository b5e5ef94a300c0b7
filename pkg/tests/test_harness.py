import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from masta.driver import MastaConfig
from masta.harness import (CURVE_HEADER, STATS_HEADER, ExperimentConfig, RunStats,
                           StatsFormatError, StatsRow, average_curve, compute_stats,
                           format_report, import_baseline, merge_rows, read_stats_csv,
                           run_experiment, write_stats_csv)


def test_compute_stats_examples():
    assert compute_stats([1, 2, 3]) == RunStats(1, 2, 3, 2, 1)
    assert compute_stats([5]) == RunStats(5, 5, 5, 5, 0)
    assert compute_stats([0, 0, 0, 0]) == RunStats(0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        compute_stats([])


def _brute(values):
    s = sorted(values)
    m = len(s)
    median = s[m // 2] if m % 2 else (s[m // 2 - 1] + s[m // 2]) / 2
    mean = sum(values) / m
    var = sum((v - mean) ** 2 for v in values) / (m - 1) if m > 1 else 0.0
    return s[0], median, s[-1], mean, var ** 0.5


def test_compute_stats_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        v = list(rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), size=rng.integers(1, 40)))
        got = compute_stats(v).as_tuple()
        np.testing.assert_allclose(got, _brute(v), rtol=1e-12, atol=1e-12)


@settings(max_examples=200)
@given(st.lists(st.floats(-1e12, 1e12), min_size=1, max_size=50))
def test_stats_ordering(values):
    s = compute_stats(values)
    assert s.best <= s.median <= s.worst
    assert s.best <= s.mean <= s.worst
    assert s.stdev >= 0
    if len(values) > 1:
        assert s.stdev == pytest.approx(statistics.stdev(values), rel=1e-9, abs=1e-3)


def test_average_curve_padding():
    a = [5.0, 4.0, 3.0, 2.0, 1.0]
    b = [10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
    c = average_curve([a, b])
    assert len(c) == 10
    np.testing.assert_array_equal(c[5:], (1.0 + np.array(b[5:])) / 2)
    np.testing.assert_array_equal(average_curve([a, a]), a)
    assert np.all(np.diff(c) <= 0)


def _row(fn="spherical", dim=2, algo="MASTA", values=(0.1, 0.2, 0.3, 0.2, 0.1)):
    return StatsRow(fn, dim, algo, 30, RunStats(*values))


def test_stats_csv_round_trip(tmp_path):
    rows = [_row(values=(1 / 3, np.pi, 1e300, -8.881784197001252e-16, 0.0)),
            _row("rastrigin", 10, "CLPSO", (5e-324, 1.0, 2.0, 1.5, 0.7071067811865476))]
    path = tmp_path / "s.csv"
    write_stats_csv(path, rows)
    assert path.read_bytes().split(b"\n")[0] == ",".join(STATS_HEADER).encode()
    assert b"\r" not in path.read_bytes()
    assert read_stats_csv(path) == rows


def test_import_baseline_verbatim(tmp_path):
    path = tmp_path / "clpso.csv"
    path.write_text(",".join(STATS_HEADER) + "\n"
                    "spherical,2,CLPSO,30,0.4381,12.1488,402.9182,56.1705,92.0918\n")
    base = import_baseline(path)
    assert base[("spherical", 2, "CLPSO")].as_tuple() == (0.4381, 12.1488, 402.9182, 56.1705,
                                                         92.0918)
    report = format_report(read_stats_csv(path))
    for token in ("0.4381", "12.1488", "402.9182", "56.1705", "92.0918"):
        assert token in report


@pytest.mark.parametrize("text,where", [
    ("", "empty"),
    (",".join(STATS_HEADER) + "\n", "no data"),
    ("function,dim\nx,2\n", ":1"),
    (",".join(STATS_HEADER) + "\nspherical,2,MASTA,30,0,0,0,0\n", ":2"),
    (",".join(STATS_HEADER) + "\nspherical,2,MASTA,30,0,zero,0,0,0\n", "median"),
    (",".join(STATS_HEADER) + "\nspherical,2,MASTA,30,0,0,0,0,0\nx,two,MASTA,1,0,0,0,0,0\n",
     ":3: column 'dim'"),
])
def test_read_errors_name_location(tmp_path, text, where):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(StatsFormatError, match=where):
        read_stats_csv(path)


def test_merge_rejects_duplicates():
    with pytest.raises(StatsFormatError, match="spherical 2D"):
        merge_rows([("a.csv", [_row()]), ("b.csv", [_row()])])


def test_report_orders_primary_first():
    rows = [_row(algo="SaDE"), _row(algo="MASTA"), _row(algo="CLPSO")]
    head = format_report(rows).splitlines()[0].split()
    assert head == ["Fcn", "D", "Statistic", "MASTA", "SaDE", "CLPSO"]


def test_run_experiment_outputs(tmp_path):
    cfg = ExperimentConfig(cases=[("rastrigin", 2), ("spherical", 3)], runs=3,
                           masta=MastaConfig(max_evals=20_000), output_dir=tmp_path,
                           curve_sampling=4)
    res = run_experiment(cfg)
    assert set(res) == {("rastrigin", 2), ("spherical", 3)}
    for (fn, dim), case in res.items():
        assert len(case.results) == 3
        assert [r.best_f for r in case.results] != []
        rows = read_stats_csv(tmp_path / f"{fn}_{dim}d_stats.csv")
        assert rows[0].stats == case.stats and rows[0].runs == 3
        curve = (tmp_path / f"{fn}_{dim}d_curve.csv").read_text().splitlines()
        assert curve[0] == ",".join(CURVE_HEADER)
        vals = [float(line.split(",")[3]) for line in curve[1:]]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        gens = [int(line.split(",")[2]) for line in curve[1:]]
        assert gens[-1] == len(case.curve.mean_best_f)
        assert all(g % 4 == 0 for g in gens[:-1])


def test_run_experiment_single_run_and_seeds(tmp_path):
    cfg = ExperimentConfig(cases=[("ackley", 2)], runs=1, masta=MastaConfig(seed=10))
    s = run_experiment(cfg)[("ackley", 2)]
    assert s.stats.best == s.stats.median == s.stats.worst == s.stats.mean
    assert s.stats.stdev == 0
    three = run_experiment(ExperimentConfig(cases=[("ackley", 2)], runs=3,
                                            masta=MastaConfig(seed=8)))[("ackley", 2)]
    # run r uses seed 8 + r, so run 2 equals the single run above
    assert three.results[2].best_f == s.results[0].best_f
    assert np.array_equal(three.results[2].best_x, s.results[0].best_x)


def test_run_experiment_errors(tmp_path):
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(cases=[("nosuch", 2)], runs=1))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_experiment(ExperimentConfig(cases=[("spherical", 2)], runs=1,
                                        masta=MastaConfig(max_generations=2),
                                        output_dir=blocker / "sub"))
    with pytest.raises(ValueError):
        ExperimentConfig(cases=[], runs=1)
    with pytest.raises(ValueError):
        ExperimentConfig(cases=[("spherical", 2)], runs=0)


def test_parallel_matches_serial(tmp_path):
    cases = [("griewank", 2)]
    m = MastaConfig(max_evals=10_000)
    serial = run_experiment(ExperimentConfig(cases, runs=4, masta=m, output_dir=tmp_path / "a"))
    par = run_experiment(ExperimentConfig(cases, runs=4, masta=m, output_dir=tmp_path / "b",
                                          workers=2))
    assert serial[cases[0]].stats == par[cases[0]].stats
    for name in ("griewank_2d_stats.csv", "griewank_2d_curve.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
