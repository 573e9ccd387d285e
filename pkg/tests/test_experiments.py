import math
from dataclasses import replace

import numpy as np
import pytest

from srlab.bounds import unit_roundoff
from srlab.experiments import (
    ExperimentSpec,
    SummaryRow,
    aggregate_trials,
    csv_name,
    derive_trial_stream,
    estimate_bias,
    estimate_coverage,
    run_bounds_table,
    run_dot_experiment,
    run_dot_trials,
    run_rosenbrock,
    run_sum_experiment,
    run_sum_trials,
    write_rows,
)
from srlab.sr import IDEAL

TINY_SUM = ExperimentSpec(
    kind="sum", p=11, r_list=(3, 7), n_grid=(10, 30), trials=6, seed=42
)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(kind="nope")
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sum", n_grid=(100, 10))
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sum", p=11, r_list=(50,))
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sum", trials=0)


def test_sum_experiment_structure():
    rows = run_sum_experiment(TINY_SUM)
    modes = {"rn", "sr3", "sr7"}
    assert len(rows) == len(TINY_SUM.n_grid) * len(modes)
    assert {r.mode for r in rows} == modes
    assert all(r.value >= 0.0 and math.isfinite(r.value) for r in rows)


def test_sum_experiment_deterministic():
    a = run_sum_experiment(TINY_SUM)
    b = run_sum_experiment(TINY_SUM)
    assert a == b


def test_single_trial_rn_column_deterministic():
    spec = replace(TINY_SUM, trials=1, r_list=(3,))
    rows = run_sum_experiment(spec)
    assert all(r.stderr == 0.0 for r in rows)


def test_parallel_and_serial_runs_are_byte_identical(tmp_path):
    serial = replace(TINY_SUM, threads=1)
    parallel = replace(TINY_SUM, threads=4)
    p1 = write_rows(tmp_path / "serial.csv", run_sum_experiment(serial))
    p2 = write_rows(tmp_path / "parallel.csv", run_sum_experiment(parallel))
    assert p1.read_bytes() == p2.read_bytes()


def test_trial_results_paired_across_modes():
    trials = run_sum_trials(replace(TINY_SUM, trials=3))
    keys = {(t.x, t.mode, t.trial) for t in trials}
    assert len(keys) == len(trials)
    for t in trials:
        assert t.trial in (0, 1, 2)


def test_dot_experiment_structure():
    spec = ExperimentSpec(kind="dot", p=11, r_list=(7,), n_grid=(5, 20), trials=4, seed=3)
    rows = run_dot_experiment(spec)
    assert len(rows) == 2 * 2  # two n values, modes rn and sr7


def test_derive_trial_stream_contract():
    a = derive_trial_stream(9, 0)
    b = derive_trial_stream(9, 1)
    assert a.next_bits(64) != b.next_bits(64)
    c = derive_trial_stream(9, 0)
    c2 = derive_trial_stream(9, 0)
    assert [c.next_bits(16) for _ in range(32)] == [c2.next_bits(16) for _ in range(32)]


def test_estimate_bias_representable_value():
    mean, stderr = estimate_bias(2.0, _cfg(11, 3), trials=100, seed=0)
    assert mean == 2.0
    assert stderr == 0.0


def _cfg(p, r):
    from srlab.sr import sr_config

    return sr_config(p, r)


def test_estimate_bias_converges_to_truncation():
    # with one random bit the long-run mean is the 3-bit truncation 1.25
    mean, stderr = estimate_bias(1.3125, _cfg(2, 1), trials=40000, seed=11)
    assert abs(mean - 1.25) <= 4 * stderr
    assert abs(mean - 1.3125) > 10 * stderr  # visibly biased away from x
    # with three random bits the operator is unbiased at this x
    mean, stderr = estimate_bias(1.3125, _cfg(2, 3), trials=40000, seed=12)
    assert abs(mean - 1.3125) <= 4 * stderr


def test_estimate_coverage():
    assert estimate_coverage([0.0, 0.0], 0.5) == 1.0
    assert estimate_coverage([0.1, 0.9], 0.5) == 0.5
    assert estimate_coverage([-0.2, 0.2], 0.3) == 1.0
    with pytest.raises(ValueError):
        estimate_coverage([], 1.0)


def test_bounds_table_rows():
    spec = ExperimentSpec(
        kind="bounds-table", p=11, r_list=(3, 7, IDEAL), n_grid=(2, 100, 1000), lam=0.1
    )
    rows = run_bounds_table(spec)
    by = {(r.x, r.mode): r.value for r in rows}
    assert len(rows) == 3 * (1 + 2 * 3)
    # n = 2 row: deterministic bound is u_p, bias tail enters the bc column
    assert by[(2, "det")] == pytest.approx(unit_roundoff(11), rel=1e-12)
    # probabilistic below deterministic for n >= 100 at sensible r
    for n in (100, 1000):
        assert by[(n, "bc_sr7")] < by[(n, "det")]
        assert by[(n, "ah_srideal")] < by[(n, "det")]
    # bc columns non-increasing in r at fixed n
    for n in (2, 100, 1000):
        assert by[(n, "bc_sr3")] >= by[(n, "bc_sr7")] >= by[(n, "bc_srideal")]


def test_rosenbrock_rows_and_baseline():
    spec = ExperimentSpec(
        kind="rosenbrock", p=11, r_list=(8,), iters=20, trials=3, seed=1
    )
    rows = run_rosenbrock(spec, start=(1.0, 1.0))
    modes = {"fp64", "rn", "sr8"}
    assert {r.mode for r in rows} == modes
    assert len(rows) == 21 * len(modes)
    # starting at the minimum nothing moves in any mode
    assert all(r.value == 0.0 for r in rows)


def test_rosenbrock_progress_from_origin():
    spec = ExperimentSpec(
        kind="rosenbrock", p=11, r_list=(8,), iters=300, trials=4, seed=1
    )
    rows = run_rosenbrock(spec, start=(0.0, 0.0))
    final = {r.mode: r.value for r in rows if r.x == 300}
    first = {r.mode: r.value for r in rows if r.x == 0}
    assert final["fp64"] < first["fp64"]
    assert final["sr8"] < first["sr8"]


def test_csv_format(tmp_path):
    rows = [SummaryRow(10, "rn", 1.0 / 3.0, 0.25), SummaryRow(20, "sr3", 2.0, 0.0)]
    path = write_rows(tmp_path / "out.csv", rows)
    text = path.read_text().splitlines()
    assert text[0] == "n_or_k,mode,value,stderr"
    assert text[1] == "10,rn,0.33333333333333331,0.25"
    assert text[2] == "20,sr3,2,0"
    assert float(text[1].split(",")[2]) == 1.0 / 3.0  # 17 digits round-trip


def test_csv_name():
    assert csv_name(TINY_SUM) == "sum_p11_r3-7.csv"
    spec = ExperimentSpec(kind="rosenbrock", p=11, r_list=(3, IDEAL))
    assert csv_name(spec, (0.5, 0.5)) == "rosenbrock_p11_r3-ideal_start0.5-0.5.csv"


def test_input_file_fixes_vector(tmp_path):
    data = tmp_path / "vec.txt"
    data.write_text("# fixed input\n0.5\n0.25\n1.0\n")
    spec = ExperimentSpec(
        kind="sum", p=11, r_list=(3,), trials=2, seed=5, input_file=str(data)
    )
    trials = run_sum_trials(spec)
    assert {t.x for t in trials} == {3}
    rows = aggregate_trials(trials)
    assert all(r.value == 0.0 for r in rows)  # sums of these are exact at p=11


def test_input_file_dot(tmp_path):
    data = tmp_path / "ab.txt"
    data.write_text("1.0, 2.0\n0.5, 0.5\n")
    spec = ExperimentSpec(
        kind="dot", p=11, r_list=(3,), trials=2, seed=5, input_file=str(data)
    )
    trials = run_dot_trials(spec)
    assert {t.x for t in trials} == {2}
