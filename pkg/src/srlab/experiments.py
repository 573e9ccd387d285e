"""Monte Carlo experiment harness with CSV persistence.

Trials are paired: each (n, trial) input vector is drawn once and shared by
every rounding mode, so mode comparisons see identical data.  Each trial
owns its own random stream (stream_id = trial index) and results are
aggregated in trial order, which makes parallel and serial execution
byte-identical.
"""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds
from .dyadic import exact_dot, exact_sum
from .kernels import gd_rosenbrock, inner_product, recursive_sum
from .rounding import FpFormat, round_nearest
from .sr import (
    IDEAL,
    RngStream,
    SrConfig,
    make_stream,
    rn_config,
    sr_config,
    sr_sample,
)

_INV_2_53 = 2.0 ** -53

DEFAULT_STARTS = ((0.0, 0.0), (0.5, 0.5))


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment run."""

    kind: str  # sum | dot | rosenbrock | bounds-table
    p: int = 11
    r_list: tuple = (3, 6, 7, 8, 10)
    n_grid: tuple = (10, 100, 1000, 6000)
    iters: int = 5000
    step: float = 1e-3
    starts: tuple = DEFAULT_STARTS
    trials: int = 500
    seed: int = 1
    lam: float = 0.1
    input_file: str | None = None  # fixed input vector(s); default draws uniform(0,1)
    out_dir: str = "."
    threads: int = 1

    def __post_init__(self):
        if self.kind not in ("sum", "dot", "rosenbrock", "bounds-table"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if list(self.n_grid) != sorted(set(self.n_grid)):
            raise ValueError("n_grid must be strictly increasing")
        for r in self.r_list:
            if r != IDEAL and self.p + r > 53:
                raise ValueError(f"p + r must not exceed 53 (p={self.p}, r={r})")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class TrialResult:
    x: int          # n (problem size) or k (iteration index)
    mode: str
    value: float    # relative error, or loss for trajectories
    trial: int


@dataclass(frozen=True)
class SummaryRow:
    x: int
    mode: str
    value: float
    stderr: float


def derive_trial_stream(seed: int, trial_index: int) -> RngStream:
    """One independent stream per trial; stream_id is the trial index."""
    return make_stream(seed, trial_index)


def _draw_uniform_p(rng: RngStream, n: int, fmt: FpFormat) -> list[float]:
    words = rng.bits_array(53, n)
    return [round_nearest(float(w) * _INV_2_53, fmt) for w in words]


def _load_vector_file(path: str, fmt: FpFormat, columns: int) -> list[list[float]]:
    cols: list[list[float]] = [[] for _ in range(columns)]
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            if len(parts) != columns:
                raise ValueError(f"expected {columns} column(s) in {path!r}")
            for c, token in enumerate(parts):
                cols[c].append(round_nearest(float(token), fmt))
    if not cols[0]:
        raise ValueError(f"no data in {path!r}")
    return cols


def _sum_modes(spec: ExperimentSpec) -> list[SrConfig]:
    return [rn_config(spec.p)] + [sr_config(spec.p, r) for r in spec.r_list]


def _run_trials(spec: ExperimentSpec, worker) -> list[TrialResult]:
    indices = range(spec.trials)
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            chunks = list(pool.map(worker, indices))
    else:
        chunks = [worker(i) for i in indices]
    return [row for chunk in chunks for row in chunk]


def run_sum_trials(spec: ExperimentSpec) -> list[TrialResult]:
    """Per-trial relative errors of recursive summation for every mode."""
    modes = _sum_modes(spec)
    fmt = FpFormat(spec.p)
    fixed = None
    if spec.input_file is not None:
        fixed = _load_vector_file(spec.input_file, fmt, 1)[0]
    grid = [len(fixed)] if fixed is not None else list(spec.n_grid)

    def worker(trial: int) -> list[TrialResult]:
        rng = derive_trial_stream(spec.seed, trial)
        out = []
        for n in grid:
            vec = fixed if fixed is not None else _draw_uniform_p(rng, n, fmt)
            exact = exact_sum(vec)
            for cfg in modes:
                res = recursive_sum(vec, cfg, rng, exact=exact, validate=False)
                out.append(TrialResult(n, cfg.label, res.rel_error, trial))
        return out

    return _run_trials(spec, worker)


def run_dot_trials(spec: ExperimentSpec) -> list[TrialResult]:
    """Per-trial relative errors of the inner product for every mode."""
    modes = _sum_modes(spec)
    fmt = FpFormat(spec.p)
    fixed = None
    if spec.input_file is not None:
        fixed = _load_vector_file(spec.input_file, fmt, 2)
    grid = [len(fixed[0])] if fixed is not None else list(spec.n_grid)

    def worker(trial: int) -> list[TrialResult]:
        rng = derive_trial_stream(spec.seed, trial)
        out = []
        for n in grid:
            if fixed is not None:
                a, b = fixed
            else:
                a = _draw_uniform_p(rng, n, fmt)
                b = _draw_uniform_p(rng, n, fmt)
            exact = exact_dot(a, b)
            for cfg in modes:
                res = inner_product(a, b, cfg, rng, exact=exact, validate=False)
                out.append(TrialResult(n, cfg.label, res.rel_error, trial))
        return out

    return _run_trials(spec, worker)


def aggregate_trials(trials: list[TrialResult]) -> list[SummaryRow]:
    """Mean and standard error per (x, mode), in first-seen order."""
    groups: dict[tuple[int, str], list[float]] = {}
    order: list[tuple[int, str]] = []
    for t in trials:
        key = (t.x, t.mode)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(t.value)
    rows = []
    for key in order:
        vals = np.asarray(groups[key])
        stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        rows.append(SummaryRow(key[0], key[1], float(vals.mean()), stderr))
    return rows


def run_sum_experiment(spec: ExperimentSpec) -> list[SummaryRow]:
    """Mean relative error per (n, mode) for recursive summation."""
    return aggregate_trials(run_sum_trials(spec))


def run_dot_experiment(spec: ExperimentSpec) -> list[SummaryRow]:
    """Mean relative error per (n, mode) for the inner product."""
    return aggregate_trials(run_dot_trials(spec))


def run_bounds_table(spec: ExperimentSpec) -> list[SummaryRow]:
    """Deterministic and probabilistic bound values on the n grid (kappa = 1)."""
    rows = []
    for n in spec.n_grid:
        rows.append(SummaryRow(n, "det", bounds.det_bound_sum(n, spec.p), 0.0))
        for r in spec.r_list:
            q = bounds.BoundQuery(n=n, p=spec.p, r=r, lam=spec.lam)
            tag = "ideal" if r == IDEAL else str(r)
            rows.append(SummaryRow(n, f"ah_sr{tag}", bounds.ah_bound_sum(q), 0.0))
            rows.append(SummaryRow(n, f"bc_sr{tag}", bounds.bc_bound_sum(q), 0.0))
    return rows


def run_rosenbrock(spec: ExperimentSpec, start: tuple[float, float]) -> list[SummaryRow]:
    """Loss-per-iteration table: binary64 and precision-p RN baselines once,
    stochastic modes averaged over spec.trials runs.

    Iterations past a diverged trajectory are reported as NaN.
    """
    rows: list[SummaryRow] = []
    npoints = spec.iters + 1

    def losses_of(cfg: SrConfig, trial: int) -> np.ndarray:
        rng = derive_trial_stream(spec.seed, trial)
        traj = gd_rosenbrock(start, spec.step, spec.iters, cfg, rng)
        out = np.full(npoints, math.nan)
        out[: len(traj.loss_series)] = traj.loss_series
        return out

    for cfg in (rn_config(53), rn_config(spec.p)):
        series = losses_of(cfg, 0)
        rows.extend(
            SummaryRow(k, cfg.label, float(series[k]), 0.0) for k in range(npoints)
        )

    sr_modes = [sr_config(spec.p, r) for r in spec.r_list]
    for cfg in sr_modes:

        def worker(trial: int, cfg=cfg) -> list[np.ndarray]:
            return [losses_of(cfg, trial)]

        if spec.threads > 1:
            with ThreadPoolExecutor(max_workers=spec.threads) as pool:
                series = [s for chunk in pool.map(worker, range(spec.trials)) for s in chunk]
        else:
            series = [worker(i)[0] for i in range(spec.trials)]
        stacked = np.vstack(series)
        mean = stacked.mean(axis=0)
        if spec.trials > 1:
            se = stacked.std(axis=0, ddof=1) / math.sqrt(spec.trials)
        else:
            se = np.zeros(npoints)
        rows.extend(
            SummaryRow(k, cfg.label, float(mean[k]), float(se[k])) for k in range(npoints)
        )
    return rows


def estimate_bias(x: float, cfg: SrConfig, trials: int, seed: int) -> tuple[float, float]:
    """Sample mean and standard error of repeated stochastic roundings of x."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    samples = sr_sample(x, cfg, make_stream(seed, 0), trials)
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(trials))
    return mean, stderr


def estimate_coverage(errors, bound: float) -> float:
    """Fraction of |error| values at or below the bound."""
    arr = np.abs(np.asarray(errors, dtype=float))
    if arr.size == 0:
        raise ValueError("empty error vector")
    return float(np.mean(arr <= bound))


def _r_tag(r_list) -> str:
    return "-".join("ideal" if r == IDEAL else str(r) for r in r_list)


def csv_name(spec: ExperimentSpec, start: tuple[float, float] | None = None) -> str:
    name = f"{spec.kind}_p{spec.p}_r{_r_tag(spec.r_list)}"
    if start is not None:
        name += f"_start{start[0]:g}-{start[1]:g}"
    return name + ".csv"


def write_rows(path: str | Path, rows: list[SummaryRow]) -> Path:
    """Write summary rows as CSV (17 significant digits), atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("n_or_k,mode,value,stderr\n")
            for row in rows:
                fh.write(f"{row.x},{row.mode},{row.value:.17g},{row.stderr:.17g}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
