"""Command-line frontend: rounding demos, experiment runners, bound tables.

Flags override config-file values (``key = value`` lines, ``#`` comments);
environment variables are never consulted.  Exit codes: 0 success, 1
domain/range/runtime errors, 2 flag or config errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import bounds, experiments
from .dyadic import dy_from_float, dy_q
from .rounding import FpFormat, SubstrateRangeError, round_down, round_up, truncate, ulp
from .sr import IDEAL, make_stream, sr_config, sr_sample


def _parse_r_value(token: str):
    token = token.strip().lower()
    if token == "ideal":
        return IDEAL
    return int(token)


def _parse_r_list(text: str) -> tuple:
    return tuple(_parse_r_value(tok) for tok in text.split(",") if tok.strip())


def _parse_int_list(text: str) -> tuple:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_point(text: str) -> tuple:
    parts = [tok for tok in text.split(",") if tok.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected 'x,y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _read_config(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


# per-command option schema: dest -> (converter, default)
_SCHEMAS = {
    "round": {
        "value": (float, None),
        "p": (int, 11),
        "r": (_parse_r_value, IDEAL),
        "samples": (int, 0),
        "seed": (int, 0),
    },
    "sum": {
        "p": (int, 11),
        "r": (_parse_r_list, (3, 6, 7, 8, 10)),
        "n_grid": (_parse_int_list, None),
        "n_max": (int, None),
        "trials": (int, 500),
        "seed": (int, 1),
        "threads": (int, 1),
        "out_dir": (str, "."),
        "input_file": (str, None),
    },
    "rosenbrock": {
        "p": (int, 11),
        "r": (_parse_r_list, (3, 6, 7, 8, 10)),
        "iters": (int, 5000),
        "t": (float, 1e-3),
        "start": (_parse_point, None),
        "trials": (int, 500),
        "seed": (int, 1),
        "threads": (int, 1),
        "out_dir": (str, "."),
    },
    "bounds-table": {
        "p": (int, 11),
        "r": (_parse_r_list, (3, 6, 7, 8, 10)),
        "lam": (float, 0.1),
        "n_grid": (_parse_int_list, None),
        "n_max": (int, 6000),
        "out_dir": (str, "."),
    },
    "suggest-r": {
        "n": (int, None),
    },
}
_SCHEMAS["dot"] = dict(_SCHEMAS["sum"])


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Merge CLI flags over config-file values over built-in defaults."""
    schema = _SCHEMAS[args.command]
    config = {}
    if getattr(args, "config", None):
        try:
            config = _read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config file: {exc}")
        except ValueError as exc:
            parser.error(str(exc))
        unknown = set(config) - set(schema)
        if unknown:
            parser.error(f"unknown config key(s): {', '.join(sorted(unknown))}")
    resolved = {}
    for key, (conv, default) in schema.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in config:
            try:
                resolved[key] = conv(config[key])
            except ValueError as exc:
                parser.error(f"config key {key}: {exc}")
        else:
            resolved[key] = default
    return resolved


def _check_p_r(parser, p, r_values) -> None:
    if not 2 <= p <= 53:
        parser.error(f"p must be in [2, 53], got {p}")
    for r in r_values:
        if r != IDEAL and (r < 1 or p + r > 53):
            parser.error(f"r must be in [1, {53 - p}] or 'ideal', got {r}")


def _n_grid(opts) -> tuple:
    if opts.get("n_grid"):
        return opts["n_grid"]
    if opts.get("n_max"):
        grid, n = [], 10
        while n < opts["n_max"]:
            grid.append(n)
            n *= 2
        grid.append(opts["n_max"])
        return tuple(grid)
    return (10, 100, 1000, 6000)


def _cmd_round(opts, parser) -> int:
    if opts["value"] is None:
        parser.error("--value is required")
    _check_p_r(parser, opts["p"], [opts["r"]])
    x, p, r = opts["value"], opts["p"], opts["r"]
    cfg = sr_config(p, r)
    fmt = FpFormat(p)
    q = dy_q(dy_from_float(x), p, cfg.r_bits)
    print(f"value     = {x:.17g}")
    print(f"floor     = {round_down(x, fmt):.17g}")
    print(f"ceil      = {round_up(x, fmt):.17g}")
    if x != 0.0:
        print(f"ulp       = {ulp(x, fmt):.17g}")
    print(f"truncated = {truncate(x, p + cfg.r_bits):.17g}  (width {p + cfg.r_bits})")
    print(f"q_r       = {q} (= {float(q):.17g})")
    if opts["samples"] > 0:
        rng = make_stream(opts["seed"], 0)
        samples = sr_sample(x, cfg, rng, opts["samples"])
        lo, up = round_down(x, fmt), round_up(x, fmt)
        freq = float((samples == up).mean()) if lo != up else 0.0
        print(f"empirical up-frequency over {opts['samples']} samples: {freq:.6f}")
    return 0


def _cmd_table(kind: str, opts, parser) -> int:
    _check_p_r(parser, opts["p"], opts["r"])
    if opts["trials"] < 1:
        parser.error("trials must be >= 1")
    spec = experiments.ExperimentSpec(
        kind=kind,
        p=opts["p"],
        r_list=opts["r"],
        n_grid=_n_grid(opts),
        trials=opts["trials"],
        seed=opts["seed"],
        threads=opts["threads"],
        input_file=opts["input_file"],
        out_dir=opts["out_dir"],
    )
    t0 = time.perf_counter()
    runner = experiments.run_sum_experiment if kind == "sum" else experiments.run_dot_experiment
    rows = runner(spec)
    elapsed = time.perf_counter() - t0
    path = Path(spec.out_dir) / experiments.csv_name(spec)
    experiments.write_rows(path, rows)
    print(f"wrote {path} ({elapsed:.2f}s)")
    return 0


def _cmd_rosenbrock(opts, parser) -> int:
    _check_p_r(parser, opts["p"], opts["r"])
    if opts["iters"] < 0:
        parser.error("iters must be >= 0")
    if opts["t"] <= 0:
        parser.error("t must be positive")
    starts = (opts["start"],) if opts["start"] else experiments.DEFAULT_STARTS
    spec = experiments.ExperimentSpec(
        kind="rosenbrock",
        p=opts["p"],
        r_list=opts["r"],
        iters=opts["iters"],
        step=opts["t"],
        starts=starts,
        trials=opts["trials"],
        seed=opts["seed"],
        threads=opts["threads"],
        out_dir=opts["out_dir"],
    )
    for start in starts:
        t0 = time.perf_counter()
        rows = experiments.run_rosenbrock(spec, start)
        elapsed = time.perf_counter() - t0
        path = Path(spec.out_dir) / experiments.csv_name(spec, start)
        experiments.write_rows(path, rows)
        print(f"wrote {path} ({elapsed:.2f}s)")
    return 0


def _cmd_bounds_table(opts, parser) -> int:
    _check_p_r(parser, opts["p"], opts["r"])
    if not 0.0 < opts["lam"] < 1.0:
        parser.error("lambda must be in (0, 1)")
    spec = experiments.ExperimentSpec(
        kind="bounds-table",
        p=opts["p"],
        r_list=opts["r"],
        n_grid=_n_grid(opts),
        lam=opts["lam"],
        out_dir=opts["out_dir"],
    )
    rows = experiments.run_bounds_table(spec)
    path = Path(spec.out_dir) / experiments.csv_name(spec)
    experiments.write_rows(path, rows)
    print(f"wrote {path}")
    return 0


def _cmd_suggest_r(opts, parser) -> int:
    if opts["n"] is None:
        parser.error("--n is required")
    if opts["n"] < 2:
        parser.error("n must be >= 2")
    print(bounds.rule_of_thumb_r(opts["n"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srlab",
        description="Limited-precision stochastic rounding laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="key = value config file; flags win")
        return sp

    sp = add("round", "inspect the rounding of a single value")
    sp.add_argument("--value", type=float, help="value to round")
    sp.add_argument("--p", type=int, help="target precision (significand bits)")
    sp.add_argument("--r", type=_parse_r_value, help="random bits, or 'ideal'")
    sp.add_argument("--samples", type=int, help="Monte Carlo samples to draw")
    sp.add_argument("--seed", type=int, help="random seed")

    for name, help_text in (
        ("sum", "recursive-summation error experiment"),
        ("dot", "inner-product error experiment"),
    ):
        sp = add(name, help_text)
        sp.add_argument("--p", type=int)
        sp.add_argument("--r", type=_parse_r_list, help="comma list, e.g. 3,7,ideal")
        sp.add_argument("--n-grid", type=_parse_int_list, dest="n_grid")
        sp.add_argument("--n-max", type=int, dest="n_max")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--input-file", dest="input_file")

    sp = add("rosenbrock", "gradient-descent convergence experiment")
    sp.add_argument("--p", type=int)
    sp.add_argument("--r", type=_parse_r_list)
    sp.add_argument("--iters", type=int)
    sp.add_argument("--t", type=float, help="learning rate")
    sp.add_argument("--start", type=_parse_point, help="start point 'x,y'")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--out-dir", dest="out_dir")

    sp = add("bounds-table", "evaluate closed-form error bounds on an n grid")
    sp.add_argument("--p", type=int)
    sp.add_argument("--r", type=_parse_r_list)
    sp.add_argument("--lambda", type=float, dest="lam", help="failure probability")
    sp.add_argument("--n-grid", type=_parse_int_list, dest="n_grid")
    sp.add_argument("--n-max", type=int, dest="n_max")
    sp.add_argument("--out-dir", dest="out_dir")

    sp = add("suggest-r", "random-bit budget for a problem size")
    sp.add_argument("--n", type=int, help="problem size")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = _resolve(args, parser)
    try:
        if args.command == "round":
            return _cmd_round(opts, parser)
        if args.command in ("sum", "dot"):
            return _cmd_table(args.command, opts, parser)
        if args.command == "rosenbrock":
            return _cmd_rosenbrock(opts, parser)
        if args.command == "bounds-table":
            return _cmd_bounds_table(opts, parser)
        if args.command == "suggest-r":
            return _cmd_suggest_r(opts, parser)
    except (ValueError, SubstrateRangeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
