"""Command-line interface: CSV ingestion, test/simulation drivers, and
schema-versioned result documents."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from .config import RunConfig
from .core import DataFormatError, DataShapeError, DegenerateSampleError
from .hsic import JointSample
from .selective import multi_hsic, multi_mmd, poly_hsic, poly_mmd
from .simulation import (
    HSIC_METHODS,
    MMD_METHODS,
    ProblemSpec,
    benchmark_trials,
    run_trials,
)

SCHEMA_VERSION = 1

RESULT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "config", "results"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["mmd-test", "hsic-test", "simulate", "benchmark"]},
        "config": {
            "type": "object",
            "required": ["seed", "method", "k", "alpha", "r", "replicates_per_scale"],
        },
        "inputs": {"type": "object"},
        "results": {
            "type": "object",
            "properties": {
                "selected": {"type": "array", "items": {"type": "integer"}},
                "feature_names": {"type": "array", "items": {"type": "string"}},
                "p_values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                "rejected": {"type": "array", "items": {"type": "boolean"}},
                "diagnostics": {"type": "array"},
                "summaries": {"type": "array"},
                "per_trial": {"type": "array"},
            },
        },
    },
}


def _parse_cell(cell: str, row_num: int, path: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataFormatError(f"{path}: non-numeric value {cell!r} in row {row_num}") from None
    if not math.isfinite(value):
        raise DataFormatError(f"{path}: non-finite value {cell!r} in row {row_num}")
    return value


def load_csv(path: str) -> tuple[np.ndarray, list[str]]:
    """Read a rectangular numeric CSV; a non-numeric first row is a header.

    Rows are numbered from 1 as they appear in the file; ragged or
    non-numeric data rows are rejected by number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(num, row) for num, row in enumerate(csv.reader(fh), start=1) if row]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    width = len(rows[0][1])
    first = rows[0][1]
    has_header = any(not _is_number(c) for c in first)
    names = [c.strip() for c in first] if has_header else [f"f{i}" for i in range(width)]
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise DataFormatError(f"{path}: no data rows")
    values = np.empty((len(data_rows), width))
    for out_idx, (num, row) in enumerate(data_rows):
        if len(row) != width:
            raise DataFormatError(f"{path}: ragged row {num} has {len(row)} cells, expected {width}")
        values[out_idx] = [_parse_cell(c, num, path) for c in row]
    return values, names


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def save_csv(path: str, values: np.ndarray, names: list[str]) -> None:
    """Write a matrix as CSV with 17 significant digits (lossless round trip)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if len(names) != values.shape[1]:
        raise DataShapeError("one column name per column required")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in values:
            writer.writerow([f"{v:.17g}" for v in row])


def split_response(values: np.ndarray, names: list[str], response: str):
    """Split a table into covariates and the named response column."""
    if response not in names:
        raise DataFormatError(f"response column {response!r} not found (have {names})")
    idx = names.index(response)
    keep = [j for j in range(values.shape[1]) if j != idx]
    X = values[:, keep]
    xnames = [names[j] for j in keep]
    return X, xnames, values[:, idx]


def _sanitize(obj):
    """Make a document JSON-serializable and deterministic: numpy scalars to
    python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def render_document(doc: dict) -> str:
    return json.dumps(_sanitize(doc), sort_keys=True, indent=2) + "\n"


def _emit(doc: dict, out_path: str | None) -> None:
    text = render_document(doc)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_document(command: str, inputs: dict, report, config: RunConfig) -> dict:
    rejected = report.rejected(config.alpha)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": report.config,
        "inputs": inputs,
        "results": {
            "method": report.method,
            "selected": list(report.selected),
            "feature_names": [report.feature_names[i] for i in report.selected],
            "scores": [float(report.selection.scores[i]) for i in report.selected],
            "p_values": [float(p) for p in report.p_values],
            "rejected": rejected,
            "diagnostics": report.diagnostics,
        },
    }


def _print_report_table(report, alpha: float) -> None:
    print(f"{report.method}: top-{len(report.selected)} features at alpha = {alpha}")
    print(f"{'feature':>10} {'name':>12} {'score':>12} {'p-value':>10} {'reject':>7}")
    for i, p in zip(report.selected, report.p_values):
        score = float(report.selection.scores[i])
        mark = "yes" if p < alpha else "no"
        print(f"{i:>10d} {report.feature_names[i]:>12} {score:>12.5g} {p:>10.4g} {mark:>7}")


def _print_summary_table(summaries) -> None:
    print(f"{'method':>12} {'tpr':>8} {'fpr':>8} {'tpr_se':>8} {'fpr_se':>8} {'trials':>7}")
    for s in summaries:
        print(
            f"{s.method:>12} {s.tpr:>8.3f} {s.fpr:>8.3f} "
            f"{_fmt(s.tpr_se):>8} {_fmt(s.fpr_se):>8} {s.trials:>7d}"
        )


def _fmt(v: float) -> str:
    return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3f}"


def _resolve_seed(args, parser, required_flag: bool = False) -> int:
    if args.seed is not None:
        return args.seed
    if required_flag:
        parser.error("--seed is required for this subcommand")
    env = os.environ.get("SELKERN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            parser.error(f"SELKERN_SEED must be an integer, got {env!r}")
    parser.error("--seed not given and SELKERN_SEED not set")
    raise AssertionError("unreachable")


def _config_from_args(args, method: str, seed: int, parser) -> RunConfig:
    try:
        return RunConfig(
            seed=seed,
            method=method,
            k=args.k,
            alpha=args.alpha,
            r=args.r,
            estimator=args.estimator,
            block_size=args.block_size,
            scale_count=args.scales,
            scale_low=args.scale_low,
            scale_high=args.scale_high,
            replicates_per_scale=args.replicates,
            kernel_family=args.kernel,
            bandwidth=args.bandwidth,
            imq_offset=args.imq_offset,
            shared_bandwidth=args.shared_bandwidth,
            threads=args.threads,
        )
    except ValueError as exc:
        parser.error(str(exc))
        raise AssertionError("unreachable")


def _add_common(parser: argparse.ArgumentParser, k_required: bool) -> None:
    parser.add_argument("--k", type=int, required=k_required, help="number of features to select")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--r", type=float, default=1.0, help="design size ratio l = round(r*n)")
    parser.add_argument("--estimator", choices=["incomplete", "block"], default="incomplete")
    parser.add_argument("--block-size", type=int, default=5, dest="block_size")
    parser.add_argument("--scales", type=int, default=10, help="number of bootstrap scales")
    parser.add_argument("--scale-low", type=float, default=0.5, dest="scale_low")
    parser.add_argument("--scale-high", type=float, default=2.0, dest="scale_high")
    parser.add_argument("--replicates", type=int, default=2000, help="bootstrap replicates per scale")
    parser.add_argument("--kernel", choices=["gaussian", "imq"], default="gaussian")
    parser.add_argument("--bandwidth", type=float, default=None, help="fixed Gaussian bandwidth (default: median heuristic)")
    parser.add_argument("--imq-offset", type=float, default=1.0, dest="imq_offset")
    parser.add_argument("--shared-bandwidth", action="store_true", dest="shared_bandwidth")
    parser.add_argument("--threads", type=int, default=1, help="cap on per-feature parallelism")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default=None, help="write the result document here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selkern", description="Selective kernel tests for feature selection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mmd = sub.add_parser("mmd-test", help="two-sample feature test from two CSV files")
    p_mmd.add_argument("--x", required=True, help="CSV of the first sample")
    p_mmd.add_argument("--y", required=True, help="CSV of the second sample")
    p_mmd.add_argument("--method", choices=["multi", "poly"], default="multi")
    _add_common(p_mmd, k_required=True)

    p_hsic = sub.add_parser("hsic-test", help="dependence feature test from one CSV with a response column")
    p_hsic.add_argument("--data", required=True, help="CSV with covariates and response")
    p_hsic.add_argument("--response", required=True, help="name of the response column")
    p_hsic.add_argument("--method", choices=["multi", "poly"], default="multi")
    _add_common(p_hsic, k_required=True)

    p_sim = sub.add_parser("simulate", help="multi-trial synthetic experiment")
    p_sim.add_argument("--problem", choices=["mean-shift", "logistic"], required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--d", type=int, required=True)
    p_sim.add_argument("--shift", type=float, default=0.5)
    p_sim.add_argument("--informative", type=int, default=10)
    p_sim.add_argument("--trials", type=int, required=True)
    p_sim.add_argument("--methods", nargs="+", default=None,
                       choices=list(MMD_METHODS + HSIC_METHODS),
                       help="methods to run (default: both for the problem)")
    _add_common(p_sim, k_required=False)

    p_bench = sub.add_parser("benchmark", help="fake-feature rediscovery benchmark on a labeled CSV")
    p_bench.add_argument("--data", required=True)
    p_bench.add_argument("--mode", choices=["mmd", "hsic"], required=True)
    p_bench.add_argument("--label", default=None, help="binary class column (mmd mode)")
    p_bench.add_argument("--response", default=None, help="response column (hsic mode)")
    p_bench.add_argument("--fakes", type=int, default=30)
    p_bench.add_argument("--n", type=int, default=None, help="rows per trial (default: all / per-class minimum)")
    p_bench.add_argument("--trials", type=int, required=True)
    p_bench.add_argument("--methods", nargs="+", default=None,
                         choices=list(MMD_METHODS + HSIC_METHODS))
    _add_common(p_bench, k_required=False)

    return parser


def _cmd_mmd_test(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    x, xnames = load_csv(args.x)
    y, ynames = load_csv(args.y)
    method = "multi-mmd" if args.method == "multi" else "poly-mmd"
    config = _config_from_args(args, method, seed, parser)
    fn = multi_mmd if args.method == "multi" else poly_mmd
    report = fn(x, y, args.k, config, feature_names=xnames)
    doc = _report_document("mmd-test", {"x": args.x, "y": args.y}, report, config)
    _print_report_table(report, config.alpha)
    _emit(doc, args.out)
    return 0


def _cmd_hsic_test(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    values, names = load_csv(args.data)
    X, xnames, y = split_response(values, names, args.response)
    Z = JointSample(X, y[:, None])
    method = "multi-hsic" if args.method == "multi" else "poly-hsic"
    config = _config_from_args(args, method, seed, parser)
    fn = multi_hsic if args.method == "multi" else poly_hsic
    report = fn(Z, args.k, config, feature_names=xnames)
    doc = _report_document(
        "hsic-test", {"data": args.data, "response": args.response}, report, config
    )
    _print_report_table(report, config.alpha)
    _emit(doc, args.out)
    return 0


def _summaries_document(command: str, inputs: dict, summaries, config: RunConfig) -> dict:
    per_trial = []
    for s in summaries:
        for rec in s.records:
            per_trial.append({"method": s.method, **rec})
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config.snapshot(),
        "inputs": inputs,
        "results": {
            "summaries": [
                {k: v for k, v in asdict(s).items() if k != "records"} for s in summaries
            ],
            "per_trial": per_trial,
        },
    }


def _cmd_simulate(args, parser) -> int:
    seed = _resolve_seed(args, parser, required_flag=True)
    problem = ProblemSpec(
        kind=args.problem, n=args.n, d=args.d, shift=args.shift, informative=args.informative
    )
    default_methods = MMD_METHODS if args.problem == "mean-shift" else HSIC_METHODS
    methods = list(args.methods or default_methods)
    k = args.k if args.k is not None else max(1, args.d // 2)
    config = _config_from_args(args, methods[0], seed, parser)
    config = RunConfig(**{**config.snapshot(), "k": k, "threads": args.threads})
    summaries = run_trials(problem, methods, args.trials, seed, config)
    inputs = {
        "problem": args.problem,
        "n": args.n,
        "d": args.d,
        "shift": args.shift,
        "informative": args.informative,
        "trials": args.trials,
    }
    doc = _summaries_document("simulate", inputs, summaries, config)
    _print_summary_table(summaries)
    _emit(doc, args.out)
    return 0


def _cmd_benchmark(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    values, names = load_csv(args.data)
    if args.mode == "mmd":
        if not args.label:
            parser.error("--label is required in mmd mode")
        features, fnames, split = split_response(values, names, args.label)
    else:
        if not args.response:
            parser.error("--response is required in hsic mode")
        features, fnames, split = split_response(values, names, args.response)
    default_methods = MMD_METHODS if args.mode == "mmd" else HSIC_METHODS
    methods = list(args.methods or default_methods)
    k = args.k if args.k is not None else features.shape[1]
    config = _config_from_args(args, methods[0], seed, parser)
    config = RunConfig(**{**config.snapshot(), "k": k, "threads": args.threads})
    summaries = benchmark_trials(
        features, split, args.mode, methods, args.trials, seed, config,
        n=args.n, n_fake=args.fakes,
    )
    inputs = {
        "data": args.data,
        "mode": args.mode,
        "column": args.label if args.mode == "mmd" else args.response,
        "fakes": args.fakes,
        "trials": args.trials,
    }
    doc = _summaries_document("benchmark", inputs, summaries, config)
    _print_summary_table(summaries)
    _emit(doc, args.out)
    return 0


_HANDLERS = {
    "mmd-test": _cmd_mmd_test,
    "hsic-test": _cmd_hsic_test,
    "simulate": _cmd_simulate,
    "benchmark": _cmd_benchmark,
}


def cli_main(argv: list[str] | None = None) -> int:
    """Entry point; returns 0 on success, 2 on usage errors, 1 on data errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (DataFormatError, DataShapeError, DegenerateSampleError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
