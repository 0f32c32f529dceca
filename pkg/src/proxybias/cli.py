"""Command-line interface.

Five subcommands cover the workflows end to end:

    proxybias audit input.csv --estimator all --common-data common.csv
    proxybias simulate -n 10000 --seed 7 -o data.csv
    proxybias sample input.csv --strategy active --seed 3
    proxybias scan-gamma --r 0.25 --s 0.25 --U 0.1 -o curve.csv
    proxybias counterexample

Each prints a JSON report (machine-readable, keys sorted) to stdout or
``--output``. Reports from seeded commands are bit-identical across runs
except for the ``wall_time_s`` field. Exit codes: 0 success (possibly with
warnings), 2 usage error, 1 computation failure.

A ``--config`` JSON file may hold any of a subcommand's flag values
(flag names with dashes replaced by underscores); explicit flags win.
Seeds are never read from the environment: reproducibility requires them
spelled out.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    AttributeSource,
    build_bias_report,
    build_joint_table,
    ci_violation,
    distortion_factor,
    naive_bias,
    rates,
    true_bias,
)
from .dataio import SplitSpec, load_config, read_dataset, split_dataset, write_dataset
from .errors import AuditError
from .sampling import (
    FileExchangeOracle,
    InMemoryOracle,
    active_sampling,
    direct_sampling,
    plug_in_bias,
    positive_sampling,
    uniform_sampling,
)
from .simulate import SimParams, exact_table, sample_records
from .theory import COUNTEREXAMPLE_ROWS, bayes_counterexample, gamma_scan

ESTIMATOR_CHOICES = ("naive", "corrected", "general", "direct", "all")
STRATEGY_CHOICES = ("active", "uniform", "positive", "direct")


class _Usage(Exception):
    """Raised for post-parse usage errors; mapped to exit code 2."""


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit(envelope: dict, output: str | None) -> None:
    text = json.dumps(envelope, sort_keys=True, indent=2, default=_jsonable)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _pick(args: argparse.Namespace, config: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _load_cmd_config(args: argparse.Namespace) -> dict:
    if getattr(args, "config", None):
        return load_config(args.config)
    return {}


def _envelope(command: str, seed, config_echo: dict, payload: dict, warnings: list[str],
              started: float) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config_echo,
        "payload": payload,
        "warnings": sorted(warnings),
        "wall_time_s": time.perf_counter() - started,
    }


def cmd_audit(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = _load_cmd_config(args)
    estimator = _pick(args, config, "estimator", "all")
    common_path = _pick(args, config, "common_data")
    labeled_fraction = _pick(args, config, "labeled_fraction")
    seed = _pick(args, config, "seed")
    smoothing = float(_pick(args, config, "smoothing", 0.0))

    if estimator not in ESTIMATOR_CHOICES:
        raise _Usage(f"--estimator must be one of {ESTIMATOR_CHOICES}")
    requested = list(ESTIMATOR_CHOICES[:-1]) if estimator == "all" else [estimator]
    needs_common = bool(set(requested) & {"corrected", "general", "direct"})
    if common_path is not None and labeled_fraction is not None:
        raise _Usage("give at most one of --common-data and --labeled-fraction")
    if estimator != "all" and needs_common and common_path is None and labeled_fraction is None:
        raise _Usage(f"--estimator {estimator} needs --common-data or --labeled-fraction")
    if labeled_fraction is not None:
        labeled_fraction = float(labeled_fraction)
        if not (0.0 < labeled_fraction <= 1.0):
            raise _Usage("--labeled-fraction must lie in (0, 1]")
        if seed is None:
            raise _Usage("--labeled-fraction requires --seed")

    records = read_dataset(args.input)
    have_a = all(r.a is not None for r in records)
    have_ahat = all(r.a_hat is not None for r in records)
    warnings: list[str] = []
    if not have_a and any(r.a is not None for r in records):
        warnings.append("column 'a' is partially filled; ignored for table building")
    if not have_ahat and any(r.a_hat is not None for r in records):
        warnings.append("column 'a_hat' is partially filled; ignored for table building")

    if have_a and have_ahat:
        source = AttributeSource.BOTH
    elif have_a:
        source = AttributeSource.TRUE_A
    elif have_ahat:
        source = AttributeSource.PREDICTED_A
    else:
        raise _Usage("input carries neither complete 'a' nor complete 'a_hat'")
    eval_table = build_joint_table(records, source)

    common_table = None
    plug_in_abs = None
    common_n = 0
    if common_path is not None:
        common_records = read_dataset(common_path)
        common_table = build_joint_table(common_records, AttributeSource.BOTH)
        common_n = len(common_records)
    elif labeled_fraction is not None:
        if not have_a:
            raise _Usage("--labeled-fraction requires the input to carry true attributes")
        k = int(np.floor(labeled_fraction * len(records)))
        if k < 1:
            raise _Usage("--labeled-fraction selects zero records")
        perm = np.random.default_rng(int(seed)).permutation(len(records))
        labeled = [records[i] for i in perm[:k]]
        common_table = build_joint_table(labeled, AttributeSource.BOTH)
        common_n = k
        if have_ahat:
            try:
                plug_in_abs = abs(plug_in_bias(records, {r.id: bool(r.a) for r in labeled}))
            except AuditError as exc:
                warnings.append(f"plug_in: {type(exc).__name__}: {exc}")

    report = build_bias_report(
        eval_table,
        common_table,
        estimators=requested,
        plug_in_abs=plug_in_abs,
        smoothing=smoothing,
    )
    report.provenance["input"] = str(args.input)
    report.provenance["common_n"] = common_n
    warnings.extend(f"{name}: {reason}" for name, reason in sorted(report.degenerate.items()))

    requested_values = {
        "naive": report.naive_signed,
        "corrected": report.corrected_abs,
        "general": report.general_signed,
        "direct": report.direct_abs,
    }
    produced = [name for name in requested if requested_values[name] is not None]
    payload = report.to_dict()
    payload["estimators_requested"] = requested
    payload["estimators_produced"] = produced
    config_echo = {
        "input": str(args.input),
        "estimator": estimator,
        "common_data": None if common_path is None else str(common_path),
        "labeled_fraction": labeled_fraction,
        "smoothing": smoothing,
    }
    _emit(_envelope("audit", seed, config_echo, payload, warnings, started), args.output)
    return 0 if produced else 1


def _sim_params(args: argparse.Namespace, config: dict, seed: int) -> SimParams:
    def fv(name, default=None):
        v = _pick(args, config, name, default)
        return v if v is None else float(v)

    return SimParams(
        alpha=fv("alpha", 0.6),
        beta=fv("beta", 0.4),
        r=fv("r", 0.25),
        s=fv("s", 0.25),
        g1=fv("g1", 0.2),
        g2=fv("g2", 0.3),
        coupling=fv("coupling", 0.0),
        neg_alpha=fv("neg_alpha"),
        neg_beta=fv("neg_beta"),
        neg_g1=fv("neg_g1"),
        neg_g2=fv("neg_g2"),
        score_noise=fv("score_noise", 0.25),
        seed=seed,
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = _load_cmd_config(args)
    n = _pick(args, config, "n")
    seed = _pick(args, config, "seed")
    out = _pick(args, config, "out")
    if n is None or int(n) < 1:
        raise _Usage("-n must be a positive record count")
    if seed is None:
        raise _Usage("--seed is required")
    if out is None:
        raise _Usage("-o (dataset output path) is required")
    params = _sim_params(args, config, int(seed))
    records = sample_records(params, int(n))
    write_dataset(out, records)

    exact = exact_table(params)
    exact_rates = rates(exact)
    payload = {
        "dataset": str(out),
        "n": int(n),
        "params": {
            "alpha": params.alpha,
            "beta": params.beta,
            "r": params.r,
            "s": params.s,
            "g1": params.g1,
            "g2": params.g2,
            "coupling": params.coupling,
            "neg_alpha": params.filled().neg_alpha,
            "neg_beta": params.filled().neg_beta,
            "neg_g1": params.filled().neg_g1,
            "neg_g2": params.filled().neg_g2,
            "score_noise": params.score_noise,
            "neg_slice_is_default_mirror": params.neg_alpha is None,
        },
        "exact": {
            "true_signed": true_bias(exact),
            "naive_signed": naive_bias(exact),
            "gamma": distortion_factor(params.g1, params.g2, exact_rates),
            "ci_violation": ci_violation(exact),
        },
    }
    config_echo = {"n": int(n), "out": str(out)}
    _emit(_envelope("simulate", int(seed), config_echo, payload, [], started), args.output)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = _load_cmd_config(args)
    strategy = _pick(args, config, "strategy")
    seed = _pick(args, config, "seed")
    b = int(_pick(args, config, "b", 100))
    w = int(_pick(args, config, "w", 100))
    epsilon = float(_pick(args, config, "epsilon", 0.01))
    max_iters = int(_pick(args, config, "max_iters", 200))
    target = _pick(args, config, "target")
    budget = _pick(args, config, "budget")
    smoothing = float(_pick(args, config, "smoothing", 0.0))
    oracle_kind = _pick(args, config, "oracle", "inline")

    if strategy not in STRATEGY_CHOICES:
        raise _Usage(f"--strategy must be one of {STRATEGY_CHOICES}")
    if seed is None:
        raise _Usage("--seed is required")
    if oracle_kind not in ("inline", "file-exchange"):
        raise _Usage("--oracle must be 'inline' or 'file-exchange'")

    records = read_dataset(args.input)
    budget = None if budget is None else int(budget)
    if oracle_kind == "inline":
        oracle = InMemoryOracle(records, budget=budget)
    else:
        request = _pick(args, config, "request_file")
        response = _pick(args, config, "response_file")
        if not request or not response:
            raise _Usage("--oracle file-exchange needs --request-file and --response-file")
        oracle = FileExchangeOracle(
            request,
            response,
            budget=budget,
            poll_interval=float(_pick(args, config, "poll_interval", 0.05)),
            timeout=float(_pick(args, config, "timeout", 60.0)),
        )

    if strategy == "active":
        estimate, trace = active_sampling(
            records, oracle, b=b, w=w, epsilon=epsilon, max_iters=max_iters,
            seed=int(seed), smoothing=smoothing,
        )
    else:
        runner = {"uniform": uniform_sampling, "positive": positive_sampling,
                  "direct": direct_sampling}[strategy]
        estimate, trace = runner(
            records, oracle,
            batch=b, target=None if target is None else int(target),
            seed=int(seed), smoothing=smoothing,
        )

    trace_csv = _pick(args, config, "trace_csv")
    if trace_csv:
        import csv as _csv

        with open(trace_csv, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            writer.writerow(
                ["iteration", "labels_used", "g1", "g2", "delta1", "delta2",
                 "r_hat", "s_hat", "estimate", "plug_in"]
            )
            for s in trace.steps:
                writer.writerow(
                    [s.iteration, s.labels_used, repr(s.g1), repr(s.g2), repr(s.delta1),
                     repr(s.delta2), repr(s.r_hat), repr(s.s_hat),
                     "" if s.estimate is None else repr(s.estimate),
                     "" if s.plug_in is None else repr(s.plug_in)]
                )

    warnings = [] if trace.error is None else [trace.error]
    payload = {
        "strategy": strategy,
        "estimate_signed": estimate,
        "estimate_abs": None if estimate is None else abs(estimate),
        "queries_used": oracle.queries_used,
        "budget": budget,
        "pool": {
            "n": len(records),
            "positives": sum(1 for r in records if r.y),
        },
        "trace": trace.to_dict(),
    }
    config_echo = {
        "input": str(args.input), "strategy": strategy, "b": b, "w": w,
        "epsilon": epsilon, "max_iters": max_iters,
        "target": None if target is None else int(target),
        "oracle": oracle_kind, "smoothing": smoothing,
    }
    code = 0 if estimate is not None else 1
    _emit(_envelope("sample", int(seed), config_echo, payload, warnings, started), args.output)
    return code


def cmd_scan_gamma(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = _load_cmd_config(args)
    r = _pick(args, config, "r")
    if r is None:
        raise _Usage("--r is required")
    r = float(r)
    s = float(_pick(args, config, "s", r))
    U = _pick(args, config, "U")
    if U is None:
        raise _Usage("--U is required")
    U = float(U)
    step = float(_pick(args, config, "step", 1e-3))

    scan = gamma_scan(r, s, U, step=step)
    if args.out:
        scan.to_csv(args.out)
    payload = {
        "r": r,
        "s": s,
        "U": U,
        "step": step,
        "n_points": int(scan.g1.size),
        "feasible_interval": [float(scan.g1[0]), float(scan.g1[-1])],
        "gamma_max": scan.gamma_max,
        "argmax": [{"g1": a, "g2": b} for a, b in scan.argmax_points],
        "curve_csv": None if not args.out else str(args.out),
    }
    config_echo = {"r": r, "s": s, "U": U, "step": step}
    _emit(_envelope("scan-gamma", None, config_echo, payload, [], started), args.output)
    return 0


def cmd_counterexample(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    table = bayes_counterexample()
    report = build_bias_report(table, table)
    payload = report.to_dict()
    payload["rows"] = [
        {"x1": x1, "x2": x2, "a": a, "y": y, "y_hat": x2, "a_hat": x2}
        for x1, x2, a, y in COUNTEREXAMPLE_ROWS
    ]
    payload["cells_total"] = table.total
    warnings = [f"{k}: {v}" for k, v in sorted(report.degenerate.items())]
    _emit(_envelope("counterexample", None, {}, payload, warnings, started), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxybias",
        description="Equal-opportunity bias estimation through a noisy attribute classifier.",
    )
    parser.add_argument("--version", action="version", version=f"proxybias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="estimate bias from a dataset file")
    p.add_argument("input", help="evaluation dataset CSV")
    p.add_argument("--estimator", choices=ESTIMATOR_CHOICES, default=None)
    p.add_argument("--common-data", dest="common_data", default=None,
                   help="CSV with jointly observed (y, a) for the correction")
    p.add_argument("--labeled-fraction", dest="labeled_fraction", type=float, default=None,
                   help="carve the common data out of the input itself (needs --seed)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--config", default=None, help="JSON file of flag defaults")
    p.add_argument("-o", "--output", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("simulate", help="generate a synthetic dataset with known truth")
    for flag in ("alpha", "beta", "r", "s", "g1", "g2", "coupling",
                 "neg-alpha", "neg-beta", "neg-g1", "neg-g2", "score-noise"):
        p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=float, default=None)
    p.add_argument("-n", dest="n", type=int, default=None, help="number of records")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", dest="out", default=None, help="dataset CSV path")
    p.add_argument("--config", default=None)
    p.add_argument("--output", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="label-acquisition strategies against an oracle")
    p.add_argument("input", help="pool dataset CSV (needs a_hat; scores for active)")
    p.add_argument("--strategy", choices=STRATEGY_CHOICES, default=None)
    p.add_argument("-b", dest="b", type=int, default=None, help="batch size")
    p.add_argument("-w", dest="w", type=int, default=None, help="labels revealed per iteration")
    p.add_argument("--epsilon", type=float, default=None, help="active stopping tolerance")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--target", type=int, default=None, help="label target for batched strategies")
    p.add_argument("--oracle", choices=("inline", "file-exchange"), default=None)
    p.add_argument("--request-file", dest="request_file", default=None)
    p.add_argument("--response-file", dest="response_file", default=None)
    p.add_argument("--poll-interval", dest="poll_interval", type=float, default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--budget", type=int, default=None, help="oracle query cap")
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace-csv", dest="trace_csv", default=None, help="per-iteration CSV side file")
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--output", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("scan-gamma", help="distortion factor along an error-budget line")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--s", type=float, default=None, help="defaults to r")
    p.add_argument("--U", type=float, default=None, help="error budget s*g1 + r*g2")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("-o", dest="out", default=None, help="curve CSV path")
    p.add_argument("--config", default=None)
    p.add_argument("--output", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_scan_gamma)

    p = sub.add_parser("counterexample", help="exact table where accuracy misleads the audit")
    p.add_argument("-o", "--output", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_counterexample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except AuditError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
