"""Batch experiment runner.

Subcommands: theta | verify | fidi | bound | probe | sweep.  Reads a TOML
config, dispatches to the estimator / verification modules and writes one
machine-readable report per requested method (JSON array or CSV rows).
Identical config and seed produce bit-identical report values regardless
of worker count; wall_time_ms is the only non-deterministic field.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import dehaan, estimators, verify
from .config import COMMANDS, ConfigError, ExperimentConfig, build_model, parse_config
from .functionals import AnchorKind, AnchorMap
from .lattice import LatticeOrder, Window
from .spectral import BrownResnick, ModelError, UsageError

REPORT_COLUMNS = [
    "method",
    "estimate",
    "stderr",
    "replicates",
    "window",
    "diagnostics",
    "seed",
    "wall_time_ms",
]


def _order(cfg: ExperimentConfig) -> LatticeOrder:
    return (
        LatticeOrder.LEXICOGRAPHIC
        if cfg.order == "lexicographic"
        else LatticeOrder.REVERSED_LEXICOGRAPHIC
    )


def _anchor_for(method: str, order: LatticeOrder) -> AnchorMap:
    kind = AnchorKind(method.removeprefix("anchor_"))
    return AnchorMap(kind, order)


def _run_theta_method(method, cfg, model, stream):
    w = cfg.window
    n = cfg.replicates
    workers = cfg.workers
    if method == "ratio":
        return estimators.theta_ratio(model, w, n, stream, workers=workers)
    if method == "exceed":
        return estimators.theta_exceed(model, w, n, stream, workers=workers)
    if method.startswith("anchor_"):
        return estimators.theta_anchor(
            model, w, _anchor_for(method, _order(cfg)), n, stream, workers=workers
        )
    if method == "difference":
        return estimators.theta_difference(
            model, w, n, stream, order=_order(cfg), workers=workers
        )
    if method == "pickands":
        return estimators.theta_pickands(
            model, cfg.params["pickands_n"], n, stream, workers=workers
        )
    if method == "block":
        return estimators.theta_block(
            model,
            cfg.params["block_n"],
            cfg.params["block_r"],
            cfg.params["block_tau"],
            n,
            stream,
            workers=workers,
        )
    raise UsageError(f"unknown theta method {method!r}")


def _identity_row(label: str, rep) -> dict:
    return {
        "method": label,
        "estimate": rep.lhs.estimate - rep.rhs.estimate,
        "stderr": float(np.hypot(rep.lhs.stderr, rep.rhs.stderr)),
        "replicates": rep.lhs.replicates,
        "window": [list(rep.lhs.window.lower), list(rep.lhs.window.upper)]
        if rep.lhs.window is not None
        else None,
        "diagnostics": {
            "lhs": rep.lhs.estimate,
            "rhs": rep.rhs.estimate,
            "z_score": rep.z_score if np.isfinite(rep.z_score) else None,
            "passed": rep.passed,
            "status": rep.status,
            "label": rep.label,
        },
    }


def run(cfg: ExperimentConfig) -> tuple:
    """Execute a parsed config; returns (exit_status, report rows)."""
    model = build_model(cfg.model, cfg.window.dim)
    root = np.random.SeedSequence(cfg.seed)
    rows = []
    ok = True

    def push(report, started):
        row = report.to_dict()
        row["seed"] = cfg.seed
        row["wall_time_ms"] = round(1000.0 * (time.perf_counter() - started), 3)
        rows.append(row)
        return row

    if cfg.command == "theta":
        streams = root.spawn(len(cfg.methods))
        for method, ss in zip(cfg.methods, streams):
            started = time.perf_counter()
            try:
                report = _run_theta_method(
                    method, cfg, model, np.random.default_rng(ss)
                )
            except (UsageError, ModelError) as exc:
                rows.append({"method": method, "error": str(exc), "seed": cfg.seed})
                ok = False
                continue
            push(report, started)
            if not report.validate_theta_range():
                ok = False
    elif cfg.command == "verify":
        started = time.perf_counter()
        reports = verify.standard_suite(
            model,
            cfg.params["kinds"],
            cfg.params["checks_per_kind"],
            cfg.replicates,
            cfg.seed,
            workers=cfg.workers,
        )
        for i, rep in enumerate(reports):
            row = _identity_row(f"check[{i}]", rep)
            row["seed"] = cfg.seed
            row["wall_time_ms"] = round(1000.0 * (time.perf_counter() - started), 3)
            rows.append(row)
        n_pass = sum(r.passed for r in reports)
        rows.append(
            {
                "method": "verify_summary",
                "estimate": float(n_pass),
                "stderr": 0.0,
                "replicates": cfg.replicates,
                "window": None,
                "diagnostics": {"total": len(reports), "passed": n_pass},
                "seed": cfg.seed,
                "wall_time_ms": round(1000.0 * (time.perf_counter() - started), 3),
            }
        )
    elif cfg.command == "fidi":
        pts = [tuple(p) for p in cfg.params["points"]]
        xs = cfg.params["thresholds"]
        s1, s2 = root.spawn(2)
        started = time.perf_counter()
        direct = dehaan.fidi_neglog(
            model, pts, xs, cfg.replicates, np.random.default_rng(s1), cfg.workers
        )
        push(direct, started)
        started = time.perf_counter()
        anchored = dehaan.fidi_neglog_anchored(
            model, pts, xs, cfg.replicates, np.random.default_rng(s2), cfg.workers
        )
        push(anchored, started)
    elif cfg.command == "bound":
        if not isinstance(model, BrownResnick):
            print("bound command requires a brown_resnick model", file=sys.stderr)
            return 2, rows
        raw = cfg.params["support"]
        support = (
            Window((raw[0],), (raw[1],))
            if isinstance(raw[0], int)
            else Window(tuple(p[0] for p in raw), tuple(p[1] for p in raw))
        )
        started = time.perf_counter()
        res = estimators.br_lower_bound(model.variogram, support)
        rows.append(
            {
                "method": "br_lower_bound",
                "estimate": res.value,
                "stderr": 0.0,
                "replicates": 0,
                "window": [list(support.lower), list(support.upper)],
                "diagnostics": {
                    "window_sum": res.window_sum,
                    "tail_bound": res.tail_bound,
                    **res.diagnostics,
                },
                "seed": cfg.seed,
                "wall_time_ms": round(1000.0 * (time.perf_counter() - started), 3),
            }
        )
    elif cfg.command == "probe":
        started = time.perf_counter()
        reports = estimators.anti_clustering_probe(
            model,
            cfg.params["m_values"],
            cfg.window,
            cfg.replicates,
            np.random.default_rng(root),
            workers=cfg.workers,
        )
        for rep in reports:
            push(rep, started)
    elif cfg.command == "sweep":
        started = time.perf_counter()
        reports = estimators.theta_pickands_sweep(
            model,
            cfg.params["n_values"],
            cfg.replicates,
            np.random.default_rng(root),
            workers=cfg.workers,
        )
        for rep in reports:
            push(rep, started)
    else:
        raise UsageError(f"unknown command {cfg.command!r}")
    return (0 if ok else 1), rows


def _write_reports(rows, fmt: str, out) -> None:
    if fmt == "json":
        payload = json.dumps(rows, indent=2, default=str)
        if out is None:
            print(payload)
        else:
            with open(out, "w") as fh:
                fh.write(payload + "\n")
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS + ["error"], extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        encoded = dict(row)
        if isinstance(encoded.get("diagnostics"), dict):
            encoded["diagnostics"] = json.dumps(encoded["diagnostics"], default=str)
        if isinstance(encoded.get("window"), list):
            encoded["window"] = json.dumps(encoded["window"])
        writer.writerow(encoded)
    if out is None:
        print(buf.getvalue(), end="")
    else:
        with open(out, "w") as fh:
            fh.write(buf.getvalue())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maxstable",
        description="Extremal-index toolkit for stationary max-stable lattice fields",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} command from a config file")
        p.add_argument("--config", required=True, help="path to the TOML config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument(
            "--workers",
            type=int,
            default=None,
            help="worker threads (default: config value or 1)",
        )
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read(), command_override=args.command)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.format is not None:
        cfg.format = args.format
    if args.workers is not None:
        if args.workers < 1:
            print("--workers must be >= 1", file=sys.stderr)
            return 2
        cfg.workers = args.workers
    try:
        status, rows = run(cfg)
    except (UsageError, ModelError, ConfigError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    _write_reports(rows, cfg.format, cfg.out)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
