"""Command-line experiment runner.

    uarelay list
    uarelay run --experiment fig6 --config base.cfg --out fig6.csv [--seed N]
                [--format csv|json] [--workers K]

CSV output follows RFC 4180 with numbers in scientific notation (9
significant digits). A CSV file gets a ``<out>.meta.json`` sidecar holding
the resolved configuration and seed; JSON output embeds them.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load
from .experiments import UnknownExperiment, list_experiments, run_experiment

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG_MISSING = 3
EXIT_CONFIG_INVALID = 4
EXIT_UNKNOWN_EXPERIMENT = 5
EXIT_RUN_FAILED = 6
EXIT_OUTPUT_FAILED = 7


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _parser():
    p = _Parser(prog="uarelay", description="User-assisted relaying experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list registered experiments")
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", required=True)
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--workers", type=int, default=1)
    return p


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, float, np.integer, np.floating)):
        return "%.8e" % float(value)
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    return value


def render_csv(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def _provenance(table, config):
    return {
        "experiment": table.experiment,
        "seed": config.seed,
        "package_version": __version__,
        "columns": list(table.columns),
        "config": config.resolved(),
    }


def render_json(table, config):
    doc = _provenance(table, config)
    doc["rows"] = [[_json_value(v) for v in row] for row in table.rows]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cmd_list(out):
    for exp_id, desc in list_experiments():
        out.write(f"{exp_id}\t{desc}\n")
    return EXIT_OK


def _cmd_run(args, out, err):
    path = Path(args.config)
    if not path.is_file():
        err.write(f"error: config file not found: {path}\n")
        return EXIT_CONFIG_MISSING
    try:
        config = load(path)
    except ConfigError as exc:
        err.write(f"error: invalid config {path}: {exc}\n")
        return EXIT_CONFIG_INVALID
    if args.seed is not None:
        if args.seed < 0:
            err.write("error: --seed must be non-negative\n")
            return EXIT_USAGE
        config = config.with_seed(args.seed)
    if args.workers < 1:
        err.write("error: --workers must be >= 1\n")
        return EXIT_USAGE
    config = config.with_workers(args.workers)

    start = time.perf_counter()
    try:
        table = run_experiment(args.experiment, config)
    except UnknownExperiment as exc:
        err.write(f"error: {exc}\n")
        return EXIT_UNKNOWN_EXPERIMENT
    except (ValueError, ArithmeticError) as exc:
        err.write(f"error: experiment {args.experiment} failed: {exc}\n")
        return EXIT_RUN_FAILED
    wall = time.perf_counter() - start

    out_path = Path(args.out)
    try:
        if args.format == "csv":
            out_path.write_text(render_csv(table), encoding="utf-8", newline="")
            meta = json.dumps(_provenance(table, config), indent=2, sort_keys=True) + "\n"
            Path(str(out_path) + ".meta.json").write_text(meta, encoding="utf-8")
        else:
            out_path.write_text(render_json(table, config), encoding="utf-8")
    except OSError as exc:
        err.write(f"error: cannot write {out_path}: {exc}\n")
        return EXIT_OUTPUT_FAILED
    out.write(f"experiment={table.experiment} rows={len(table.rows)} wall={wall:.2f}s seed={config.seed} out={out_path}\n")
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None):
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = _parser().parse_args(argv)
    except _UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    if args.command == "list":
        return _cmd_list(out)
    return _cmd_run(args, out, err)


def console():
    sys.exit(main())


if __name__ == "__main__":
    console()
