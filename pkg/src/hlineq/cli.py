"""Command line entry point.

    hlineq list
    hlineq run CONFIG.json [--out DIR]
    hlineq run --experiment LABEL [--set key=value ...] [--seed N] [--out DIR]

Exit status: 0 all checks passed, 1 a check or the numerics failed,
2 invalid config, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_SCHEMA,
    ExperimentConfig,
    SchemaError,
    list_experiments,
    run,
)


def _parse_set(items):
    params = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise SchemaError(f"--set expects key=value, got {item!r}")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hlineq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments")
    run_p = sub.add_parser("run", help="run an experiment")
    run_p.add_argument("config", nargs="?", help="JSON config file")
    run_p.add_argument("--experiment", help="experiment label (instead of a config file)")
    run_p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a parameter; VALUE is parsed as JSON when possible")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--out", help="output directory")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config and args.experiment:
        raise SchemaError("give either a config file or --experiment, not both")
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        config = ExperimentConfig.from_json(text)
        data = config.to_dict()
    elif args.experiment:
        data = {"schema": 1, "experiment": args.experiment, "parameters": {}}
    else:
        raise SchemaError("run needs a config file or --experiment")
    data["parameters"] = {**data.get("parameters", {}), **_parse_set(args.set)}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_path"] = args.out
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for label, description in list_experiments():
            print(f"{label:22s} {description}")
        return EXIT_OK
    try:
        config = _load_config(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        manifest = run(config)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, ValueError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for check in manifest.checks:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}: {check['detail']}")
    print(f"wrote {config.output_path}/{manifest.csv} ({manifest.wall_time_s:.2f}s)")
    return EXIT_OK if manifest.passed else EXIT_NUMERIC
