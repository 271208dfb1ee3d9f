"""Command-line experiment runner.

Subcommands: counterexample | product-entropy | induced-entropy |
gw-certificate | space-check. A JSON config file supplies fields of
ExperimentConfig; flags override the file; the resolved config is embedded
in the report. Exit status is nonzero when any check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    make_config,
    run_experiment,
    write_report,
)

_EXPERIMENTS = [
    "counterexample",
    "product-entropy",
    "induced-entropy",
    "gw-certificate",
    "space-check",
]


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nadent",
        description="exact entropy experiments on finite nonautonomous systems",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=str, help="output directory for reports")
        p.add_argument("--seed", type=int, help="override the corpus seed")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config field (JSON-typed value)",
        )
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides: dict = {}
    if args.config is not None:
        loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        loaded.pop("experiment", None)
        overrides.update(loaded)
    for item in args.overrides:
        key, value = _parse_override(item)
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    cfg = make_config(args.experiment, overrides)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    report = run_experiment(cfg)
    paths = write_report(report, cfg.out_dir)
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    failed = [c for c in report.checks if not c["passed"]]
    for c in report.checks:
        status = "PASS" if c["passed"] else "FAIL"
        detail = f" ({c['detail']})" if c["detail"] else ""
        print(f"{status} {c['name']}{detail}")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
