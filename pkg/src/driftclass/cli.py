"""Command-line entry point.

    driftclass <experiment> --config <file> [--seed S] [--out DIR] [--threads K]

Exit codes: 0 when every verdict passes or is inconclusive, 1 when a verdict
is falsified, 2 on usage or configuration errors.
"""

import argparse
from dataclasses import replace
import sys

from ._parallel import resolve_threads
from .exceptions import ConfigError
from .harness import EXPERIMENTS, parse_config, run_experiment, write_outputs


def build_parser():
    parser = argparse.ArgumentParser(
        prog="driftclass",
        description="Run a seeded diffusion-classification experiment and write CSV reports.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument(
        "--threads", type=int,
        help="worker processes; defaults to the config, then DRIFTCLASS_THREADS",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, experiment=args.experiment)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.threads is not None:
            overrides["threads"] = resolve_threads(args.threads)
        cfg = replace(cfg, **overrides)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"driftclass: error: {exc}", file=sys.stderr)
        return 2

    result = run_experiment(cfg)
    paths = write_outputs(result, cfg.output_dir)
    for v in result.verdicts:
        print(f"{v.verdict:>12}  {v.check}  {v.detail}")
    for p in paths:
        print(f"wrote {p}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
