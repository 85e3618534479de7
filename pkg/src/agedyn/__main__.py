"""Command-line entry point: experiment runner and figure presets.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 verification assertion failure.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, ExplosionError, NumericError, ViabilityError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="agedyn",
                                     description="Adaptive dynamics for age-structured "
                                                 "populations: experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a JSON experiment config")
    p_run.add_argument("config", help="path to the config file")
    p_run.add_argument("--output-dir", default=None)

    p_fig = sub.add_parser("reproduce", help="run a desk-scale figure preset")
    p_fig.add_argument("figure", help="figure id, e.g. fig4 or fig9-scan")
    p_fig.add_argument("--output-dir", default=None)

    sub.add_parser("list", help="list models and figure presets")

    args = parser.parse_args(argv)
    from . import experiments
    from .models import REGISTRY

    try:
        if args.command == "run":
            artifacts = experiments.run(args.config, output_dir=args.output_dir)
        elif args.command == "reproduce":
            artifacts = experiments.reproduce(args.figure, output_dir=args.output_dir)
        else:
            print("models:", ", ".join(sorted(REGISTRY)))
            print("figures:", ", ".join(sorted(experiments.FIGURE_PRESETS)))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ViabilityError, ExplosionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except experiments.VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4
    for a in artifacts:
        print(a)
    return 0


if __name__ == "__main__":
    sys.exit(main())
