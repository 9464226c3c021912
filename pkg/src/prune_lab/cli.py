"""Command line entry point: ``prune-lab run|validate <config>``."""
from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigError, PruneLabError
from .experiments import EXPERIMENTS, describe
from .runner import JOBS_ENV, describe_validation, run, validate, write_outputs

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

CONFIG_HELP = """\
config files hold one 'key = value' per line; '#' starts a comment.
values: integers, reals (fractions such as 5/3 allowed), true/false,
lists [a, b, c], anything else is a string.
reserved keys: experiment (required), seed (default 0), output_dir (default results).

IDX files (net-* experiments, keys images/labels/test_images/test_labels):
big-endian header of two zero bytes, a type byte 0x08 (unsigned byte), a
dimension count byte, then one 4-byte unsigned size per dimension, followed
by the row-major data.  Images are flattened and divided by 255; labels are
a 1-D file of class indices.
"""


def _epilog() -> str:
    parts = [CONFIG_HELP, "experiments and their keys:"]
    parts += [describe(EXPERIMENTS[name]) for name in EXPERIMENTS]
    parts.append(f"\n--jobs falls back to ${JOBS_ENV}, then 1.")
    return "\n\n".join(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prune-lab",
        description="Run pruning-theory experiments from flat key=value configs and write CSV tables.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment and write <experiment>.csv plus a .meta.txt sidecar")
    run_p.add_argument("config", help="config file")
    run_p.add_argument("--jobs", type=int, default=None, help=f"worker processes (default ${JOBS_ENV} or 1)")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=None, help="override the output directory")
    val_p = sub.add_parser("validate", help="check a config and list derived quantities without running")
    val_p.add_argument("config", help="config file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        check = validate(config)
        print(describe_validation(check, config))
        return EXIT_OK if check.ok else EXIT_CONFIG

    if args.seed is not None:
        if args.seed < 0:
            print("--seed must be non-negative", file=sys.stderr)
            return EXIT_CONFIG
        config.seed = args.seed
    if args.out is not None:
        config.output_dir = args.out
    try:
        table = run(config, args.jobs)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except PruneLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_FAILURE
    csv_path, meta_path = write_outputs(table, config.output_dir)
    print(f"wrote {csv_path} ({len(table.rows)} rows) and {meta_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
