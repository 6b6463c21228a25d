"""``lcalab`` command line.

Exit status: 0 success, 1 invalid configuration, 2 property-battery failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import __version__
from ..errors import LCAError
from .config import KINDS, load_config, parse_config
from .runs import run

EXIT_OK, EXIT_CONFIG, EXIT_BATTERY, EXIT_IO = 0, 1, 2, 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcalab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", type=Path, help="TOML experiment file (defaults are used if omitted)")
        p.add_argument("--seed", type=_u64, help="master seed; overrides the config")
        p.add_argument("--workers", type=_positive, default=None)
        p.add_argument("--out", type=Path, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is not None:
            cfg = load_config(args.config, kind=args.kind, seed=args.seed)
        else:
            cfg = parse_config({}, kind=args.kind, seed=args.seed)
        if args.workers is not None:
            cfg.workers = args.workers
        result = run(cfg, args.out)
    except OSError as exc:
        print(f"lcalab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LCAError as exc:
        print(f"lcalab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.kind == "verify-core":
        sys.stdout.write(result.out.read_text())
    else:
        for key, value in result.summary.items():
            print(f"{key}={value}")
    print(f"wrote {result.out}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
