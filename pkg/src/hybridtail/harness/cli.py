"""Command line entry point: ``hybridtail <mode> --config FILE``."""

import argparse
import logging
import sys

from ..errors import ConfigError
from ..streams import default_workers
from .config import MODES, load_config
from .runner import run

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def build_parser():
    ap = argparse.ArgumentParser(
        prog="hybridtail",
        description="Monte Carlo and asymptotic tails of a fluid buffer fed by Gaussian noise plus an On-Off source.",
    )
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="experiment file (see README for the grammar)")
    ap.add_argument("--seed", type=int, default=None, help="override the seed in the config")
    ap.add_argument("--out", default="report.csv", help="CSV output path (default: report.csv)")
    ap.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: $HYBRIDTAIL_WORKERS or 1)")
    ap.add_argument("--strict", action="store_true",
                    help="exit 1 on failed validation, missing asymptotes or unsupported regimes")
    ap.add_argument("--no-figures", action="store_true", help="skip the PNG figure and gnuplot script")
    ap.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = load_config(args.config).with_overrides(mode=args.mode, seed=args.seed)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    workers = default_workers() if args.workers is None else max(1, args.workers)
    result = run(config, out=args.out, workers=workers, strict=args.strict, make_figures=not args.no_figures)
    print(result.summary)
    if args.out:
        print("wrote %s" % args.out)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
