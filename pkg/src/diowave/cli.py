"""Command line: ``diowave <scenario> [--config cfg.json] [--set k=v ...] --out DIR``.

Exit status: 0 when every check passes, 1 on a failed check (including a
fixture mismatch or a numerical breakdown of the run), 2 on configuration or
I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SCENARIOS, ConfigError, load_config
from .effective import StepSizeError
from .scenarios import FixtureMismatch, run_scenario
from .waveguide import BlowUpError

log = logging.getLogger("diowave")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diowave", description="Quasi-resonant waveguide NLS experiments")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config key (JSON value)")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.scenario, args.config, args.overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        checks, summary = run_scenario(cfg, args.out)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FixtureMismatch as e:
        print(f"fixture error: {e}", file=sys.stderr)
        return 1
    except (StepSizeError, BlowUpError) as e:
        print(f"run failed: {e}", file=sys.stderr)
        return 1
    ok = all(c.passed for c in checks)
    if not args.quiet:
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.id:<28} {c.measured!r:<24} {c.bound}  {c.note}".rstrip())
        print(f"summary: {summary}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
