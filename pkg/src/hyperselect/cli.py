"""Command-line front end: `hyperselect <scenario> --config <path>`.

Exit codes: 0 on success, 2 on an invalid configuration, 3 on an invariant
violation inside a pipeline (a duality mismatch, a stalled iteration, a
census contradiction), 4 when a truncation is too shallow to settle a
membership.  Failures print a single machine-readable JSON record to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .borel import DepthInsufficient
from .scenarios import SCENARIOS, ConfigError, parse_config_file


def _fail(code, kind, message):
    sys.stderr.write(json.dumps(
        {"error": kind, "message": str(message)}, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hyperselect",
        description="Run one of the bundled experiment scenarios.")
    parser.add_argument("scenario", help=f"one of: {', '.join(sorted(SCENARIOS))}")
    parser.add_argument("--config", default=None,
                        help="key=value config file; omit for scenario defaults")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out", help="output directory")
    args = parser.parse_args(argv)

    if args.scenario not in SCENARIOS:
        return _fail(2, "ConfigError",
                     f"unknown scenario {args.scenario!r};"
                     f" choose from {', '.join(sorted(SCENARIOS))}")
    try:
        params = parse_config_file(args.config) if args.config else {}
    except ConfigError as err:
        return _fail(2, "ConfigError", err)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        files = SCENARIOS[args.scenario](params, args.seed, out)
    except ConfigError as err:
        return _fail(2, "ConfigError", err)
    except DepthInsufficient as err:
        return _fail(4, "DepthInsufficient", err)
    except Exception as err:  # noqa: BLE001 - every library error is an invariant report
        return _fail(3, type(err).__name__, err)
    print(json.dumps({"scenario": args.scenario, "seed": args.seed,
                      "files": sorted(str(f) for f in files)}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
