"""``modalsim``: run one scenario and write its data table and summary."""
from __future__ import annotations

import argparse
import sys

from .config import SCENARIOS, validate_config
from .errors import ConfigError, InvariantViolation
from .scenarios import run_scenario, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="modalsim",
        description="Relational modal-interpretation measurement simulator.",
    )
    p.add_argument("--scenario", help="scenario to run (overrides the config file)")
    p.add_argument("--config", help="TOML configuration file; omitted keys take scenario defaults")
    p.add_argument("--seed", type=_u64, help="random seed (overrides the config file)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--list-scenarios", action="store_true", help="print the available scenarios and exit")
    p.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_scenarios:
        print("\n".join(SCENARIOS))
        return EXIT_OK
    try:
        cfg = validate_config(args.config, args.scenario, args.seed)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        print(cfg.to_toml(), end="")
        return EXIT_OK
    try:
        result = run_scenario(cfg)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    data, summary = write_outputs(result, cfg, args.out or cfg.output_dir)
    for m in result.metrics:
        if m.passed is not None:
            print(f"{m.verdict}  {m.name} = {m.value} ({m.threshold})")
    print(f"wrote {data} and {summary}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
