"""Command-line surface: ``doafoundry <kind> --config ... | --preset ...``."""

from __future__ import annotations

import argparse
import sys

from .errors import DoaFoundryError
from .harness import (
    EXPERIMENT_KINDS,
    ScenarioConfig,
    list_builtin_scenarios,
    preset_config,
    run_experiment,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doafoundry",
        description="Direction-of-arrival experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    presets = sub.add_parser("presets", help="list the built-in scenarios")
    presets.set_defaults(command="presets")

    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="path to a JSON scenario file")
        p.add_argument("--preset", help="name of a built-in scenario")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        rows = list_builtin_scenarios()
        width = max(len(r["name"]) for r in rows)
        print(f"{'name':<{width}}  {'kind':<14}  {'trials':>7}  description")
        for r in rows:
            print(f"{r['name']:<{width}}  {r['kind']:<14}  {r['trials']:>7}  {r['description']}")
        return 0

    try:
        if args.config and args.preset:
            raise DoaFoundryError("pass either --config or --preset, not both")
        if args.config:
            cfg = ScenarioConfig.from_json(args.config)
        elif args.preset:
            cfg = preset_config(
                args.preset, seed=args.seed, trials=args.trials, out=args.out
            )
        else:
            raise DoaFoundryError("one of --config or --preset is required")
        if cfg.kind != args.command:
            raise DoaFoundryError(
                f"config kind {cfg.kind!r} does not match subcommand {args.command!r}"
            )
        if args.config:
            for fieldname in ("seed", "trials", "out"):
                value = getattr(args, fieldname)
                if value is not None:
                    setattr(cfg, fieldname, value)
        files, summary = run_experiment(cfg)
    except DoaFoundryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    print(f"config hash: {cfg.config_hash()}")
    for line in summary:
        print(f"  {line}")
    for f in files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
