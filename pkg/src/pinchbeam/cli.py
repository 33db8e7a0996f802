"""Command-line front end: run sweeps, validate configs, list built-ins.

Exit codes: 0 success, 2 configuration/usage error, 3 solver hard failure
under --strict.
"""

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError
from .harness import (
    ALGORITHMS,
    BUILTIN_CONFIGS,
    load_config,
    run_sweep,
    write_outputs,
)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pinchbeam",
        description="Downlink pinching-antenna beamforming experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep and write CSV results")
    _config_arg(run)
    run.add_argument("--out", default="results.csv", help="output CSV path")
    run.add_argument("--seed", type=int, help="override the RNG seed")
    run.add_argument("--drops", type=int, help="override the drop count")
    run.add_argument("--algo", action="append", choices=ALGORITHMS,
                     help="restrict to this algorithm (repeatable)")
    run.add_argument("--activation", choices=("continuous", "discrete"))
    run.add_argument("--power-model", choices=("equal", "proportional"))
    run.add_argument("--grid-points", type=int,
                     help="continuous-activation search grid size")
    run.add_argument("--profile", choices=("desk", "paper"))
    run.add_argument("--timing", action="store_true",
                     help="record wall-clock runtimes (breaks byte-for-byte "
                          "reproducibility of the CSV)")
    run.add_argument("--strict", action="store_true",
                     help="exit 3 if any solver fails")

    val = sub.add_parser("validate-config", help="check a config and exit")
    _config_arg(val)

    sub.add_parser("list-scenarios", help="list built-in configurations")
    return parser


def _config_arg(parser):
    parser.add_argument("--config", default="paper_defaults",
                        help="built-in name or path to an INI file")


def _resolve_config(name_or_path):
    if name_or_path in BUILTIN_CONFIGS:
        return BUILTIN_CONFIGS[name_or_path]
    try:
        return load_config(name_or_path)
    except FileNotFoundError:
        raise ConfigError(
            f"{name_or_path!r} is neither a built-in configuration nor a "
            "readable file (see `pinchbeam list-scenarios`)")


def _apply_overrides(config, args):
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.drops is not None:
        updates["n_drops"] = args.drops
    if args.algo:
        updates["algorithms"] = tuple(dict.fromkeys(args.algo))
    if args.activation:
        updates["activation"] = args.activation
    if args.power_model:
        updates["power_model"] = args.power_model
    if args.grid_points:
        updates["grid_points"] = args.grid_points
    if args.profile:
        updates["profile"] = args.profile
    if args.timing:
        updates["timing"] = True
    return replace(config, **updates).validated()


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name, cfg in BUILTIN_CONFIGS.items():
                print(f"{name}: {cfg.sweep_kind} over {list(cfg.sweep_values)}"
                      f" with {'/'.join(cfg.algorithms)}")
            return 0
        if args.command == "validate-config":
            _resolve_config(args.config).validated()
            print("configuration ok")
            return 0
        config = _apply_overrides(_resolve_config(args.config), args)
        result = run_sweep(config)
        write_outputs(result, args.out)
        print(f"wrote {args.out} ({len(result.rows)} rows, "
              f"{result.failures} failures)")
        if args.strict and result.failures:
            return 3
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
