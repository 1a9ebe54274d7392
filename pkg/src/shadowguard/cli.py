"""Command-line entry point: ``shadowguard <command> --config FILE [--seed S] [--out DIR]``.

Errors go to stderr as one JSON object and the process exits nonzero
(2 for invalid input, 1 for anything else).
"""

from __future__ import annotations

import argparse
import json
import sys

from shadowguard import experiments
from shadowguard.experiments import ConfigError, ExperimentConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shadowguard", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=experiments.version_string())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("bp-scan", "small-angle", "step-bound", "vqe", "ground-truth"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", choices=sorted(experiments.PRESETS), help="named experiment setup")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--n-seeds", type=int, help="number of seeds (overrides the config)")
        p.add_argument("--out", default=".", help="output directory")
    b = sub.add_parser("budget")
    b.add_argument("--config", help="JSON config with k, L, epsilon, delta, purity")
    b.add_argument("--k", type=int)
    b.add_argument("--L", type=int)
    b.add_argument("--epsilon", type=float)
    b.add_argument("--delta", type=float)
    b.add_argument("--purity", type=float)
    b.add_argument("--json", action="store_true", help="print JSON instead of text")
    return parser


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    data.setdefault("experiment", args.command)
    if data["experiment"] != args.command:
        raise ConfigError(f"config is for {data['experiment']!r}, not {args.command!r}")
    if getattr(args, "preset", None):
        data["preset"] = args.preset
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "n_seeds", None) is not None:
        data["n_seeds"] = args.n_seeds
    return ExperimentConfig.from_dict(data)


def _budget(args) -> int:
    data = {"k": 2, "L": 10, "epsilon": 0.1, "delta": 0.1, "purity": 1.0}
    if args.config:
        with open(args.config) as fh:
            data.update({k: v for k, v in json.load(fh).items() if k in data})
    for key in data:
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    try:
        result = experiments.cmd_budget(**data)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.json:
        print(json.dumps(result))
    else:
        print(f"observables (k={data['k']}, L={data['L']}): T = {result['observables']}")
        print(f"purity (bound {data['purity']}): T = {result['purity_budget']}")
        print(f"gradient, per shifted point: T = {result['gradient']}")
    return 0


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "budget":
        return _budget(args)
    config = _load_config(args)
    if args.command == "bp-scan":
        experiments.cmd_bp_scan(config, args.out)
    elif args.command == "small-angle":
        experiments.cmd_small_angle(config, args.out)
    elif args.command == "step-bound":
        experiments.cmd_step_bound(config, args.out)
    elif args.command == "vqe":
        results = experiments.cmd_vqe(config, args.out)
        print(json.dumps({"runs": len(results), "out": args.out}))
    elif args.command == "ground-truth":
        print(json.dumps(experiments.cmd_ground_truth(config, args.out), indent=1))
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
