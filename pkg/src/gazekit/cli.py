"""Command-line front end: run scenarios, inspect traces, serve live sessions."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Dict, Optional, Tuple

from .controller import ControllerConfig
from .core import GazeKitError
from .events import parse_scenario
from .metrics import compute_metrics
from .planner import ConfigError, PlannerConfig
from .simulator import PLANNED, REACTIVE, compare, diff_traces, read_trace, run, write_trace


def split_config_overrides(raw: Dict[str, Any]) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Split a flat override dict into planner and controller fields."""
    planner_keys = set(PlannerConfig.field_names())
    controller_keys = set(ControllerConfig.field_names())
    unknown = set(raw) - planner_keys - controller_keys
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    return (
        {k: v for k, v in raw.items() if k in planner_keys},
        {k: v for k, v in raw.items() if k in controller_keys},
    )


def load_configs(path: Optional[str]) -> Tuple[Optional[PlannerConfig], Optional[ControllerConfig]]:
    if path is None:
        return None, None
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a flat JSON object")
    p_over, c_over = split_config_overrides(raw)
    return PlannerConfig().replace(p_over), ControllerConfig().replace(c_over)


def _load_scenario(path: str):
    with open(path, "rb") as f:
        return parse_scenario(f.read())


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    pcfg, ccfg = load_configs(args.config)
    records = run(scenario, args.system, seed=args.seed,
                  planner_config=pcfg, controller_config=ccfg)
    if args.out:
        write_trace(args.out, records)
        print(f"wrote {len(records)} ticks to {args.out}")
    else:
        for r in records:
            print(json.dumps(r.to_dict(), sort_keys=True))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    records = read_trace(args.trace)
    report = compute_metrics(records)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    pcfg, ccfg = load_configs(args.config)
    result = compare(scenario, seed=args.seed, planner_config=pcfg, controller_config=ccfg)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    actual = read_trace(args.trace)
    golden = read_trace(args.golden)
    problems = diff_traces(actual, golden)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    print(f"traces match ({len(actual)} ticks)")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    pcfg, ccfg = load_configs(args.config)
    serve(args.port, planner_config=pcfg, controller_config=ccfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write a trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--system", choices=[PLANNED, REACTIVE], default=PLANNED)
    p.add_argument("--out", help="trace output path (stdout when omitted)")
    p.add_argument("--config", help="JSON file with config overrides")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("metrics", help="compute metrics from a trace file")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", help="run both systems and print paired metrics")
    p.add_argument("--scenario", required=True)
    p.add_argument("--config", help="JSON file with config overrides")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="check a trace against a golden trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--golden", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("serve", help="serve live sessions on a TCP port")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--config", help="JSON file with config overrides")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GazeKitError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
