"""Command-line entry point: ``mascope {list,run,validate,compare,prop1}``."""

import argparse
import os
import sys
import time
from pathlib import Path

from .algorithms import ENGINES, run
from .checks import validate_config
from .counterexample import check_fixed_point
from .errors import MascopeError, UsageError
from .output import SVG_COLUMNS, emit_csv, emit_meta, emit_svg, load_config
from .scenarios import SCENARIOS, get_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_OUT = "mascope_out"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="mascope", description="distributed subgradient averaging experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list", help="list packaged scenarios")

    def add_run_options(p):
        p.add_argument("--scenario")
        p.add_argument("--config", help="key = value file (scenario, engine, seed, iters, step.*, network.*, log.stride)")
        p.add_argument("--seed", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--stride")
        p.add_argument("--out")
        p.add_argument("--column", choices=sorted(SVG_COLUMNS), default=None)

    p = sub.add_parser("run", help="run one scenario and write CSV, metadata and SVG")
    add_run_options(p)
    p.add_argument("--engine", choices=ENGINES)

    p = sub.add_parser("validate", help="check the standing assumptions for a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("compare", help="run several engines on shared data")
    add_run_options(p)
    p.add_argument("--engines", required=True, help="comma-separated engine names")

    p = sub.add_parser("prop1", help="fixed-point check of dual averaging on the two-agent counterexample")
    p.add_argument("--iters", type=int, default=500)
    return parser


def _number(cfg, key, kind, default):
    if key not in cfg:
        return default
    try:
        return kind(cfg[key])
    except ValueError:
        raise UsageError(f"config key {key!r} needs a number, got {cfg[key]!r}") from None


def _settings(args):
    """Merge a config file with command-line flags; flags win."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    scenario = args.scenario or cfg.get("scenario")
    if not scenario:
        raise UsageError("--scenario (or a config file with 'scenario') is required")
    settings = {
        "scenario": scenario,
        "engine": getattr(args, "engine", None) or cfg.get("engine"),
        "seed": args.seed if args.seed is not None else _number(cfg, "seed", int, 0),
        "iters": args.iters if args.iters is not None else _number(cfg, "iters", int, None),
        "stride": args.stride or cfg.get("log.stride", "geometric"),
        "step_kind": cfg.get("step.kind"),
        "step_scale": _number(cfg, "step.scale", float, None),
        "network_kind": cfg.get("network.kind"),
        "network_d": _number(cfg, "network.d", float, None),
    }
    if settings["engine"] is not None and settings["engine"] not in ENGINES:
        raise UsageError(f"unknown engine {settings['engine']!r}")
    return settings


def _build(settings, engine=None):
    scenario = get_scenario(settings["scenario"])
    return scenario, scenario.build(
        seed=settings["seed"], engine=engine or settings["engine"], iters=settings["iters"],
        stride=settings["stride"], step_kind=settings["step_kind"], step_scale=settings["step_scale"],
        network_kind=settings["network_kind"], network_d=settings["network_d"])


def _out_dir(args):
    return Path(args.out or os.environ.get("MASCOPE_OUT") or DEFAULT_OUT)


def _default_column(name):
    return "rel_gap_iter" if name.startswith("robust") else "dist_to_opt"


def cmd_list(args, out):
    for name, sc in SCENARIOS.items():
        print(f"{name:20s} {sc.engine:9s} K={sc.iters:<7d} {sc.doc}", file=out)
    return EXIT_OK


def cmd_run(args, out):
    settings = _settings(args)
    scenario, config = _build(settings)
    trace = run(config)
    base = _out_dir(args) / f"{scenario.name}_{config.engine}"
    emit_csv(trace, base.with_suffix(".csv"))
    emit_meta(trace, base.with_suffix(".meta"))
    emit_svg([trace], base.with_suffix(".svg"), column=args.column or _default_column(scenario.name),
             labels=[f"{scenario.name} {config.engine}"], title=scenario.doc)
    last = trace.rows[-1]
    print(f"{scenario.name} [{config.engine}] k={last.k} dist_to_opt={last.dist_to_opt:.6g} "
          f"rel_gap_iter={last.rel_obj_gap_iterates:.6g} -> {base}.csv", file=out)
    return EXIT_OK


def cmd_compare(args, out):
    settings = _settings(args)
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    if len(engines) < 2 or any(e not in ENGINES for e in engines):
        raise UsageError(f"--engines needs at least two of {', '.join(ENGINES)}")
    traces = []
    out_dir = _out_dir(args)
    name = settings["scenario"]
    for engine in engines:
        scenario, config = _build(settings, engine)
        trace = run(config)
        base = out_dir / f"{scenario.name}_{engine}"
        emit_csv(trace, base.with_suffix(".csv"))
        emit_meta(trace, base.with_suffix(".meta"))
        traces.append(trace)
        last = trace.rows[-1]
        print(f"{engine:9s} k={last.k} dist_to_opt={last.dist_to_opt:.6g} "
              f"rel_gap_iter={last.rel_obj_gap_iterates:.6g}", file=out)
    emit_svg(traces, out_dir / f"{name}_compare.svg", column=args.column or _default_column(name),
             labels=[f"{name} {e}" for e in engines], title=f"{name}: {' vs '.join(engines)}")
    return EXIT_OK


def cmd_validate(args, out):
    config = get_scenario(args.scenario).build(seed=args.seed, iters=0, with_reference=False)
    checks = validate_config(config)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.detail}", file=out)
    return EXIT_OK if all(c.ok for c in checks) else EXIT_FAIL


def cmd_prop1(args, out):
    start = time.perf_counter()
    result = check_fixed_point(args.iters)
    for line in result.lines():
        print(line, file=out)
    print(f"elapsed {time.perf_counter() - start:.3f}s", file=out)
    return EXIT_OK if result.passed else EXIT_FAIL


COMMANDS = {"list": cmd_list, "run": cmd_run, "validate": cmd_validate,
            "compare": cmd_compare, "prop1": cmd_prop1}


def main(argv=None, out=None):
    """Run the CLI; returns 0 on success, 1 on a failed check, 2 on a usage error."""
    out = out or sys.stdout
    try:
        args = _build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MascopeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
