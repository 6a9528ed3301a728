"""Command-line front end: validate configs, run scenarios, sweep, oracles.

Exit codes: 0 success, 1 configuration/validation failure, 2 simulation
failure (divergence, freestream floor, gimbal lock).  Set FLAPSIM_LOG to
debug/info/warning/error for verbosity; FLAPSIM_BACKEND selects the kernel
backend (see flapsim.backend).
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .aero import SpanOperator
from .errors import ConfigError, FlapsimError, SimulationError, ValidationError
from .harness import (run_scenario, sweep, validate_setup, write_summary_json,
                      write_sweep_csv, write_trace_csv)
from . import model as model_mod

log = logging.getLogger("flapsim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SIMULATION = 2


def _setup_logging():
    level = os.environ.get("FLAPSIM_LOG", "warning").strip().lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO,
              "warning": logging.WARNING, "error": logging.ERROR}
    logging.basicConfig(
        level=levels.get(level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _parse_overrides(pairs):
    out = []
    for item in pairs or []:
        if "=" not in item:
            raise ValidationError("override", f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out.append((key.strip(), value.strip()))
    return out


def _route_overrides(overrides, raws):
    """Apply key=value overrides to the raw config dicts.

    Keys may carry an explicit ``robot.``/``gait.``/``scenario.`` prefix;
    bare keys are routed to whichever config already holds that path, and
    must be unambiguous.
    """
    for key, value in overrides:
        head = key.split(".", 1)
        if head[0] in raws and len(head) > 1:
            model_mod.apply_override(raws[head[0]], head[1], value)
            continue
        owners = [name for name, raw in raws.items() if _path_exists(raw, key)]
        if not owners:
            raise ValidationError(key, "override matches no known config field")
        if len(owners) > 1:
            raise ValidationError(
                key, f"ambiguous override (found in {', '.join(owners)}); "
                     "prefix with robot./gait./scenario.")
        model_mod.apply_override(raws[owners[0]], key, value)


def _path_exists(raw, dotted):
    node = raw
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return False
        node = node[part]
    return True


def _load_all(args):
    raws = {
        "robot": model_mod._load_json(
            args.robot or model_mod.default_config_path("aerobat.json")),
        "gait": model_mod._load_json(
            args.gait or model_mod.default_config_path("gait_2hz.json")),
        "scenario": model_mod._load_json(
            args.scenario or model_mod.default_config_path("scenario_tethered.json")),
    }
    _route_overrides(_parse_overrides(args.override), raws)
    robot = model_mod.robot_from_dict(raws["robot"])
    gait = model_mod.gait_from_dict(raws["gait"])
    scenario = model_mod.scenario_from_dict(raws["scenario"])
    return robot, gait, scenario


def cmd_validate(args):
    robot, gait, scenario = _load_all(args)
    validate_setup(robot, gait, scenario)
    op = SpanOperator(robot)
    stations = ", ".join(f"{y:.4f}" for y in robot.elements.y)
    print(f"robot: {robot.name}")
    print(f"  total mass: {robot.total_mass_kg:.6g} kg")
    print(f"  wingspan: {robot.span_m:.6g} m, root chord: {robot.chord0_m:.6g} m")
    print(f"  blade elements ({robot.n_elements}) at y [m]: {stations}")
    print(f"  collocation condition estimate: {op.condition:.4g}")
    print(f"gait: {gait.waveform} at {gait.frequency_hz:.6g} Hz")
    print(f"scenario: {scenario.mode}, wind {scenario.wind_mps.tolist()} m/s, "
          f"dt {scenario.dt_s:.6g} s, duration {scenario.duration_s:.6g} s")
    print("configuration OK")
    return EXIT_OK


def cmd_run(args):
    robot, gait, scenario = _load_all(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    result = run_scenario(robot, gait, scenario)
    trace = write_trace_csv(outdir / "trace.csv", result)
    summary = write_summary_json(outdir / "summary.json", result.summary)
    stats = result.summary["cycle_stats"]
    lift = stats["mean_lift_n"] if stats else float("nan")
    drag = stats["mean_drag_n"] if stats else float("nan")
    print(f"run: mode={scenario.mode} model={scenario.aero_model} "
          f"wind={np.linalg.norm(scenario.wind_mps):.3g} m/s "
          f"f={gait.frequency_hz:.3g} Hz -> mean lift {lift:.5g} N, "
          f"mean drag {drag:.5g} N ({result.summary['n_rows']} rows)")
    log.info("wrote %s and %s", trace, summary)
    return EXIT_OK


def cmd_sweep(args):
    robot, gait, scenario = _load_all(args)
    validate_setup(robot, gait, scenario)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    result = sweep(robot, gait, scenario, jobs=args.jobs)
    write_sweep_csv(outdir / "sweep.csv", result)
    summary = {
        "grid_wind_mps": list(scenario.sweep_wind_mps),
        "grid_frequency_hz": list(scenario.sweep_frequency_hz or [gait.frequency_hz]),
        "points": result.points,
    }
    write_summary_json(outdir / "summary.json", summary)
    for point in result.points:
        print(f"sweep: wind={point['wind_mps']:.3g} f={point['frequency_hz']:.3g} "
              f"lift(unsteady)={point['lift_unsteady_n']:.5g} N "
              f"lift(quasi-steady)={point['lift_quasisteady_n']:.5g} N "
              f"[{point['status']}]")
    failed = [p for p in result.points if p["status"] != "ok"]
    if failed:
        log.warning("%d of %d sweep points failed", len(failed), len(result.points))
    return EXIT_OK


def cmd_oracle(args):
    from .oracles import run_suite
    checks, passed = run_suite(args.suite)
    for check in checks:
        print(check.line())
    print(f"oracle {args.suite}: {'all passed' if passed else 'FAILURES'} "
          f"({sum(c.passed for c in checks)}/{len(checks)})")
    return EXIT_OK if passed else EXIT_CONFIG


def _add_config_args(p, with_out):
    p.add_argument("--robot", help="robot JSON (default: bundled aerobat)")
    p.add_argument("--gait", help="gait JSON (default: bundled 2 Hz sinusoid)")
    p.add_argument("--scenario", help="scenario JSON (default: bundled tethered)")
    p.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="dotted-path config override, repeatable")
    if with_out:
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for sweeps (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flapsim",
        description="Flapping-wing MAV flight dynamics simulator",
    )
    parser.add_argument("--version", action="version", version=f"flapsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load configs and report derived quantities")
    _add_config_args(p, with_out=False)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="run one scenario, write trace.csv + summary.json")
    _add_config_args(p, with_out=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run the scenario sweep grid, write sweep.csv")
    _add_config_args(p, with_out=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("oracle", help="run an independent-oracle suite")
    p.add_argument("suite", choices=["wagner", "memory", "liftingline",
                                     "energy", "pendulum", "all"])
    p.set_defaults(fn=cmd_oracle)
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except FlapsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
