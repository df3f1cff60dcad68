"""Command-line surface: run scenarios, sweep aggressiveness grids, plot logs.

Exit codes: 0 success, 2 configuration error, 3 a collision occurred,
4 a forced stop occurred.
"""

import argparse
import json
import math
import os
import sys

from .config import ConfigError, RunConfig
from .logio import TrajectoryFileError, read_trajectory, write_atomic
from .metrics import (aggressiveness_sweep, grid_to_csv, lane_change_count,
                      longitudinal_disturbance)
from .road import LaneGeometry
from .svgplot import render
from .world import DECISION, load_scenario, run as run_world

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COLLISION = 3
EXIT_FORCED_STOP = 4

_CONFIG_FLAGS = {
    "dt": float, "epoch": float, "t_max": float, "noise_sigma": float,
    "jobs": int,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with config values")
    parser.add_argument("--scenario", help="built-in name or scenario file")
    parser.add_argument("--q", action="append", default=[], metavar="ID=VALUE",
                        help="aggressiveness override per vehicle id")
    parser.add_argument("--dt", type=float)
    parser.add_argument("--epoch", type=float)
    parser.add_argument("--t-max", dest="t_max", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--noise", action="store_true", default=None)
    parser.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config field")


def build_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: invalid JSON ({exc})")
    cfg = RunConfig.from_dict(data) if data else RunConfig()
    if args.scenario is not None:
        cfg.scenario = args.scenario
    for name in ("dt", "epoch", "t_max", "noise_sigma", "out_dir"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if args.noise is not None:
        cfg.noise = args.noise
    if args.seed is not None:
        cfg.seed = args.seed
    elif "MERGE_SIM_SEED" in os.environ and "seed" not in data:
        try:
            cfg.seed = int(os.environ["MERGE_SIM_SEED"])
        except ValueError:
            raise ConfigError("MERGE_SIM_SEED must be an integer")
    for raw in args.q:
        vid, _, value = raw.partition("=")
        if not _ or not vid:
            raise ConfigError(f"--q expects ID=VALUE, got {raw!r}")
        try:
            cfg.q_overrides[vid] = float(value)
        except ValueError:
            raise ConfigError(f"--q {raw!r}: value must be a number")
    for raw in args.set:
        key, _, value = raw.partition("=")
        if not _ or not hasattr(cfg, key):
            raise ConfigError(f"--set: unknown config field {key!r}")
        current = getattr(cfg, key)
        caster = type(current) if not isinstance(current, bool) else lambda s: s == "true"
        try:
            setattr(cfg, key, caster(value))
        except (TypeError, ValueError):
            raise ConfigError(f"--set {raw!r}: cannot parse value")
    return cfg.validate()


def _sat_distance(i_col: float) -> float:
    return -math.log(max(i_col, 1e-300)) if i_col < 1.0 else 0.0


def _summarize(log, world, cfg) -> dict:
    geometry = world.geometry
    vehicles = {}
    for veh in world.vehicles:
        rows = log.vehicle_rows(veh.vehicle_id)
        entry = {
            "kind": veh.kind,
            "q": veh.q if veh.kind == DECISION else None,
            "final_lane": rows[-1][6],
            "final_x_lat": round(rows[-1][2], 4),
            "final_y_long": round(rows[-1][3], 4),
            "final_v": round(rows[-1][4], 4),
            "min_gap_m": round(min(_sat_distance(r[10]) for r in rows), 4),
        }
        if veh.kind == DECISION:
            merge_events = [e for e in log.events
                            if e.get("vehicle") == veh.vehicle_id
                            and e["event"] == "merge_complete"]
            entry["merge_time"] = merge_events[0]["t"] if merge_events else None
            entry["lane_changes"] = lane_change_count(log, veh.vehicle_id)
            entry["d_long_m"] = round(
                longitudinal_disturbance(log, veh.vehicle_id, veh.v_preset), 4)
        vehicles[veh.vehicle_id] = entry
    return {
        "scenario": cfg.scenario,
        "t_end": round(log.end_time, 4),
        "collision": log.collision,
        "forced_stop": log.forced_stop,
        "events": log.events,
        "vehicles": vehicles,
        "geometry": {
            "lane_centers": list(geometry.centers),
            "lane_width": geometry.lane_width,
            "merge": {"start": geometry.merge_start,
                      "entrance_length": geometry.entrance_length,
                      "extension": geometry.extension},
        },
        "config": cfg.to_dict(),
    }


def cmd_run(args) -> int:
    cfg = build_config(args)
    if args.dump_config:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    world = load_scenario(cfg.scenario, cfg)
    log = run_world(world)
    base = args.output or os.path.join(
        cfg.out_dir, os.path.splitext(os.path.basename(cfg.scenario))[0])
    traj_path = base + ".csv"
    summary_path = base + ".summary.json"
    summary = _summarize(log, world, cfg)
    log.write_csv(traj_path)
    write_atomic(summary_path,
                 json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"trajectory: {traj_path}")
    print(f"summary:    {summary_path}")
    for vid, entry in summary["vehicles"].items():
        if entry["kind"] != DECISION:
            continue
        merge_time = entry.get("merge_time")
        merged = f"merged at t={merge_time:.2f}s" if merge_time is not None \
            else "did not merge"
        print(f"  {vid}: q={entry['q']}, {merged}, final lane "
              f"{entry['final_lane']}, lane changes {entry['lane_changes']}, "
              f"min gap {entry['min_gap_m']:.2f} m")
    if log.collision:
        pair = " / ".join(log.collision["vehicles"])
        print(f"COLLISION at t={log.collision['t']:.2f}s between {pair}",
              file=sys.stderr)
        return EXIT_COLLISION
    if log.forced_stop:
        print("FORCED STOP: a merging vehicle ran out of room",
              file=sys.stderr)
        return EXIT_FORCED_STOP
    return EXIT_OK


def parse_grid(raw: str):
    parts = raw.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects start:stop:step, got {raw!r}")
    try:
        start, stop, step_size = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--grid {raw!r}: values must be numbers")
    if not (0.0 <= start <= stop <= 1.0):
        raise ConfigError(f"--grid {raw!r}: need 0 <= start <= stop <= 1")
    if step_size <= 0:
        raise ConfigError(f"--grid {raw!r}: step must be positive")
    count = int(round((stop - start) / step_size))
    values = [round(start + i * step_size, 10) for i in range(count + 1)]
    return tuple(v for v in values if v <= 1.0 + 1e-9)


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    grid_axis = parse_grid(args.grid)
    grid = aggressiveness_sweep(cfg.scenario, grid_axis, grid_axis, cfg,
                                jobs=cfg.jobs)
    base = args.output or os.path.join(cfg.out_dir, "sweep")
    path = base + ".csv"
    write_atomic(path, grid_to_csv(grid))
    print(f"grid: {path} ({len(grid.cells)} cells)")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        rows = read_trajectory(args.trajectory)
    except FileNotFoundError:
        raise ConfigError(f"trajectory file not found: {args.trajectory}")
    geometry = _geometry_for_plot(args)
    svg = render(rows, geometry)
    out = args.output or os.path.splitext(args.trajectory)[0] + ".svg"
    write_atomic(out, svg)
    print(f"svg: {out}")
    return EXIT_OK


def _geometry_for_plot(args) -> LaneGeometry:
    summary_path = args.summary
    if summary_path is None:
        stem = os.path.splitext(args.trajectory)[0]
        candidate = stem + ".summary.json"
        summary_path = candidate if os.path.exists(candidate) else None
    if summary_path is None:
        return LaneGeometry()
    try:
        with open(summary_path) as fh:
            geo = json.load(fh)["geometry"]
        return LaneGeometry(
            centers=tuple(geo["lane_centers"]), lane_width=geo["lane_width"],
            merge_start=geo["merge"]["start"],
            entrance_length=geo["merge"]["entrance_length"],
            extension=geo["merge"]["extension"])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read geometry from {summary_path}: {exc}")


def cmd_dump_config(args) -> int:
    cfg = build_config(args)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mergesim",
        description="Deterministic game-theoretic highway merging simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario")
    _add_common(p_run)
    p_run.add_argument("--output", help="output basename (default from scenario)")
    p_run.add_argument("--dump-config", action="store_true",
                       help="print the effective config and exit")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="aggressiveness grid sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--grid", required=True, metavar="START:STOP:STEP")
    p_sweep.add_argument("--jobs", type=int)
    p_sweep.add_argument("--output", help="output basename")
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plot", help="render a trajectory file to SVG")
    p_plot.add_argument("trajectory")
    p_plot.add_argument("--output")
    p_plot.add_argument("--summary", help="summary JSON holding the geometry")
    p_plot.set_defaults(func=cmd_plot)

    p_dump = sub.add_parser("dump-config", help="print the effective config")
    _add_common(p_dump)
    p_dump.set_defaults(func=cmd_dump_config)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TrajectoryFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
