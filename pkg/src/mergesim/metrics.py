"""Mainline disturbance measures and the aggressiveness-grid sweep."""

import copy
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .config import ConfigError, RunConfig
from .world import (DECISION, TrajectoryLog, load_scenario,
                    scenario_definition, run)


@dataclass(frozen=True)
class DisturbanceReport:
    d_long: float            # m, integrated speed deficit
    d_lat: float             # m, lateral displacement over lane changes
    lane_changes: int
    collision: bool = False
    forced_stop: bool = False
    q_merge: Optional[float] = None
    q_mainline: Optional[float] = None
    seed: int = 0


@dataclass
class DisturbanceGrid:
    q_merge_axis: Tuple[float, ...]
    q_mainline_axis: Tuple[float, ...]
    cells: Dict[Tuple[float, float], DisturbanceReport] = field(default_factory=dict)

    def report(self, q_merge: float, q_mainline: float) -> DisturbanceReport:
        return self.cells[(q_merge, q_mainline)]


def longitudinal_disturbance(log: TrajectoryLog, vehicle_id: str,
                             v0: float) -> float:
    """Trapezoidal integral of the speed deficit below v0 over the run."""
    rows = log.vehicle_rows(vehicle_id)
    deficit = [max(v0 - r[4], 0.0) for r in rows]
    total = 0.0
    for i in range(1, len(deficit)):
        total += 0.5 * (deficit[i - 1] + deficit[i]) * (rows[i][0] - rows[i - 1][0])
    return total


def _maneuver_segments(rows):
    """Maximal runs of steps spent in a lateral maneuver.

    Yields (start_index, end_index_exclusive, maneuver) for every run of
    'merge' or 'change' rows.
    """
    start = None
    kind = None
    for i, r in enumerate(rows):
        m = r[7]
        if m in ("merge", "change"):
            if start is None:
                start, kind = i, m
            elif m != kind:
                yield start, i, kind
                start, kind = i, m
        else:
            if start is not None:
                yield start, i, kind
                start = None
    if start is not None:
        yield start, len(rows), kind


def lane_change_events(log: TrajectoryLog, vehicle_id: str):
    """(maneuver, lateral displacement, completed) per maneuver segment.

    A completed segment settles on a new lane and contributes the exact
    center-to-center offset; a segment cut off by the end of the run
    contributes whatever lateral motion it actually caused.
    """
    rows = log.vehicle_rows(vehicle_id)
    centers = log.geometry.centers
    out = []
    for start, end, kind in _maneuver_segments(rows):
        start_lane = rows[start][6]
        if end < len(rows):
            end_lane = rows[end][6]
            moved = abs(centers[end_lane] - centers[start_lane])
            completed = end_lane != start_lane
            if not completed:
                moved = abs(rows[end][2] - rows[start][2])
        else:
            completed = False
            moved = abs(rows[-1][2] - rows[start][2])
        out.append((kind, moved, completed))
    return out


def lateral_disturbance(log: TrajectoryLog, vehicle_id: str) -> float:
    """Total lateral displacement across lane-change maneuvers."""
    return sum(moved for _, moved, _ in lane_change_events(log, vehicle_id))


def lane_change_count(log: TrajectoryLog, vehicle_id: str) -> int:
    return sum(1 for kind, _, done in lane_change_events(log, vehicle_id)
               if done and kind == "change")


def sweep_scenario(base: dict, q_merge: float, q_mainline: float,
                   merge_id: str = "merging",
                   mainline_id: str = "vehicle4") -> dict:
    """Scenario variant with a decision-driven adjacent mainline vehicle."""
    data = copy.deepcopy(base)
    found = set()
    for item in data["vehicles"]:
        if item["id"] == merge_id:
            item["kind"] = DECISION
            item["q"] = q_merge
            found.add(merge_id)
        elif item["id"] == mainline_id:
            item["kind"] = DECISION
            item["q"] = q_mainline
            found.add(mainline_id)
    missing = {merge_id, mainline_id} - found
    if missing:
        raise ConfigError(f"sweep scenario lacks vehicles: {sorted(missing)}")
    return data


def measure_cell(base: dict, q_merge: float, q_mainline: float,
                 cfg: RunConfig, mainline_id: str = "vehicle4") -> DisturbanceReport:
    cell_cfg = copy.deepcopy(cfg)
    cell_cfg.q_overrides = {}
    world = load_scenario(sweep_scenario(base, q_merge, q_mainline,
                                         mainline_id=mainline_id), cell_cfg)
    v0 = next(v.v_preset for v in world.vehicles if v.vehicle_id == mainline_id)
    log = run(world)
    return DisturbanceReport(
        d_long=longitudinal_disturbance(log, mainline_id, v0),
        d_lat=lateral_disturbance(log, mainline_id),
        lane_changes=lane_change_count(log, mainline_id),
        collision=log.collision is not None,
        forced_stop=log.forced_stop,
        q_merge=q_merge, q_mainline=q_mainline, seed=cfg.seed)


def aggressiveness_sweep(base_scenario, q_merge_grid, q_mainline_grid,
                         cfg: RunConfig, jobs: int = 1) -> DisturbanceGrid:
    """Disturbance of the adjacent mainline vehicle per aggressiveness pair.

    Cells are independent runs; a collision flags its cell but the grid is
    still returned in full.
    """
    q_merge_grid = tuple(q_merge_grid)
    q_mainline_grid = tuple(q_mainline_grid)
    if not q_merge_grid or not q_mainline_grid:
        raise ConfigError("sweep grids must be non-empty")
    for q in (*q_merge_grid, *q_mainline_grid):
        if not 0.0 <= q <= 1.0:
            raise ConfigError(f"grid aggressiveness {q} outside [0, 1]")
    base = scenario_definition(base_scenario)
    grid = DisturbanceGrid(q_merge_grid, q_mainline_grid)
    pairs = [(qm, ql) for ql in q_mainline_grid for qm in q_merge_grid]
    if jobs > 1:
        import multiprocessing
        with multiprocessing.Pool(jobs) as pool:
            reports = pool.starmap(
                _cell_job, [(base, qm, ql, cfg) for qm, ql in pairs])
        for (qm, ql), report in zip(pairs, reports):
            grid.cells[(qm, ql)] = report
    else:
        for qm, ql in pairs:
            grid.cells[(qm, ql)] = measure_cell(base, qm, ql, cfg)
    return grid


def _cell_job(base, qm, ql, cfg):
    return measure_cell(base, qm, ql, cfg)


GRID_COLUMNS = ("q_merge", "q_mainline", "d_long_m", "d_lat_m",
                "lane_changes", "collision", "forced_stop", "seed")


def grid_to_csv(grid: DisturbanceGrid) -> str:
    lines = [",".join(GRID_COLUMNS)]
    for ql in grid.q_mainline_axis:
        for qm in grid.q_merge_axis:
            r = grid.report(qm, ql)
            lines.append(f"{qm:.3f},{ql:.3f},{r.d_long:.6f},{r.d_lat:.6f},"
                         f"{r.lane_changes},{int(r.collision)},"
                         f"{int(r.forced_stop)},{r.seed}")
    return "\n".join(lines) + "\n"
