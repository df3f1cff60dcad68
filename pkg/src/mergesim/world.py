"""World assembly, per-step control, fixed-step simulation and logging."""

from dataclasses import dataclass, replace, field
import json
import math
import random
from typing import Dict, List, Optional

from .config import ConfigError, RunConfig
from .driver import (ControllerGains, DriverProfile, blended_error,
                     longitudinal_accel, profile_from_q, steering_command)
from .dynamics import Controls, VehicleParams, VehicleState, step
from .perception import (PerceptionNoise, VehicleView, bumper_gap,
                         classify_vicinity, collision_index, rects_intersect)
from .planner import (ACCELERATE, CHANGE, DECELERATE, HOLD, KEEP, MERGE,
                      BrainState, decide, entrance_threat, merged_speed_ref)
from .road import LaneGeometry, lane_of

SCRIPTED = "scripted"
DECISION = "decision"

KMH = 1.0 / 3.6

BUILTIN_SCENARIOS = {
    "scenario1": {
        "geometry": {
            "lane_centers": [0.0, 3.3, 6.6, 9.9],
            "lane_width": 3.3,
            "merge": {"start": 50.0, "entrance_length": 100.0, "extension": 20.0},
        },
        "vehicles": [
            {"id": "vehicle1", "x0_m": 0.0, "y0_m": 30.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle2", "x0_m": 3.3, "y0_m": 30.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle3", "x0_m": 6.6, "y0_m": 30.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle4", "x0_m": 6.6, "y0_m": 5.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle5", "x0_m": 6.6, "y0_m": -10.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "merging", "x0_m": 9.9, "y0_m": 10.0, "v0_kmh": 70.0,
             "kind": DECISION, "q": 0.5},
        ],
    },
    "scenario2": {
        "geometry": {
            "lane_centers": [0.0, 3.3, 6.6, 9.9],
            "lane_width": 3.3,
            "merge": {"start": 50.0, "entrance_length": 100.0, "extension": 20.0},
        },
        "vehicles": [
            {"id": "vehicle1", "x0_m": 0.0, "y0_m": 10.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle2", "x0_m": 3.3, "y0_m": 10.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle3", "x0_m": 6.6, "y0_m": 10.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle4", "x0_m": 6.6, "y0_m": 5.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "vehicle5", "x0_m": 6.6, "y0_m": -10.0, "v0_kmh": 80.0, "kind": SCRIPTED},
            {"id": "merging", "x0_m": 9.9, "y0_m": 0.0, "v0_kmh": 70.0,
             "kind": DECISION, "q": 0.5},
        ],
    },
}

TRAJECTORY_COLUMNS = ("t", "id", "x_lat", "y_long", "v", "theta", "lane",
                      "maneuver", "accel_directive", "competing_id", "i_col",
                      "flags")


@dataclass
class SimVehicle:
    vehicle_id: str
    kind: str
    params: VehicleParams
    state: VehicleState
    v_preset: float
    q: float
    profile: DriverProfile
    brain: BrainState

    def view(self, geometry: LaneGeometry) -> VehicleView:
        s = self.state
        return VehicleView(self.vehicle_id, s.x, s.y, s.v_long, s.heading,
                           self.params.length, self.params.width,
                           lane_of(s.x, geometry), self.kind, self.q)


class TrajectoryLog:
    """Complete per-step record of a run on a uniform time grid."""

    def __init__(self, dt: float, geometry: LaneGeometry, cfg: RunConfig):
        self.dt = dt
        self.geometry = geometry
        self.cfg = cfg
        self.rows: List[tuple] = []
        self.events: List[dict] = []
        self.collision: Optional[dict] = None
        self.forced_stop: bool = False
        self.end_time: float = 0.0

    def append(self, row: tuple) -> None:
        self.rows.append(row)

    def vehicle_rows(self, vehicle_id: str) -> List[tuple]:
        out = [r for r in self.rows if r[1] == vehicle_id]
        if not out:
            raise KeyError(f"no such vehicle in log: {vehicle_id!r}")
        return out

    def vehicle_ids(self) -> List[str]:
        seen = []
        for r in self.rows:
            if r[1] not in seen:
                seen.append(r[1])
        return seen

    def write_csv(self, path: str) -> None:
        from .logio import write_atomic
        write_atomic(path, self.to_csv())

    def to_csv(self) -> str:
        lines = [",".join(TRAJECTORY_COLUMNS)]
        for r in self.rows:
            lines.append(
                f"{r[0]:.2f},{r[1]},{r[2]:.6f},{r[3]:.6f},{r[4]:.6f},"
                f"{r[5]:.6f},{r[6]},{r[7]},{r[8]},{r[9]},{r[10]:.6f},{r[11]}")
        return "\n".join(lines) + "\n"


class World:
    def __init__(self, geometry: LaneGeometry, vehicles: List[SimVehicle],
                 cfg: RunConfig):
        self.geometry = geometry
        self.vehicles = vehicles
        self.cfg = cfg
        self.profiles: Dict[str, DriverProfile] = {
            v.vehicle_id: v.profile for v in vehicles}
        self.gains: ControllerGains = cfg.gains()
        self.time = 0.0
        self.noise: Dict[str, PerceptionNoise] = {}
        if cfg.noise:
            for v in vehicles:
                rng = random.Random(f"{cfg.seed}:{v.vehicle_id}")
                self.noise[v.vehicle_id] = PerceptionNoise(
                    rng, cfg.noise_sigma, v.q)

    def snapshot(self) -> List[VehicleView]:
        return [v.view(self.geometry) for v in self.vehicles]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def scenario_definition(source) -> dict:
    """Scenario dict from a built-in name, a path, or a dict."""
    if isinstance(source, dict):
        return source
    if source in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[source]
    try:
        with open(source) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scenario: no built-in or file named {source!r}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {source!r}: invalid JSON ({exc})")


def load_scenario(source, cfg: RunConfig) -> World:
    """Build a world from a scenario definition, validating every field."""
    data = scenario_definition(source)
    geo = data.get("geometry", {})
    merge = geo.get("merge", {})
    try:
        geometry = LaneGeometry(
            centers=tuple(geo.get("lane_centers", (0.0, 3.3, 6.6, 9.9))),
            lane_width=float(geo.get("lane_width", 3.3)),
            merge_start=float(merge.get("start", 50.0)),
            entrance_length=float(merge.get("entrance_length", 100.0)),
            extension=float(merge.get("extension", 20.0)))
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}")
    params = cfg.vehicle_params()
    profile_cfg = cfg.profile_config()
    vehicles = []
    seen = set()
    for i, item in enumerate(data.get("vehicles", [])):
        where = f"vehicles[{i}]"
        vid = item.get("id")
        _require(isinstance(vid, str) and vid, f"{where}.id: missing or empty")
        _require(vid not in seen, f"{where}.id: duplicate id {vid!r}")
        seen.add(vid)
        x0 = float(item.get("x0_m", 0.0))
        _require(any(abs(x0 - c) < 1e-6 for c in geometry.centers),
                 f"{where}.x0_m: {x0} is not on a lane center")
        y0 = float(item.get("y0_m", 0.0))
        v0_kmh = float(item.get("v0_kmh", 0.0))
        _require(v0_kmh > 0, f"{where}.v0_kmh: must be positive, got {v0_kmh}")
        kind = item.get("kind", SCRIPTED)
        _require(kind in (SCRIPTED, DECISION),
                 f"{where}.kind: must be scripted or decision, got {kind!r}")
        q = item.get("q", 0.5)
        if vid in cfg.q_overrides:
            q = cfg.q_overrides[vid]
        _require(0.0 <= float(q) <= 1.0, f"{where}.q: must be in [0, 1], got {q}")
        q = float(q)
        v0 = v0_kmh * KMH
        lane = lane_of(x0, geometry)
        state = VehicleState(x=x0, y=y0, heading=0.0, v_long=v0)
        brain = BrainState(current_lane=lane, v_ref=v0,
                           needs_merge=(kind == DECISION
                                        and lane == geometry.merge_lane))
        vehicles.append(SimVehicle(
            vehicle_id=vid, kind=kind, params=params, state=state,
            v_preset=v0, q=q, profile=profile_from_q(q, profile_cfg),
            brain=brain))
    unknown = set(cfg.q_overrides) - seen
    _require(not unknown, f"q override for unknown vehicle ids: {sorted(unknown)}")
    return World(geometry, vehicles, cfg)


# --- per-step control -----------------------------------------------------


def _follow_gap_ref(profile: DriverProfile, v: float) -> float:
    return profile.lane_change_clearance + profile.follow_headway * v


def _brake_channel(profile, gains, gap, rel_speed, gap_ref) -> float:
    if gap >= gap_ref:
        return math.inf
    return longitudinal_accel(profile, gains, gap - gap_ref, rel_speed)


def _boxed_gap_ref(ego, leader, follower, follow_ref,
                   ahead_share: float = 0.5) -> float:
    """Leader-gap reference when boxed between two vehicles.

    A span shorter than two comfortable gaps is straddled at ahead_share
    of its free room rather than braking into the trailing vehicle;
    open-ended situations keep the plain following reference.
    """
    if follower is None or leader is None:
        return follow_ref
    free = bumper_gap(ego, leader) + bumper_gap(ego, follower)
    return min(follow_ref, max(free * ahead_share, 1.0))


def _slot_gap_ref(ego, veh, views_by_id, follow_ref, cfg) -> float:
    """Leader-gap target while aligning with an insertion slot.

    Aggressive drivers ride the back of the slot, leaving the vehicle
    they cut ahead of very little headway, but never so far back that the
    slot stops being enterable for them.
    """
    leader = views_by_id.get(veh.brain.slot_leader_id)
    follower = views_by_id.get(veh.brain.slot_follower_id)
    if leader is None or follower is None:
        return _boxed_gap_ref(ego, leader, follower, follow_ref)
    free = bumper_gap(ego, leader) + bumper_gap(ego, follower)
    rear_min = max(1.0, veh.profile.lane_change_clearance
                   - 0.8 * cfg.risk_tolerance(veh.q))
    front_ref = min(free * cfg.slot_ride_fraction(veh.q), free - rear_min)
    return min(follow_ref, max(front_ref, 1.0))


@dataclass
class Attention:
    """Ids picked at the decision epoch, re-resolved to fresh state each step."""
    lane_leaders: Dict[int, str] = field(default_factory=dict)
    own_follower_id: Optional[str] = None
    threat_id: Optional[str] = None


def _fresh_gap(ego: VehicleView, other_id: Optional[str], views_by_id):
    other = views_by_id.get(other_id)
    if other is None:
        return None
    return bumper_gap(ego, other), other.v - ego.v


def _longitudinal_command(veh: SimVehicle, ego: VehicleView, views_by_id,
                          attention: Attention, geometry: LaneGeometry,
                          cfg: RunConfig, gains: ControllerGains) -> float:
    brain, profile = veh.brain, veh.profile
    v = veh.state.v_long
    follow_ref = _follow_gap_ref(profile, v)
    merging_phase = brain.needs_merge

    # Base command: directive, slot keeping, or plain cruise.
    if merging_phase and brain.directive == ACCELERATE:
        base = cfg.nominal_accel(profile)
    elif merging_phase and brain.directive == DECELERATE:
        base = -cfg.nominal_decel(profile)
        if brain.guard:
            room = geometry.hard_end - veh.state.y - veh.params.length / 2.0 - 1.0
            if room > 0.1:
                base = min(base, -v * v / (2.0 * room))
            else:
                base = -gains.accel_cap
    elif merging_phase and brain.slot_leader_id in views_by_id:
        gap, rel = _fresh_gap(ego, brain.slot_leader_id, views_by_id)
        ref = _slot_gap_ref(ego, veh, views_by_id, follow_ref, cfg)
        base = longitudinal_accel(profile, gains, gap - ref, rel)
    else:
        speed_err = brain.v_ref - v
        leader = views_by_id.get(attention.lane_leaders.get(brain.current_lane))
        follower = views_by_id.get(attention.own_follower_id)
        ref = _boxed_gap_ref(ego, leader, follower, follow_ref)
        if leader is not None and bumper_gap(ego, leader) < ref:
            err, rate = blended_error(speed_err, bumper_gap(ego, leader) - ref,
                                      leader.v - v, cfg.speed_weight)
            base = longitudinal_accel(profile, gains, err, rate)
        else:
            base = longitudinal_accel(profile, gains, speed_err, 0.0)

    # Safety channels: never outrun anything ahead in the lanes we occupy.
    if merging_phase:
        slot_ref = _slot_gap_ref(ego, veh, views_by_id, follow_ref, cfg)
        hit = _fresh_gap(ego, brain.slot_leader_id, views_by_id)
        if hit is not None:
            base = min(base, _brake_channel(profile, gains, hit[0], hit[1],
                                            slot_ref))
    lanes = {brain.current_lane}
    if brain.maneuver in (MERGE, CHANGE) and brain.target_lane is not None:
        lanes.add(brain.target_lane)
    for lane in lanes:
        leader = views_by_id.get(attention.lane_leaders.get(lane))
        if leader is None:
            continue
        if merging_phase and leader.vehicle_id == brain.slot_leader_id:
            continue  # already constrained at the slot reference
        follower = views_by_id.get(attention.own_follower_id)
        ref = _boxed_gap_ref(ego, leader, follower, follow_ref)
        base = min(base, _brake_channel(profile, gains, bumper_gap(ego, leader),
                                        leader.v - v, ref))
    threat = views_by_id.get(attention.threat_id)
    if threat is not None:
        ahead = threat.y - ego.y > (threat.length + ego.length) / 2.0
        if ahead or brain.evading:
            ref = (profile.lane_change_clearance
                   + profile.prediction_time * max(0.0, v - threat.v))
            base = min(base, _brake_channel(profile, gains,
                                            bumper_gap(ego, threat),
                                            threat.v - v, ref))

    # Comfort bounds acceleration; emergencies may brake up to the
    # physical cap.
    hi = min(profile.accel_limit, gains.accel_cap)
    lo = -gains.accel_cap if brain.guard else -min(
        profile.accel_limit * gains.brake_factor, gains.accel_cap)
    return min(max(base, lo), hi)


def _controls_for(veh: SimVehicle, ego: VehicleView, views_by_id,
                  attention: Attention, geometry: LaneGeometry,
                  cfg: RunConfig, gains: ControllerGains) -> Controls:
    brain = veh.brain
    st = veh.state
    lane_target = brain.target_lane if brain.maneuver in (MERGE, CHANGE) \
        else brain.current_lane
    e_lat = st.x - geometry.centers[lane_target]
    e_rate = st.speed * math.sin(st.heading)
    steer = steering_command(veh.profile, gains, e_lat, e_rate, veh.params,
                             st.v_long)
    accel = _longitudinal_command(veh, ego, views_by_id, attention, geometry,
                                  cfg, gains)
    return Controls(accel=accel, steer=steer)


# --- simulation loop -------------------------------------------------------


def _nearest_pairs(views: List[VehicleView]):
    """Index of the nearest other vehicle for every vehicle."""
    n = len(views)
    nearest = [None] * n
    best = [math.inf] * n
    for i in range(n):
        for j in range(i + 1, n):
            d = math.hypot(views[i].x - views[j].x, views[i].y - views[j].y)
            if d < best[i]:
                best[i], nearest[i] = d, j
            if d < best[j]:
                best[j], nearest[j] = d, i
    return nearest


def _find_collision(views: List[VehicleView]):
    n = len(views)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = views[i], views[j]
            if abs(a.y - b.y) > (a.length + b.length) / 2.0 + 2.0:
                continue
            if abs(a.x - b.x) > (a.width + b.width) / 2.0 + 2.0:
                continue
            if rects_intersect(a.rect(), b.rect()):
                return a.vehicle_id, b.vehicle_id
    return None


def run(world: World, t_max: Optional[float] = None) -> TrajectoryLog:
    """Advance the world at a fixed step until t_max, a collision, or rest.

    Decisions fire on epoch boundaries; controllers and dynamics run every
    step; every step of every vehicle is logged.
    """
    cfg = world.cfg
    if t_max is None:
        t_max = cfg.t_max
    if not t_max > 0:
        raise ConfigError("t_max must be positive")
    dt = cfg.dt
    geometry = world.geometry
    gains = world.gains
    steps_per_epoch = round(cfg.epoch / dt)
    log = TrajectoryLog(dt, geometry, cfg)
    if not world.vehicles:
        return log
    n_steps = round(t_max / dt)
    quiet_needed = cfg.settle_time
    quiet_accum = 0.0

    decision_vehicles = [v for v in world.vehicles if v.kind == DECISION]
    attentions: Dict[str, Attention] = {}

    for step_index in range(n_steps):
        t = step_index * dt
        world.time = t
        views = world.snapshot()
        views_by_id = {v.vehicle_id: v for v in views}

        if step_index % steps_per_epoch == 0:
            for veh in decision_vehicles:
                noise = world.noise.get(veh.vehicle_id)
                if noise is None:
                    seen = views
                else:
                    # Recognition errors: every other vehicle's position is
                    # perturbed once per epoch for this observer.
                    seen = [v if v.vehicle_id == veh.vehicle_id
                            else replace(v, y=v.y + noise.rng.gauss(0.0,
                                                                    noise.sigma))
                            for v in views]
                ego = next(v for v in seen if v.vehicle_id == veh.vehicle_id)
                vic = classify_vicinity(
                    veh.vehicle_id, seen, geometry,
                    visibility=veh.profile.visibility_range,
                    observer_scale=veh.profile.bound_scale)
                threat = entrance_threat(ego, seen, geometry, cfg)
                own_gap = None
                own_leader = vic.leader(veh.brain.current_lane)
                if own_leader is not None:
                    own_gap = own_leader.gap
                veh.brain = decide(ego, seen, veh.brain, veh.profile,
                                   geometry, world.profiles, cfg,
                                   own_gap=own_gap, threat=threat)
                own_follower = vic.follower(veh.brain.current_lane)
                attention = Attention(
                    lane_leaders={
                        lane: vic.leader(lane).vehicle_id
                        for lane in vic.lanes() if vic.leader(lane)},
                    own_follower_id=(own_follower.vehicle_id
                                     if own_follower else None),
                    threat_id=threat.vehicle_id if threat else None)
                attentions[veh.vehicle_id] = attention

        # Log the current grid point, then advance.
        nearest = _nearest_pairs(views)
        for i, veh in enumerate(world.vehicles):
            view = views[i]
            icol = 0.0
            if nearest[i] is not None:
                icol = collision_index(view.rect(), views[nearest[i]].rect())
            brain = veh.brain
            flags = []
            if brain.guard:
                flags.append("guard")
            if brain.forced_stop:
                flags.append("forced_stop")
            log.append((t, veh.vehicle_id, view.x, view.y, veh.state.v_long,
                        veh.state.heading, view.lane,
                        brain.maneuver if veh.kind == DECISION else "",
                        brain.directive if veh.kind == DECISION else "",
                        brain.competing_id or "",
                        icol, ";".join(flags)))

        for veh in world.vehicles:
            if veh.kind == SCRIPTED:
                veh.state = replace(veh.state,
                                    y=veh.state.y + veh.v_preset * dt)
                continue
            controls = _controls_for(
                veh, views_by_id[veh.vehicle_id], views_by_id,
                attentions[veh.vehicle_id], geometry, cfg, gains)
            veh.state = step(veh.state, veh.params, controls, dt)
            if (veh.brain.needs_merge
                    and veh.state.v_long < cfg.stop_speed
                    and not veh.brain.forced_stop):
                veh.brain = replace(veh.brain, forced_stop=True)
                log.forced_stop = True
                log.events.append({"t": t, "vehicle": veh.vehicle_id,
                                   "event": "forced_stop"})

        world.time = t + dt
        log.end_time = world.time

        moved = world.snapshot()
        hit = _find_collision(moved)
        if hit is not None:
            log.collision = {"t": world.time, "vehicles": list(hit)}
            log.events.append({"t": world.time, "event": "collision",
                               "vehicles": list(hit)})
            break

        # Maneuver completion events feed the run summary.
        for veh in decision_vehicles:
            brain = veh.brain
            if brain.maneuver in (MERGE, CHANGE):
                target_x = geometry.centers[brain.target_lane]
                if abs(veh.state.x - target_x) < cfg.lane_settle_tol:
                    kind = ("merge_complete" if brain.maneuver == MERGE
                            else "change_complete")
                    completed_merge = brain.maneuver == MERGE
                    leader = next(
                        (v for v in moved
                         if v.vehicle_id == brain.slot_leader_id), None)
                    veh.brain = replace(
                        brain, maneuver=KEEP, current_lane=brain.target_lane,
                        target_lane=None, directive=HOLD, competing_id=None,
                        slot_leader_id=None, slot_follower_id=None,
                        guard=False,
                        needs_merge=brain.needs_merge and not completed_merge,
                        v_ref=(merged_speed_ref(brain.v_ref, veh.state.v_long,
                                                leader.v if leader else None)
                               if completed_merge else brain.v_ref))
                    log.events.append({"t": world.time,
                                       "vehicle": veh.vehicle_id,
                                       "event": kind,
                                       "lane": brain.target_lane})

        if decision_vehicles and _all_settled(world):
            quiet_accum += dt
            if quiet_accum >= quiet_needed:
                break
        else:
            quiet_accum = 0.0

    return log


def _all_settled(world: World) -> bool:
    for veh in world.vehicles:
        if veh.kind != DECISION:
            continue
        b = veh.brain
        if b.needs_merge or b.maneuver != KEEP:
            return False
        center = world.geometry.centers[b.current_lane]
        if abs(veh.state.x - center) > world.cfg.lane_settle_tol:
            return False
        if abs(veh.state.v_long - b.v_ref) > world.cfg.settle_speed_tol:
            return False
    return True
