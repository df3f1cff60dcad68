"""Game-theoretic decision layer.

Merge-lane vehicles run a merging game against the nearest mainline
competitor every decision epoch; while the answer is "stay", a pair of
hypothetical games on predicted states picks an accelerate/decelerate/hold
directive and re-designates the competing vehicle.  Mainline decision
vehicles run discretionary lane-change games against adjacent-lane
followers.  All decisions are pure functions of the snapshot plus a small
latch record, so identical inputs always reproduce identical choices.
"""

from dataclasses import dataclass, replace
import math
from typing import List, Optional, Tuple

from .dynamics import GRAVITY
from .driver import DriverProfile
from .game import (LEFT, STRAIGHT, IMPOSSIBLE, PayoffBimatrix, headway_utility,
                   merge_cost_left, merge_cost_stay, net_utility, solve_stackelberg)
from .perception import OrientedRect, VehicleView, bumper_gap, rects_intersect
from .road import LaneGeometry

ACCELERATE = "accel"
DECELERATE = "decel"
HOLD = "hold"

MERGE = "merge"
CHANGE = "change"
KEEP = "keep"


@dataclass(frozen=True)
class BrainState:
    """Decision latch carried by one vehicle between epochs."""
    current_lane: int
    v_ref: float                      # reference speed for the cruise channel
    needs_merge: bool = False
    maneuver: str = KEEP              # "merge" | "change" | "keep"
    target_lane: Optional[int] = None
    maneuver_start_x: float = 0.0
    directive: str = HOLD
    competing_id: Optional[str] = None
    slot_leader_id: Optional[str] = None
    slot_follower_id: Optional[str] = None
    guard: bool = False               # end-of-lane guard engaged
    forced_stop: bool = False
    evading: bool = False             # giving way to a sinking ramp vehicle
    threat_memo_id: Optional[str] = None
    threat_memo_speed: float = 0.0


@dataclass(frozen=True)
class SlotEval:
    """Quality of one insertion slot around a (possibly hypothetical) ego."""
    leader: Optional[VehicleView]
    front_gap: float
    follower: Optional[VehicleView]
    rear_gap: float
    squeeze: float      # lane-change penalty vs the follower (<= 0 means room to spare)
    utility: float      # net leader utility of taking the slot

    def feasible(self, tolerance: float) -> bool:
        front_ok = self.leader is None or self.front_gap > 0.0
        return front_ok and self.squeeze <= tolerance


def view_of(views: List[VehicleView], vehicle_id: str) -> VehicleView:
    return next(v for v in views if v.vehicle_id == vehicle_id)


def slot_around(ego: VehicleView, views: List[VehicleView], lane: int,
                exclude: Tuple[str, ...] = ()) -> Tuple[Optional[VehicleView], Optional[VehicleView]]:
    """(leader, follower) in a lane around ego's longitudinal position."""
    leader = follower = None
    for v in views:
        if v.lane != lane or v.vehicle_id == ego.vehicle_id or v.vehicle_id in exclude:
            continue
        if v.y > ego.y:
            if leader is None or v.y < leader.y:
                leader = v
        else:
            if follower is None or v.y > follower.y:
                follower = v
    return leader, follower


def evaluate_slot(ego: VehicleView, views: List[VehicleView], lane: int,
                  profile: DriverProfile,
                  exclude: Tuple[str, ...] = ()) -> SlotEval:
    leader, follower = slot_around(ego, views, lane, exclude)
    front = bumper_gap(ego, leader) if leader else profile.visibility_range
    if follower is not None:
        rear = bumper_gap(ego, follower)
        squeeze = merge_cost_left(rear, follower.v - ego.v, profile)
    else:
        rear = profile.visibility_range
        squeeze = 0.0
    utility = net_utility(headway_utility(front, profile), squeeze)
    return SlotEval(leader, front, follower, rear, squeeze, utility)


def stay_utility(ego: VehicleView, views: List[VehicleView],
                 dist_to_end: float, profile: DriverProfile,
                 geometry: LaneGeometry) -> float:
    """Leader utility of remaining in the merge lane: free room ahead is
    bounded by both any merge-lane leader and the approaching lane end."""
    leader, _ = slot_around(ego, views, geometry.merge_lane)
    ahead = dist_to_end
    if leader is not None:
        ahead = min(ahead, bumper_gap(ego, leader))
    u_pos = headway_utility(ahead, profile)
    return net_utility(u_pos, merge_cost_stay(dist_to_end, ego.v, profile, True))


def _escape_lane(p2_lane: int, entering_from: int,
                 geometry: LaneGeometry) -> Optional[int]:
    """Mainline lane the competitor would vacate into (away from the entrant)."""
    esc = p2_lane - 1 if entering_from > p2_lane else p2_lane + 1
    return esc if esc in geometry.mainline_lanes else None


def _competitor_utility(p2: VehicleView, p2_profile: DriverProfile,
                        views: List[VehicleView], geometry: LaneGeometry,
                        action: str, entrant: Optional[VehicleView],
                        entering_from: int) -> float:
    """Follower-player utility for staying put or vacating sideways."""
    if action == STRAIGHT:
        crowd = list(views)
        if entrant is not None:
            crowd = crowd + [entrant]
        leader, _ = slot_around(p2, crowd, p2.lane)
        front = bumper_gap(p2, leader) if leader else p2_profile.visibility_range
        return headway_utility(front, p2_profile)
    esc = _escape_lane(p2.lane, entering_from, geometry)
    if esc is None:
        return IMPOSSIBLE
    ghost = replace(p2, x=geometry.centers[esc], lane=esc)
    side = evaluate_slot(ghost, views, esc, p2_profile, exclude=(p2.vehicle_id,))
    return side.utility


def build_entry_bimatrix(ego: VehicleView, target_lane: int, p2: VehicleView,
                         views: List[VehicleView], geometry: LaneGeometry,
                         profile: DriverProfile, p2_profile: DriverProfile,
                         u_stay: float,
                         risk_discount: float = 0.0) -> PayoffBimatrix:
    """Joint payoffs for one vehicle entering a lane against one competitor.

    risk_discount is added to the entering side's utility: aggressive
    drivers shrug off part of the squeeze penalty when the change is
    mandatory.
    """
    ghost = replace(ego, x=geometry.centers[target_lane], lane=target_lane)
    entry_vs_stay = evaluate_slot(ghost, views, target_lane, profile)
    entry_vs_vacate = evaluate_slot(ghost, views, target_lane, profile,
                                    exclude=(p2.vehicle_id,))
    bim = PayoffBimatrix()
    origin = ego.lane
    for fa in (STRAIGHT, LEFT):
        u2_after_entry = _competitor_utility(p2, p2_profile, views, geometry, fa,
                                             ghost if fa == STRAIGHT else None,
                                             origin)
        u2_after_stay = _competitor_utility(p2, p2_profile, views, geometry, fa,
                                            None, origin)
        u1 = entry_vs_stay.utility if fa == STRAIGHT else entry_vs_vacate.utility
        bim.set(LEFT, fa, u1 + risk_discount, u2_after_entry)
        bim.set(STRAIGHT, fa, u_stay, u2_after_stay)
    return bim


def nearest_in_lane(ego: VehicleView, views: List[VehicleView], lane: int,
                    visibility: float) -> Optional[VehicleView]:
    best = None
    best_dist = visibility
    for v in views:
        if v.lane != lane or v.vehicle_id == ego.vehicle_id:
            continue
        d = abs(v.y - ego.y)
        if d <= best_dist:
            best, best_dist = v, d
    return best


def merging_game(ego: VehicleView, views: List[VehicleView],
                 profile: DriverProfile, dist_to_end: float,
                 geometry: LaneGeometry, profiles,
                 risk_discount: float = 0.0) -> Tuple[str, Optional[str]]:
    """Resolve merge-now vs stay against the current competing vehicle.

    Returns (leader action, competitor id); an empty adjacent lane is an
    immediate merge.
    """
    target = geometry.merge_target_lane
    p2 = nearest_in_lane(ego, views, target, profile.visibility_range)
    if p2 is None:
        return LEFT, None
    u_stay = stay_utility(ego, views, dist_to_end, profile, geometry)
    bim = build_entry_bimatrix(ego, target, p2, views, geometry,
                               profile, profiles[p2.vehicle_id], u_stay,
                               risk_discount=risk_discount)
    action, _ = solve_stackelberg(bim)
    return action, p2.vehicle_id


def predict_states(views: List[VehicleView], ego_id: str, directive: str,
                   profile: DriverProfile, horizon: float,
                   nominal_accel: float) -> List[VehicleView]:
    """Constant-speed propagation of everyone except the ego, which applies
    a constant +/- nominal acceleration (clamped to its comfort bound).
    Speeds floor at zero."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    accel = min(nominal_accel, profile.accel_limit)
    out = []
    for v in views:
        if v.vehicle_id == ego_id and directive in (ACCELERATE, DECELERATE):
            a = accel if directive == ACCELERATE else -accel
            if a < 0 and v.v + a * horizon < 0:
                dy = v.v * v.v / (2.0 * -a)
                speed = 0.0
            else:
                dy = v.v * horizon + 0.5 * a * horizon * horizon
                speed = v.v + a * horizon
            out.append(replace(v, y=v.y + dy, v=speed))
        else:
            out.append(replace(v, y=v.y + v.v * horizon))
    return out


@dataclass(frozen=True)
class Directive:
    name: str
    competing_id: Optional[str] = None
    slot_leader_id: Optional[str] = None
    slot_follower_id: Optional[str] = None


def acceleration_game(ego: VehicleView, views: List[VehicleView],
                      profile: DriverProfile, geometry: LaneGeometry,
                      cfg, incumbent: str = HOLD) -> Directive:
    """Pick accelerate/decelerate/hold while merging is not yet sensible.

    Each hypothetical directive is scored on the predicted configuration,
    with the look-ahead capped at the moment the ego would reach the
    entrance end.  The slot around the predicted ego must be enterable
    (open front, tolerable squeeze); among enterable slots the higher net
    utility wins.  Ties fall to decelerating, and an already-chosen
    directive is only abandoned for a clearly better one.
    """
    target = geometry.merge_target_lane
    tol = cfg.risk_tolerance(profile.aggressiveness)
    current = evaluate_slot(ego, views, target, profile)
    if current.feasible(tol) and ego.y < geometry.entrance_end:
        # The slot beside us is already good: hold position in it.
        p2 = nearest_in_lane(ego, views, target, profile.visibility_range)
        return Directive(
            HOLD, p2.vehicle_id if p2 else None,
            current.leader.vehicle_id if current.leader else None,
            current.follower.vehicle_id if current.follower else None)

    scored = {}
    for directive in (DECELERATE, ACCELERATE):
        a_nom = (cfg.nominal_accel(profile) if directive == ACCELERATE
                 else cfg.nominal_decel(profile))
        accel = a_nom if directive == ACCELERATE else -a_nom
        horizon = min(cfg.prediction_horizon,
                      _time_to_reach(ego.v, accel,
                                     geometry.entrance_end - ego.y))
        if horizon <= 0.0:
            continue  # already past the last possible merge point
        pred = predict_states(views, ego.vehicle_id, directive, profile,
                              horizon, a_nom)
        pego = view_of(pred, ego.vehicle_id)
        slot = evaluate_slot(pego, pred, target, profile)
        if not slot.feasible(tol):
            continue
        p2p = nearest_in_lane(pego, pred, target, profile.visibility_range)
        scored[directive] = (slot.utility, Directive(
            directive, p2p.vehicle_id if p2p else None,
            slot.leader.vehicle_id if slot.leader else None,
            slot.follower.vehicle_id if slot.follower else None))
    if not scored:
        return Directive(HOLD)
    if len(scored) == 2:
        if incumbent in scored:
            # Stick with the committed directive unless clearly beaten.
            other = ACCELERATE if incumbent == DECELERATE else DECELERATE
            if scored[other][0] > scored[incumbent][0] + cfg.directive_switch_margin:
                return scored[other][1]
            return scored[incumbent][1]
        if scored[ACCELERATE][0] > scored[DECELERATE][0]:
            return scored[ACCELERATE][1]
        return scored[DECELERATE][1]
    return next(iter(scored.values()))[1]


def _time_to_reach(speed: float, accel: float, distance: float) -> float:
    """Time for a constant-acceleration vehicle to cover distance (inf if
    it stops short; non-positive distance gives 0)."""
    if distance <= 0.0:
        return 0.0
    if abs(accel) < 1e-12:
        return distance / speed if speed > 0 else math.inf
    disc = speed * speed + 2.0 * accel * distance
    if disc < 0.0:
        return math.inf  # decelerates to rest before getting there
    return (math.sqrt(disc) - speed) / accel


def lane_change_safe(ego: VehicleView, views: List[VehicleView],
                     target_lane: int, profile: DriverProfile,
                     geometry: LaneGeometry, margin: float = 0.1) -> bool:
    """Veto check: the slot must not be predicted to overlap anyone.

    The ego is placed on the target center and everyone coasts at current
    speed; overlap at any sampled horizon up to the driver's prediction
    time rejects the maneuver.
    """
    horizons = (0.0, 0.5 * profile.prediction_time, profile.prediction_time)
    cx = geometry.centers[target_lane]
    half_w = ego.width / 2.0 + margin
    half_l = ego.length / 2.0 + margin
    for h in horizons:
        ghost = OrientedRect(cx, ego.y + ego.v * h, 0.0, half_w, half_l)
        for other in views:
            if other.vehicle_id == ego.vehicle_id:
                continue
            if abs(other.x - cx) > geometry.lane_width + 2.0:
                continue
            rect = OrientedRect(other.x, other.y + other.v * h, other.heading,
                                other.width / 2.0, other.length / 2.0)
            if rects_intersect(ghost, rect):
                return False
    return True


def discretionary_lane_change(ego: VehicleView, views: List[VehicleView],
                              profile: DriverProfile, geometry: LaneGeometry,
                              profiles, cfg,
                              own_gap: Optional[float]) -> Optional[int]:
    """Optional change to an adjacent mainline lane for better headway.

    Each candidate lane hosts a game against that lane's follower; the
    change happens only if the solved leader action is to change and the
    secured utility beats staying by the driver's hysteresis margin.
    """
    vis = profile.visibility_range
    u_stay = headway_utility(own_gap if own_gap is not None else vis, profile)
    margin = cfg.hysteresis(profile.aggressiveness)
    best_lane = None
    best_gain = margin
    for cand in (ego.lane - 1, ego.lane + 1):
        if cand not in geometry.mainline_lanes or cand == ego.lane:
            continue
        _, follower = slot_around(
            replace(ego, x=geometry.centers[cand], lane=cand), views, cand)
        if follower is None:
            ghost = replace(ego, x=geometry.centers[cand], lane=cand)
            u_change = evaluate_slot(ghost, views, cand, profile).utility
        else:
            bim = build_entry_bimatrix(ego, cand, follower, views, geometry,
                                       profile, profiles[follower.vehicle_id],
                                       u_stay)
            action, fa = solve_stackelberg(bim)
            if action != LEFT:
                continue
            u_change = bim.leader[(LEFT, fa)]
        gain = u_change - u_stay
        if gain > best_gain:
            best_lane, best_gain = cand, gain
    if best_lane is not None and not lane_change_safe(ego, views, best_lane,
                                                      profile, geometry):
        return None
    return best_lane


def entrance_threat(ego: VehicleView, views: List[VehicleView],
                    geometry: LaneGeometry, cfg) -> Optional[VehicleView]:
    """Merge-lane vehicle the ego should be ready to give way to.

    Only meaningful for vehicles driving in the lane next to the merge
    entrance; returns the nearest ramp vehicle that sits around or ahead
    of the ego within the entrance zone.
    """
    if ego.lane != geometry.merge_target_lane:
        return None
    zone_lo = geometry.merge_start - cfg.yield_zone_margin
    best = None
    for v in views:
        if v.lane != geometry.merge_lane:
            continue
        if v.y < ego.y - cfg.yield_lookback or v.y < zone_lo or v.y > geometry.hard_end:
            continue
        if bumper_gap(ego, v) > cfg.visibility_range:
            continue
        if best is None or abs(v.y - ego.y) < abs(best.y - ego.y):
            best = v
    return best


def stopping_distance(speed: float, decel: float) -> float:
    return speed * speed / (2.0 * decel) if decel > 0 else math.inf


def merged_speed_ref(preset_ref: float, speed_now: float,
                     leader_speed: Optional[float]) -> float:
    """Cruise reference after completing a merge: adopt the flow speed,
    never below the preset, never beyond what the slot leader allows."""
    achievable = speed_now if leader_speed is None else min(speed_now,
                                                            leader_speed)
    return max(preset_ref, achievable)


def sinking_threat(ego: VehicleView, threat: Optional[VehicleView],
                   brain: BrainState, profile: DriverProfile, cfg) -> bool:
    """A braking ramp vehicle about to drop into the ego's slot.

    Observed over one epoch: the threat is nearby, slower, visibly
    decelerating, and its constant-speed projection at the ego's
    prediction horizon sits at or behind the ego's nose.
    """
    if threat is None or threat.vehicle_id != brain.threat_memo_id:
        return False
    observed_accel = (threat.v - brain.threat_memo_speed) / cfg.epoch
    if observed_accel >= -cfg.evade_decel_threshold or threat.v >= ego.v:
        return False
    dy = threat.y - ego.y
    dy_ahead = dy + (threat.v - ego.v) * profile.prediction_time
    return abs(dy) < cfg.evade_near and dy_ahead < ego.length + 2.0


def decide(ego: VehicleView, views: List[VehicleView], brain: BrainState,
           profile: DriverProfile, geometry: LaneGeometry, profiles,
           cfg, own_gap: Optional[float] = None,
           threat: Optional[VehicleView] = None) -> BrainState:
    """One decision epoch for one vehicle; returns the updated latch."""
    # A running lateral maneuver is never reversed, only completed.
    if brain.maneuver in (MERGE, CHANGE):
        if abs(ego.x - geometry.centers[brain.target_lane]) >= cfg.lane_settle_tol:
            return brain
        completed_merge = brain.maneuver == MERGE
        leader = next((v for v in views
                       if v.vehicle_id == brain.slot_leader_id), None)
        brain = replace(
            brain, maneuver=KEEP, current_lane=brain.target_lane,
            target_lane=None, directive=HOLD, competing_id=None,
            slot_leader_id=None, slot_follower_id=None, guard=False,
            needs_merge=brain.needs_merge and not completed_merge,
            v_ref=(merged_speed_ref(brain.v_ref, ego.v,
                                    leader.v if leader else None)
                   if completed_merge else brain.v_ref))

    if brain.needs_merge and ego.lane == geometry.merge_lane:
        return _merge_lane_epoch(ego, views, brain, profile, geometry,
                                 profiles, cfg)

    evading = sinking_threat(ego, threat, brain, profile, cfg)
    if evading:
        own_gap = 0.0  # the current slot is about to be taken
    brain = replace(brain, evading=evading,
                    threat_memo_id=threat.vehicle_id if threat else None,
                    threat_memo_speed=threat.v if threat else 0.0)

    target = discretionary_lane_change(ego, views, profile, geometry,
                                       profiles, cfg, own_gap)
    if target is not None:
        return replace(brain, maneuver=CHANGE, target_lane=target,
                       maneuver_start_x=ego.x, directive=HOLD,
                       competing_id=None, slot_leader_id=None,
                       slot_follower_id=None)
    return replace(brain, maneuver=KEEP, directive=HOLD, target_lane=None)


def _merge_lane_epoch(ego, views, brain, profile, geometry, profiles, cfg):
    dist_to_end = max(0.0, geometry.entrance_end - ego.y)
    tol = cfg.risk_tolerance(profile.aggressiveness)
    action, p2_id = merging_game(ego, views, profile, dist_to_end,
                                 geometry, profiles, risk_discount=tol)
    if action == LEFT:
        in_window = geometry.merge_start <= ego.y < geometry.entrance_end
        slot = evaluate_slot(ego, views, geometry.merge_target_lane, profile)
        if (in_window and slot.feasible(tol)
                and lane_change_safe(ego, views, geometry.merge_target_lane,
                                     profile, geometry)):
            return replace(
                brain, maneuver=MERGE, target_lane=geometry.merge_target_lane,
                maneuver_start_x=ego.x, directive=HOLD, competing_id=p2_id,
                slot_leader_id=slot.leader.vehicle_id if slot.leader else None,
                slot_follower_id=(slot.follower.vehicle_id
                                  if slot.follower else None),
                guard=False)

    plan = acceleration_game(ego, views, profile, geometry, cfg,
                             incumbent=brain.directive)
    directive = plan.name
    guard = False
    if directive == HOLD and plan.competing_id is None:
        # No slot in hand and none promised: brake in time to stop.
        room = dist_to_end
        if room < (stopping_distance(ego.v, 0.3 * GRAVITY)
                   + profile.lane_change_clearance):
            directive, guard = DECELERATE, True
        # Backstop against the pavement end, with full braking authority.
        hard_room = geometry.hard_end - ego.y - ego.length / 2.0 - 1.0
        if hard_room < stopping_distance(ego.v, cfg.accel_cap_g * GRAVITY):
            directive, guard = DECELERATE, True
    return replace(brain, maneuver=KEEP, directive=directive,
                   competing_id=plan.competing_id or p2_id,
                   slot_leader_id=plan.slot_leader_id,
                   slot_follower_id=plan.slot_follower_id,
                   guard=guard, target_lane=None)
