"""Merging utilities and the finite two-player Stackelberg solution.

Both players choose between going left (L) and going straight (S).  Each
joint outcome is scored in meters of headway-equivalent utility: a reward
for free space ahead minus a penalty for squeezing into (or running out
of) room.  The leader commits first; the follower best-responds; the
leader secures against the worst tied response.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

from .driver import DriverProfile

LEFT = "L"
STRAIGHT = "S"
# Safety order: when payoffs tie, straight wins.
ACTIONS = (STRAIGHT, LEFT)

IMPOSSIBLE = -1.0e18  # utility of an action a player physically cannot take


@dataclass
class PayoffBimatrix:
    """Leader and follower utilities over the 2x2 joint action space."""
    leader: Dict[Tuple[str, str], float] = field(default_factory=dict)
    follower: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def set(self, leader_action: str, follower_action: str,
            u_leader: float, u_follower: float) -> None:
        self.leader[(leader_action, follower_action)] = u_leader
        self.follower[(leader_action, follower_action)] = u_follower


def headway_utility(gap: float, profile: DriverProfile) -> float:
    """Reward for free space ahead, capped by the usable visibility range."""
    return min(gap, profile.visibility_scale * profile.visibility_range)


def merge_cost_left(gap_behind: float, closing_speed: float,
                    profile: DriverProfile) -> float:
    """Penalty for moving into a lane with a follower gap_behind meters back.

    closing_speed is the follower's speed minus the ego speed (positive
    when the follower is catching up).  Negative values mean the slot has
    room to spare.
    """
    return (profile.lane_change_clearance
            + closing_speed * profile.prediction_time - gap_behind)


def merge_cost_stay(dist_to_end: float, ego_speed: float,
                    profile: DriverProfile, is_merging: bool = True) -> float:
    """Penalty for staying put; only merging vehicles pay for the lane end."""
    if not is_merging:
        return 0.0
    return (profile.lane_change_clearance
            + ego_speed * profile.prediction_time - dist_to_end)


def net_utility(u_pos: float, u_neg: float) -> float:
    return u_pos - u_neg


def solve_stackelberg(bimatrix: PayoffBimatrix) -> Tuple[str, str]:
    """Leader/follower action pair of the finite Stackelberg game.

    The follower's best-response set may hold ties; the leader evaluates
    each of its actions against the worst tied response and plays the
    secure maximum.  Remaining ties fall to the safer straight action for
    both players.
    """
    best_pair = None
    best_value = None
    for leader_action in ACTIONS:
        top = max(bimatrix.follower[(leader_action, fa)] for fa in ACTIONS)
        responses = [fa for fa in ACTIONS
                     if bimatrix.follower[(leader_action, fa)] == top]
        worst = min(responses,
                    key=lambda fa: bimatrix.leader[(leader_action, fa)])
        value = bimatrix.leader[(leader_action, worst)]
        if best_value is None or value > best_value:
            best_pair = (leader_action, worst)
            best_value = value
    return best_pair
