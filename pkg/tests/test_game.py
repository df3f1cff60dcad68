import random

import pytest
from hypothesis import given, strategies as st

from mergesim.driver import DriverProfile
from mergesim.game import (ACTIONS, LEFT, STRAIGHT, PayoffBimatrix,
                           headway_utility, merge_cost_left, merge_cost_stay,
                           net_utility, solve_stackelberg)


def profile(scale=0.65, visibility=100.0, prediction=1.0, clearance=10.0):
    return DriverProfile(
        aggressiveness=0.5, visibility_scale=scale, prediction_time=prediction,
        accel_limit=2.0, lat_accel_limit=2.5, bound_scale=1.15,
        visibility_range=visibility, lane_change_clearance=clearance,
        follow_headway=0.35)


class TestHeadwayUtility:
    def test_gap_selected_when_small(self):
        assert headway_utility(50.0, profile(scale=1.0)) == 50.0

    def test_zero_gap(self):
        assert headway_utility(0.0, profile()) == 0.0

    def test_visibility_cap(self):
        assert headway_utility(200.0, profile(scale=0.65)) == pytest.approx(65.0)

    @given(st.floats(0, 500), st.floats(0, 500))
    def test_monotone_and_bounded(self, a, b):
        p = profile(scale=0.65)
        lo, hi = sorted((a, b))
        assert headway_utility(lo, p) <= headway_utility(hi, p)
        assert headway_utility(hi, p) <= 0.65 * 100.0


class TestMergeCostLeft:
    def test_direct_value(self):
        assert merge_cost_left(12.0, 5.0, profile(prediction=1.0)) == \
            pytest.approx(3.0)

    def test_exact_balance(self):
        assert merge_cost_left(10.0, 0.0, profile()) == pytest.approx(0.0)

    def test_large_gap_means_no_penalty(self):
        assert merge_cost_left(1e6, 0.0, profile()) < -1e5

    @given(st.floats(0, 200), st.floats(0, 200), st.floats(-10, 10))
    def test_strictly_decreasing_in_gap(self, a, b, v_r):
        p = profile()
        lo, hi = sorted((a, b))
        if hi - lo < 1e-9:
            return
        assert merge_cost_left(hi, v_r, p) < merge_cost_left(lo, v_r, p)

    @given(st.floats(0, 200), st.floats(-10, 10), st.floats(-10, 10))
    def test_nondecreasing_in_closing_speed(self, gap, a, b):
        p = profile()
        lo, hi = sorted((a, b))
        assert merge_cost_left(gap, hi, p) >= merge_cost_left(gap, lo, p)


class TestMergeCostStay:
    def test_zero_when_not_merging(self):
        assert merge_cost_stay(5.0, 30.0, profile(), is_merging=False) == 0.0

    def test_direct_value(self):
        assert merge_cost_stay(25.0, 20.0, profile(prediction=1.0)) == \
            pytest.approx(5.0)

    def test_cheap_far_from_end(self):
        assert merge_cost_stay(1e6, 20.0, profile()) < -1e5


def test_net_utility():
    assert net_utility(50.0, 3.0) == 47.0
    assert net_utility(0.0, 0.0) == 0.0
    assert net_utility(65.0, -40.0) == 105.0


def bimatrix(u1, u2):
    bim = PayoffBimatrix()
    for pair in ((LEFT, LEFT), (LEFT, STRAIGHT), (STRAIGHT, LEFT),
                 (STRAIGHT, STRAIGHT)):
        bim.set(pair[0], pair[1], u1[pair], u2[pair])
    return bim


def brute_force_solution(bim):
    """Independent enumeration of the secure leader strategy."""
    options = []
    for leader_action in ACTIONS:
        payoffs = {fa: bim.follower[(leader_action, fa)] for fa in ACTIONS}
        best = max(payoffs.values())
        responses = [fa for fa in ACTIONS if payoffs[fa] == best]
        secure = min(bim.leader[(leader_action, fa)] for fa in responses)
        worst_set = [fa for fa in responses
                     if bim.leader[(leader_action, fa)] == secure]
        follower = STRAIGHT if STRAIGHT in worst_set else worst_set[0]
        options.append((secure, leader_action, follower))
    top = max(value for value, _, _ in options)
    tied = [(a, f) for value, a, f in options if value == top]
    for action, follower in tied:
        if action == STRAIGHT:
            return action, follower
    return tied[0]


class TestSolveStackelberg:
    def test_worked_example(self):
        u1 = {(LEFT, LEFT): 5, (LEFT, STRAIGHT): 4,
              (STRAIGHT, LEFT): 1, (STRAIGHT, STRAIGHT): 2}
        u2 = {(LEFT, LEFT): 0, (LEFT, STRAIGHT): 3,
              (STRAIGHT, LEFT): 2, (STRAIGHT, STRAIGHT): 1}
        assert solve_stackelberg(bimatrix(u1, u2)) == (LEFT, STRAIGHT)

    def test_all_equal_prefers_straight(self):
        u = {pair: 7.0 for pair in
             ((LEFT, LEFT), (LEFT, STRAIGHT), (STRAIGHT, LEFT),
              (STRAIGHT, STRAIGHT))}
        assert solve_stackelberg(bimatrix(u, dict(u))) == (STRAIGHT, STRAIGHT)

    def test_constant_shift_invariance(self):
        rng = random.Random(17)
        pairs = [(a, b) for a in ACTIONS for b in ACTIONS]
        for _ in range(200):
            u1 = {p: rng.uniform(-10, 10) for p in pairs}
            u2 = {p: rng.uniform(-10, 10) for p in pairs}
            base = solve_stackelberg(bimatrix(u1, u2))
            c1, c2 = rng.uniform(-100, 100), rng.uniform(-100, 100)
            shifted = bimatrix({p: v + c1 for p, v in u1.items()},
                               {p: v + c2 for p, v in u2.items()})
            assert solve_stackelberg(shifted) == base

    def test_matches_brute_force_on_random_bimatrices(self):
        rng = random.Random(2024)
        pairs = [(a, b) for a in ACTIONS for b in ACTIONS]
        for _ in range(1000):
            u1 = {p: rng.uniform(-50, 50) for p in pairs}
            u2 = {p: rng.uniform(-50, 50) for p in pairs}
            bim = bimatrix(u1, u2)
            assert solve_stackelberg(bim) == brute_force_solution(bim)

    def test_matches_brute_force_with_ties(self):
        rng = random.Random(7)
        pairs = [(a, b) for a in ACTIONS for b in ACTIONS]
        for _ in range(1000):
            # small integer payoffs force frequent ties
            u1 = {p: float(rng.randint(-2, 2)) for p in pairs}
            u2 = {p: float(rng.randint(-2, 2)) for p in pairs}
            bim = bimatrix(u1, u2)
            assert solve_stackelberg(bim) == brute_force_solution(bim)
