"""Trajectory-aware safety filter: swept-segment tests, the alpha ladder,
oracle agreement, and the non-collision guarantee it exists to provide."""
import math

import numpy as np
import pytest

from hetnav import DiffCommand, HoloCommand, step_diff_drive, step_holonomic
from hetnav.safety import (
    ALPHA_LADDER,
    InflatedDisc,
    InflatedRect,
    apply_filter,
    build_inflated_sets,
    inflation,
    instance_clearance,
    oracle_filter,
    point_in_set,
    random_filter_instance,
    segment_hits_disc,
    segment_hits_rect,
)
from hetnav.world import DiffDriveState, HolonomicState

from helpers import make_config


def _holo_nbr(x, y):
    return HolonomicState(pos=np.array([x, y]), vel=np.zeros(2))


def _diff_nbr(x, y):
    return DiffDriveState(pos=np.array([x, y]), heading=0.0)


# --- inflated sets -------------------------------------------------------------

def test_inflation_values():
    config = make_config()
    assert inflation(0.5, 0.5, config) == 2.05   # 10*0.1 + 0.5 + 0.5 + 0.05
    lean = make_config(r_h=0.25, r_d=0.25, d_safe=0.05)
    assert inflation(0.25, 0.25, lean) == pytest.approx(1.55, abs=1e-12)


def test_build_sets_shapes_follow_neighbor_kind():
    config = make_config()
    sets = build_inflated_sets(0.5, [_holo_nbr(5.0, 0.0), _diff_nbr(1.0, 2.0)], config)
    assert isinstance(sets[0], InflatedRect)
    assert sets[0].cx == 5.0 and sets[0].hx == 2.05 and sets[0].hy == 2.05
    assert isinstance(sets[1], InflatedDisc)
    assert sets[1].cx == 1.0 and sets[1].radius == 2.05
    assert build_inflated_sets(0.5, [], config) == []


def test_point_in_set_closed():
    rect = InflatedRect(cx=0.0, cy=0.0, hx=1.0, hy=2.0)
    assert point_in_set(1.0, 2.0, rect)        # corner counts
    assert not point_in_set(1.0001, 0.0, rect)
    disc = InflatedDisc(cx=0.0, cy=0.0, radius=1.0)
    assert point_in_set(1.0, 0.0, disc)        # boundary counts
    assert not point_in_set(1.0001, 0.0, disc)


# --- swept-segment hit tests -----------------------------------------------------

def test_segment_rect_frozen_cases():
    rect = InflatedRect(cx=5.0, cy=0.0, hx=2.05, hy=2.05)   # spans x in [2.95, 7.05]
    assert not segment_hits_rect(0.0, 0.0, 1.0, 0.0, 0.1, rect)   # stops at 0.1
    assert segment_hits_rect(2.94, 0.0, 1.0, 0.0, 0.1, rect)      # enters at tau=0.01
    assert not segment_hits_rect(2.94, 0.0, -1.0, 0.0, 0.1, rect)  # retreating
    assert segment_hits_rect(5.0, 0.0, 0.0, 0.0, 0.1, rect)        # stationary inside
    assert not segment_hits_rect(2.94, 2.2, 1.0, 0.0, 0.1, rect)   # offset lane misses


def test_segment_rect_touch_counts():
    rect = InflatedRect(cx=5.0, cy=0.0, hx=2.05, hy=2.05)
    start = 5.0 - 2.05  # exactly on the low-x face
    assert segment_hits_rect(start, 0.0, -1.0, 0.0, 0.1, rect)


def test_segment_disc_frozen_cases():
    disc = InflatedDisc(cx=5.0, cy=0.0, radius=2.05)
    assert not segment_hits_disc(0.0, 0.0, 1.0, 0.0, 0.1, disc)
    assert segment_hits_disc(2.94, 0.0, 1.0, 0.0, 0.1, disc)
    assert not segment_hits_disc(2.94, 0.0, -1.0, 0.0, 0.1, disc)
    assert segment_hits_disc(5.0, 0.5, 0.0, 0.0, 0.1, disc)        # inside, zero velocity
    assert segment_hits_disc(5.0 - 2.05, 0.0, -1.0, 0.0, 0.1, disc)  # touch at tau=0
    # passes the disc on a chord clear of it
    assert not segment_hits_disc(2.0, 2.2, 1.0, 0.0, 0.1, disc)


# --- the ladder -------------------------------------------------------------------

def test_ladder_order():
    assert ALPHA_LADDER == (1.0, 0.8, 0.6, 0.4, 0.25, 0.1, 0.0)
    assert all(a > b for a, b in zip(ALPHA_LADDER, ALPHA_LADDER[1:]))


def test_filter_passes_clear_command():
    config = make_config()
    ego = HolonomicState(pos=np.array([2.0, 0.0]), vel=np.zeros(2))
    res = apply_filter(ego, 0.5, HoloCommand(1.0, 0.0, 1.0), [_holo_nbr(9.0, 0.0)], config)
    assert res.alpha == 1.0
    assert not res.intervened and res.feasible
    assert res.ladder_verdicts == (True,) * 7
    assert res.safe_cmd.fx == 1.0


def test_filter_no_neighbors_trivially_safe():
    config = make_config()
    ego = HolonomicState(pos=np.array([2.0, 0.0]), vel=np.array([10.0, 0.0]))
    cmd = HoloCommand(1.0, 0.0, 1.0)
    res = apply_filter(ego, 0.5, cmd, [], config)
    assert res.alpha == 1.0 and res.feasible and not res.intervened
    assert instance_clearance(ego, 0.5, cmd, [], config) == math.inf


def test_filter_throttles_holonomic():
    # Creeping toward the set face at 0.5 m/s from 0.051 m away: only the two
    # smallest rungs keep the swept segment outside.
    config = make_config()
    ego = HolonomicState(pos=np.array([2.899, 0.0]), vel=np.array([0.5, 0.0]))
    res = apply_filter(ego, 0.5, HoloCommand(1.0, 0.0, 1.0), [_holo_nbr(5.0, 0.0)], config)
    assert res.alpha == 0.1
    assert res.intervened and res.feasible
    assert res.ladder_verdicts == (False, False, False, False, False, True, True)
    assert res.safe_cmd.fx == pytest.approx(0.1, abs=1e-15)


def test_filter_fallback_infeasible():
    # At full approach speed even the zero command cannot keep the segment out.
    config = make_config()
    ego = HolonomicState(pos=np.array([2.0, 0.0]), vel=np.array([10.0, 0.0]))
    res = apply_filter(ego, 0.5, HoloCommand(1.0, 0.0, 1.0), [_holo_nbr(5.0, 0.0)], config)
    assert res.alpha == 0.0
    assert not res.feasible and res.intervened
    assert res.ladder_verdicts == (False,) * 7
    assert res.safe_cmd.fx == 0.0


def test_filter_inside_set_is_infeasible():
    config = make_config()
    ego = HolonomicState(pos=np.array([4.0, 0.0]), vel=np.zeros(2))
    res = apply_filter(ego, 0.5, HoloCommand(0.0, 0.0, 1.0), [_holo_nbr(5.0, 0.0)], config)
    assert not res.feasible and res.alpha == 0.0


def test_filter_diff_drive_clear_and_throttled():
    config = make_config()
    nbrs = [_holo_nbr(5.0, 0.0)]
    clear = apply_filter(
        DiffDriveState(pos=np.array([2.0, 0.0]), heading=0.0),
        0.5, DiffCommand(1.0, 0.0, 1.0), nbrs, config,
    )
    assert clear.alpha == 1.0 and not clear.intervened

    # x advances by 0.1*alpha along the heading; the face sits 0.05 ahead,
    # so alpha >= 0.5 crosses it and 0.4 is the first feasible rung.
    close = apply_filter(
        DiffDriveState(pos=np.array([2.90, 0.0]), heading=0.0),
        0.5, DiffCommand(1.0, 0.0, 1.0), nbrs, config,
    )
    assert close.alpha == 0.4
    assert close.intervened and close.feasible
    assert close.ladder_verdicts == (False, False, False, True, True, True, True)
    assert close.safe_cmd.lin == pytest.approx(0.4, abs=1e-15)


def test_filter_picks_first_feasible_rung():
    config = make_config()
    rng = np.random.default_rng(2)
    for i in range(200):
        state, radius, cmd, neighbors = random_filter_instance(rng, config)
        res = apply_filter(state, radius, cmd, neighbors, config)
        if res.feasible:
            first = res.ladder_verdicts.index(True)
            assert res.alpha == ALPHA_LADDER[first]
            assert not any(res.ladder_verdicts[:first])
            assert res.intervened == (res.alpha < 1.0)
        else:
            assert res.ladder_verdicts == (False,) * 7
            assert res.alpha == 0.0 and res.intervened


def test_alpha_translation_invariant():
    # Quarter-grid instances shifted by 8 m keep all relative geometry exact.
    config = make_config()
    rng = np.random.default_rng(9)
    shift = 8.0
    for _ in range(100):
        ex, ey = rng.integers(0, 41, 2) * 0.25
        nx, ny = rng.integers(0, 41, 2) * 0.25
        vx, vy = rng.integers(-40, 41, 2) * 0.25
        cx, cy = rng.integers(-8, 9, 2) * 0.125
        ego = HolonomicState(pos=np.array([ex, ey]), vel=np.array([vx, vy]))
        moved = HolonomicState(pos=np.array([ex + shift, ey + shift]), vel=np.array([vx, vy]))
        cmd = HoloCommand(cx, cy, config.u_max)
        near = apply_filter(ego, 0.5, cmd, [_holo_nbr(nx, ny)], config)
        far = apply_filter(moved, 0.5, cmd, [_holo_nbr(nx + shift, ny + shift)], config)
        assert near.alpha == far.alpha
        assert near.ladder_verdicts == far.ladder_verdicts


def test_feasible_steps_cannot_collide():
    """The point of the filter: a feasible scaled command keeps the ego clear of
    every neighbor body even if that neighbor moves worst-case this step."""
    config = make_config()
    rng = np.random.default_rng(4)
    reach = config.v_max * config.dt
    checked = 0
    for i in range(300):
        state, radius, cmd, neighbors = random_filter_instance(rng, config)
        res = apply_filter(state, radius, cmd, neighbors, config)
        if not res.feasible or not neighbors:
            continue
        checked += 1
        if isinstance(state, HolonomicState):
            nxt = step_holonomic(state, res.safe_cmd, config)
        else:
            nxt = step_diff_drive(state, res.safe_cmd, config)
        for nb in neighbors:
            nb_radius = config.r_h if isinstance(nb, HolonomicState) else config.r_d
            body = radius + nb_radius
            for ux, uy in (
                (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1),
            ):
                if isinstance(nb, HolonomicState):
                    dxy = np.array([ux * reach, uy * reach])   # per-axis bound
                else:
                    norm = math.hypot(ux, uy)
                    dxy = np.array([ux, uy]) * (reach / norm)  # euclidean bound
                moved = nb.pos + dxy
                gap = math.hypot(nxt.pos[0] - moved[0], nxt.pos[1] - moved[1])
                assert gap > body, f"instance {i}: overlap {gap} <= {body}"
                assert gap > body + config.d_safe - 0.008
    assert checked > 50   # the generator must exercise the feasible branch


def test_matches_oracle_on_random_instances():
    config = make_config()
    mismatches = []
    for i in range(200):
        rng = np.random.default_rng([0, i])
        state, radius, cmd, neighbors = random_filter_instance(rng, config)
        analytic = apply_filter(state, radius, cmd, neighbors, config)
        brute = oracle_filter(state, radius, cmd, neighbors, config, samples=300)
        if analytic.alpha != brute.alpha:
            clearance = instance_clearance(state, radius, cmd, neighbors, config)
            if clearance > 1e-6:
                mismatches.append((i, analytic.alpha, brute.alpha, clearance))
    assert mismatches == []


def test_oracle_rejects_sparse_sampling():
    config = make_config()
    ego = HolonomicState(pos=np.array([2.0, 0.0]), vel=np.zeros(2))
    with pytest.raises(ValueError, match="samples"):
        oracle_filter(ego, 0.5, HoloCommand(1.0, 0.0, 1.0), [_holo_nbr(5.0, 0.0)],
                      config, samples=10)


def test_random_instance_generator_shapes():
    config = make_config()
    rng = np.random.default_rng(0)
    kinds = set()
    for _ in range(50):
        state, radius, cmd, neighbors = random_filter_instance(rng, config)
        kinds.add(type(state).__name__)
        assert radius in (config.r_h, config.r_d)
        assert 0 <= len(neighbors) <= 4
        if isinstance(state, HolonomicState):
            assert isinstance(cmd, HoloCommand)
        else:
            assert isinstance(cmd, DiffCommand)
    assert kinds == {"HolonomicState", "DiffDriveState"}   # both kinds drawn
