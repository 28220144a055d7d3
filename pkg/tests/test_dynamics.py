"""Agent dynamics: drag double-integrator and RK4 unicycle."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetnav import (
    RK4_SUBSTEPS,
    DiffCommand,
    HoloCommand,
    step_diff_drive,
    step_holonomic,
    unicycle_rk4,
    unicycle_rk4_trajectory,
    wrap_angle,
)
from hetnav.world import DiffDriveState, HolonomicState

from helpers import exact_unicycle, make_config, reference_holonomic_step

# --- commands ---------------------------------------------------------------

def test_command_clipping():
    cmd = HoloCommand(5.0, -3.0, 1.0)
    assert cmd.fx == 1.0 and cmd.fy == -1.0
    cmd = DiffCommand(-2.0, 0.5, 1.0)
    assert cmd.lin == -1.0 and cmd.ang == 0.5


def test_command_scaled():
    assert HoloCommand(1.0, 0.5, 1.0).scaled(0.4) == (0.4, 0.2)
    assert DiffCommand(1.0, -1.0, 1.0).scaled(0.25) == (0.25, -0.25)


# --- holonomic ---------------------------------------------------------------

def test_holonomic_frozen_step():
    config = make_config()
    state = HolonomicState(pos=np.array([0.0, 0.0]), vel=np.array([1.0, 0.0]))
    nxt = step_holonomic(state, HoloCommand(1.0, 0.0, config.u_max), config)
    # p' = p + v*dt; v' = v + (u/m - c_d*v)*dt = 1 + (1 - 0.25)*0.1
    assert nxt.pos[0] == pytest.approx(0.1, abs=1e-15)
    assert nxt.pos[1] == 0.0
    assert nxt.vel[0] == pytest.approx(1.075, abs=1e-15)
    assert nxt.vel[1] == 0.0


def test_holonomic_drag_only():
    config = make_config()
    state = HolonomicState(pos=np.array([0.0, 0.0]), vel=np.array([2.0, 0.0]))
    nxt = step_holonomic(state, HoloCommand(0.0, 0.0, config.u_max), config)
    assert nxt.pos[0] == pytest.approx(0.2, abs=1e-15)
    assert nxt.vel[0] == pytest.approx(1.95, abs=1e-15)  # 2 - 0.25*2*0.1


def test_holonomic_position_uses_pre_update_velocity():
    config = make_config()
    state = HolonomicState(pos=np.array([0.0, 0.0]), vel=np.array([0.0, 0.0]))
    nxt = step_holonomic(state, HoloCommand(1.0, 1.0, config.u_max), config)
    # From rest the command moves the velocity but not yet the position.
    assert nxt.pos[0] == 0.0 and nxt.pos[1] == 0.0
    assert nxt.vel[0] == pytest.approx(0.1, abs=1e-15)


def test_holonomic_speed_clamp():
    config = make_config(c_d=0.01)
    state = HolonomicState(pos=np.array([0.0, 0.0]), vel=np.array([10.0, -10.0]))
    nxt = step_holonomic(state, HoloCommand(1.0, -1.0, config.u_max), config)
    assert nxt.vel[0] == 10.0   # would be 10.09 unclamped
    assert nxt.vel[1] == -10.0


@settings(max_examples=300, deadline=None)
@given(
    px=st.floats(-10.0, 10.0), py=st.floats(-10.0, 10.0),
    vx=st.floats(-10.0, 10.0), vy=st.floats(-10.0, 10.0),
    fx=st.floats(-3.0, 3.0), fy=st.floats(-3.0, 3.0),
)
def test_holonomic_matches_reference_bitwise(px, py, vx, vy, fx, fy):
    config = make_config()
    state = HolonomicState(pos=np.array([px, py]), vel=np.array([vx, vy]))
    nxt = step_holonomic(state, HoloCommand(fx, fy, config.u_max), config)
    rx, ry, rvx, rvy = reference_holonomic_step(px, py, vx, vy, fx, fy, config)
    assert float(nxt.pos[0]) == rx and float(nxt.pos[1]) == ry
    assert float(nxt.vel[0]) == rvx and float(nxt.vel[1]) == rvy


# --- unicycle ----------------------------------------------------------------

def test_unicycle_frozen_small_step():
    # v=1, w=1 from the origin: exact pose is (sin t, 1 - cos t) at t = 0.1.
    x, y, theta = unicycle_rk4(0.0, 0.0, 0.0, 1.0, 1.0, 0.1, RK4_SUBSTEPS)
    assert x == pytest.approx(0.09983341664682815, abs=1e-9)
    assert y == pytest.approx(0.004995834721974234, abs=1e-9)
    assert theta == pytest.approx(0.1, abs=1e-15)


def test_unicycle_straight_line():
    x, y, theta = unicycle_rk4(1.0, 2.0, math.pi / 4, 1.0, 0.0, 0.1, RK4_SUBSTEPS)
    step = 0.1 * math.cos(math.pi / 4)
    assert x == pytest.approx(1.0 + step, abs=1e-12)
    assert y == pytest.approx(2.0 + step, abs=1e-12)
    assert theta == math.pi / 4


def test_unicycle_heading_is_exact():
    # Theta integrates exactly (constant rate), no RK4 error.
    _, _, theta = unicycle_rk4(0.0, 0.0, 0.3, 1.0, 0.7, 2.0, 4)
    assert theta == pytest.approx(0.3 + 0.7 * 2.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    theta0=st.floats(-math.pi, math.pi),
    v=st.floats(-1.0, 1.0),
    w=st.floats(-1.0, 1.0),
)
def test_unicycle_accurate_over_one_step(theta0, v, w):
    config = make_config()
    x, y, _ = unicycle_rk4(0.0, 0.0, theta0, v, w, config.dt, RK4_SUBSTEPS)
    ex, ey, _ = exact_unicycle(0.0, 0.0, theta0, v, w, config.dt)
    assert math.hypot(x - ex, y - ey) < 1e-10


def test_rk4_error_ratio_fourth_order():
    # Halving the substep size must cut the arc error by about 2^4.
    v, w, theta0, duration = 1.0, 1.3, 0.4, 2.0
    ex, ey, _ = exact_unicycle(0.0, 0.0, theta0, v, w, duration)
    errs = []
    for substeps in (4, 8):
        x, y, _ = unicycle_rk4(0.0, 0.0, theta0, v, w, duration, substeps)
        errs.append(math.hypot(x - ex, y - ey))
    ratio = errs[0] / errs[1]
    assert 12.8 <= ratio <= 19.2


def test_trajectory_endpoints_match_single_call():
    pts = unicycle_rk4_trajectory(0.5, 0.2, 0.9, 1.0, -0.8, 0.1, RK4_SUBSTEPS)
    assert len(pts) == RK4_SUBSTEPS
    x, y, _ = unicycle_rk4(0.5, 0.2, 0.9, 1.0, -0.8, 0.1, RK4_SUBSTEPS)
    assert pts[-1][0] == x and pts[-1][1] == y  # same substep sequence, bit-equal


def test_step_diff_drive_instantaneous_actuation():
    config = make_config()
    state = DiffDriveState(pos=np.array([1.0, 1.0]), heading=3.1, speed=0.0, ang_speed=0.0)
    nxt = step_diff_drive(state, DiffCommand(1.0, 1.0, config.u_max), config)
    assert nxt.speed == 1.0 and nxt.ang_speed == 1.0      # commanded speeds stick
    assert nxt.heading == pytest.approx(wrap_angle(3.1 + 0.1), abs=1e-12)  # wrapped past +pi
    assert -math.pi < nxt.heading <= math.pi
    assert nxt.heading < 0.0
