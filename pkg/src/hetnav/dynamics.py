"""Agent dynamics: drag double-integrator and RK4 unicycle."""
from __future__ import annotations

import math

import numpy as np

from .config import WorldConfig
from .world import DiffDriveState, HolonomicState, wrap_angle

RK4_SUBSTEPS = 5


class HoloCommand:
    """Planar force command, clipped per component to [-u_max, u_max] on construction."""

    __slots__ = ("fx", "fy")

    def __init__(self, fx: float, fy: float, u_max: float):
        self.fx = min(max(float(fx), -u_max), u_max)
        self.fy = min(max(float(fy), -u_max), u_max)

    def scaled(self, alpha: float) -> tuple[float, float]:
        return alpha * self.fx, alpha * self.fy

    def __repr__(self) -> str:
        return f"HoloCommand(fx={self.fx}, fy={self.fy})"


class DiffCommand:
    """Linear/angular speed command, each clipped to [-u_max, u_max] on construction."""

    __slots__ = ("lin", "ang")

    def __init__(self, lin: float, ang: float, u_max: float):
        self.lin = min(max(float(lin), -u_max), u_max)
        self.ang = min(max(float(ang), -u_max), u_max)

    def scaled(self, alpha: float) -> tuple[float, float]:
        return alpha * self.lin, alpha * self.ang

    def __repr__(self) -> str:
        return f"DiffCommand(lin={self.lin}, ang={self.ang})"


def step_holonomic(state: HolonomicState, cmd: HoloCommand, config: WorldConfig) -> HolonomicState:
    """Advance one step: position with the old velocity, then the drag update.

        p' = p + v*dt
        v' = v + (u/m - c_d*v)*dt, clamped per axis to [-v_max, v_max]
    """
    dt = config.dt
    m = config.m_mass
    c_d = config.c_d
    v_max = config.v_max
    px, py = float(state.pos[0]), float(state.pos[1])
    vx, vy = float(state.vel[0]), float(state.vel[1])
    npx = px + vx * dt
    npy = py + vy * dt
    nvx = vx + (cmd.fx / m - c_d * vx) * dt
    nvy = vy + (cmd.fy / m - c_d * vy) * dt
    nvx = min(max(nvx, -v_max), v_max)
    nvy = min(max(nvy, -v_max), v_max)
    return HolonomicState(pos=np.array([npx, npy]), vel=np.array([nvx, nvy]))


def unicycle_rk4(
    x: float, y: float, theta: float, lin: float, ang: float, duration: float, substeps: int,
) -> tuple[float, float, float]:
    """Integrate xdot=v*cos, ydot=v*sin, thetadot=w over `duration` with RK4.

    Inputs are held constant; `substeps` uniform RK4 steps are taken.
    Returns the final (x, y, theta), theta unnormalized.
    """
    h = duration / substeps
    half_h = 0.5 * h
    for _ in range(substeps):
        k1x = lin * math.cos(theta)
        k1y = lin * math.sin(theta)
        t2 = theta + half_h * ang
        k2x = lin * math.cos(t2)
        k2y = lin * math.sin(t2)
        # k3 sees the same midpoint heading as k2: theta-dot is constant.
        t4 = theta + h * ang
        k4x = lin * math.cos(t4)
        k4y = lin * math.sin(t4)
        x = x + (h / 6.0) * (k1x + 4.0 * k2x + k4x)
        y = y + (h / 6.0) * (k1y + 4.0 * k2y + k4y)
        theta = t4
    return x, y, theta


def unicycle_rk4_trajectory(
    x: float, y: float, theta: float, lin: float, ang: float, duration: float, substeps: int,
) -> list[tuple[float, float]]:
    """Positions after each of the `substeps` RK4 steps (the step endpoints)."""
    h = duration / substeps
    out: list[tuple[float, float]] = []
    for _ in range(substeps):
        x, y, theta = unicycle_rk4(x, y, theta, lin, ang, h, 1)
        out.append((x, y))
    return out


def step_diff_drive(state: DiffDriveState, cmd: DiffCommand, config: WorldConfig) -> DiffDriveState:
    """Advance one step with instantaneous actuation: the commanded speeds take
    effect immediately and are held for the whole step (RK4, 5 substeps)."""
    x, y, theta = unicycle_rk4(
        float(state.pos[0]), float(state.pos[1]), state.heading,
        cmd.lin, cmd.ang, config.dt, RK4_SUBSTEPS,
    )
    return DiffDriveState(
        pos=np.array([x, y]),
        heading=wrap_angle(theta),
        speed=cmd.lin,
        ang_speed=cmd.ang,
    )
