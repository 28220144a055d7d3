"""Shared test fixtures and independent reference implementations.

The references here are deliberately written from the model equations, not
from the package source, so they can serve as oracles:

* ``reference_holonomic_step``  - plain-float drag double-integrator step
* ``exact_unicycle``            - closed-form constant-twist pose
* ``marching_ray_readings``     - grid-marching ray reading oracle
"""
from __future__ import annotations

import math

import numpy as np

from hetnav import EpisodeMetrics, WorldConfig, config_from_dict

RAY_MARCH_STEP = 1e-4
_COARSE_EVERY = 100
_INSIDE_FLOOR = 1e-6


def make_config(**overrides) -> WorldConfig:
    """WorldConfig with defaults, a few keys overridden."""
    return config_from_dict(overrides)


def reference_holonomic_step(
    px: float, py: float, vx: float, vy: float,
    fx: float, fy: float, config: WorldConfig,
) -> tuple[float, float, float, float]:
    """Hand-rolled drag double-integrator step on plain Python floats.

    Position advances with the pre-update velocity; the force is clipped per
    component, then v' = v + (u/m - c_d*v)*dt, clamped per axis.
    """
    u = config.u_max
    fx = min(max(float(fx), -u), u)
    fy = min(max(float(fy), -u), u)
    npx = px + vx * config.dt
    npy = py + vy * config.dt
    nvx = vx + (fx / config.m_mass - config.c_d * vx) * config.dt
    nvy = vy + (fy / config.m_mass - config.c_d * vy) * config.dt
    nvx = min(max(nvx, -config.v_max), config.v_max)
    nvy = min(max(nvy, -config.v_max), config.v_max)
    return npx, npy, nvx, nvy


def exact_unicycle(
    x0: float, y0: float, theta0: float, v: float, omega: float, t: float,
) -> tuple[float, float, float]:
    """Closed-form unicycle pose under constant (v, omega): a circular arc,
    degenerating to a straight line when omega is zero. Theta unnormalized.

    Written via the half-angle product form rather than (v/omega)(sin - sin),
    which explodes for tiny omega (v/omega overflows while the sine difference
    rounds to zero)."""
    half = 0.5 * omega * t
    sinc = math.sin(half) / half if half != 0.0 else 1.0
    mid = theta0 + half
    x = x0 + v * t * sinc * math.cos(mid)
    y = y0 + v * t * sinc * math.sin(mid)
    return x, y, theta0 + omega * t


def marching_ray_readings(
    ox: float, oy: float, heading: float,
    centers: np.ndarray, radius: float, max_range: float, n_l: int,
) -> np.ndarray:
    """Ray reading oracle: walk t_k = k*RAY_MARCH_STEP along each ray, the first
    grid point inside any disc gives the reading, else max_range. Readings are
    floored at 1e-6 (origin-inside convention).

    Equivalent to evaluating every grid point in order. The coarse pre-pass
    (every 100th point) only skips windows whose left-edge clearance exceeds
    the window span plus slack, which is sound because the distance from a
    point on the ray to the nearest disc changes by at most 1 per unit of
    travel along the (unit-speed) ray.
    """
    out = np.full(n_l, float(max_range))
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(centers) == 0:
        return out
    k_max = int(math.floor(max_range / RAY_MARCH_STEP + 1e-9))
    coarse = np.arange(0, k_max + 1, _COARSE_EVERY)
    if coarse[-1] != k_max:
        coarse = np.append(coarse, k_max)
    for ray in range(n_l):
        ang = heading + 2.0 * math.pi * ray / n_l
        dx, dy = math.cos(ang), math.sin(ang)
        hit_k = _first_inside_index(ox, oy, dx, dy, centers, radius, coarse, k_max)
        if hit_k is not None:
            out[ray] = max(hit_k * RAY_MARCH_STEP, _INSIDE_FLOOR)
    return out


def _grid_clearances(
    ox: float, oy: float, dx: float, dy: float,
    ks: np.ndarray, centers: np.ndarray, radius: float,
) -> np.ndarray:
    """Distance from each grid point to the nearest disc surface (negative inside)."""
    t = ks * RAY_MARCH_STEP
    px = ox + t * dx
    py = oy + t * dy
    d = np.sqrt(
        (px[:, None] - centers[None, :, 0]) ** 2
        + (py[:, None] - centers[None, :, 1]) ** 2
    )
    return d.min(axis=1) - radius


def _first_inside_index(
    ox: float, oy: float, dx: float, dy: float,
    centers: np.ndarray, radius: float, coarse: np.ndarray, k_max: int,
) -> int | None:
    margins = _grid_clearances(ox, oy, dx, dy, coarse, centers, radius)
    if len(coarse) == 1:
        return 0 if margins[0] <= 0.0 else None
    spans = np.diff(coarse) * RAY_MARCH_STEP
    suspect = np.nonzero(margins[:-1] <= spans + 2.0 * RAY_MARCH_STEP)[0]
    if suspect.size == 0:
        return None
    fine = np.concatenate([np.arange(coarse[i], coarse[i + 1] + 1) for i in suspect])
    fine_margins = _grid_clearances(ox, oy, dx, dy, fine, centers, radius)
    inside = fine[fine_margins <= 0.0]
    if inside.size == 0:
        return None
    return int(inside.min())


def assert_metrics_identical(a: EpisodeMetrics, b: EpisodeMetrics) -> None:
    """Bit-strict equality of two episode metric records (floats compared with ==)."""
    assert a.seed == b.seed
    assert a.targets_final == b.targets_final
    assert a.steps_to_first == b.steps_to_first
    assert a.steps_to_all == b.steps_to_all
    assert a.collisions == b.collisions
    assert a.interventions == b.interventions
    assert a.infeasible_fallbacks == b.infeasible_fallbacks
    assert a.per_agent_discoveries == b.per_agent_discoveries
    assert a.coverage_curve == b.coverage_curve
    assert a.mean_comm_dissimilarity == b.mean_comm_dissimilarity
