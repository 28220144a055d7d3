"""Ray-cast range sensor over target discs.

Rays never see agents or workspace walls; only targets return echoes.
Holonomic scans are world-aligned (ray k at angle 2*pi*k/n_l); diff-drive
scans are heading-aligned (ray 0 along the heading).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import WorldConfig
from .world import AgentKind, TargetState

# Reading reported when the sensor origin already lies inside a target disc.
INSIDE_EPSILON = 1e-6

_BASE_DIRS: dict[int, np.ndarray] = {}


def base_ray_directions(n_l: int) -> np.ndarray:
    """Unit direction of ray k at angle 2*pi*k/n_l, shape (n_l, 2). Cached."""
    dirs = _BASE_DIRS.get(n_l)
    if dirs is None:
        angles = 2.0 * math.pi * np.arange(n_l) / n_l
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        dirs.setflags(write=False)
        _BASE_DIRS[n_l] = dirs
    return dirs


def ray_directions(n_l: int, heading: float) -> np.ndarray:
    """Ray directions rotated so ray 0 points along `heading`."""
    base = base_ray_directions(n_l)
    if heading == 0.0:
        return base
    c = math.cos(heading)
    s = math.sin(heading)
    return np.stack(
        [base[:, 0] * c - base[:, 1] * s, base[:, 0] * s + base[:, 1] * c], axis=1
    )


@dataclass
class RangeScan:
    readings: np.ndarray  # (n_l,), each in (0, max_range]
    max_range: float


def ray_cast(
    origin: np.ndarray,
    kind: AgentKind,
    targets: list[TargetState],
    config: WorldConfig,
    heading: float = 0.0,
) -> RangeScan:
    """Analytic nearest-hit distance per ray against every target disc.

    Misses (no disc within range) read max_range. Covered targets stay
    visible. An origin inside a disc reads INSIDE_EPSILON.
    """
    max_range = config.r_h_l if kind == AgentKind.HOLONOMIC else config.r_d_l
    n_l = config.n_l
    if not targets:
        return RangeScan(readings=np.full(n_l, max_range), max_range=max_range)

    dirs = base_ray_directions(n_l) if kind == AgentKind.HOLONOMIC else ray_directions(n_l, heading)
    centers = np.array([t.pos for t in targets])          # (n_t, 2)
    r = config.target_radius

    ocx = centers[:, 0] - origin[0]                        # (n_t,)
    ocy = centers[:, 1] - origin[1]
    c0 = ocx * ocx + ocy * ocy - r * r                     # (n_t,)
    b = dirs[:, 0:1] * ocx + dirs[:, 1:2] * ocy            # (n_l, n_t)
    disc = b * b - c0
    sq = np.sqrt(np.maximum(disc, 0.0))
    t_near = b - sq
    hit = (disc >= 0.0) & (t_near >= 0.0)
    t = np.where(hit, t_near, np.inf)
    t = np.where(c0 < 0.0, INSIDE_EPSILON, t)              # origin inside disc
    reading = np.min(t, axis=1)
    reading = np.where(reading > max_range, max_range, reading)
    reading = np.maximum(reading, INSIDE_EPSILON)
    return RangeScan(readings=reading, max_range=max_range)
