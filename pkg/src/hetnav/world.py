"""Episode state: agents, targets, and seeded initialization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import ConfigError, WorldConfig

TWO_PI = 2.0 * math.pi

# Rejection-sampling attempt budget per entity before the scenario is declared
# degenerate (workspace too crowded for the requested radii).
MAX_SPAWN_ATTEMPTS = 1000


class AgentKind(str, Enum):
    HOLONOMIC = "holonomic"
    DIFF_DRIVE = "diff_drive"


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = (theta + math.pi) % TWO_PI - math.pi
    return math.pi if wrapped == -math.pi else wrapped


@dataclass
class HolonomicState:
    """Double-integrator agent: position and world-frame velocity."""
    pos: np.ndarray
    vel: np.ndarray
    kind: AgentKind = AgentKind.HOLONOMIC


@dataclass
class DiffDriveState:
    """Unicycle agent: position, heading in (-pi, pi], linear and angular speed."""
    pos: np.ndarray
    heading: float
    speed: float = 0.0
    ang_speed: float = 0.0
    kind: AgentKind = AgentKind.DIFF_DRIVE


AgentState = HolonomicState | DiffDriveState


def world_velocity(state: AgentState) -> np.ndarray:
    """World-frame velocity of either agent kind."""
    if isinstance(state, HolonomicState):
        return state.vel
    return state.speed * np.array([math.cos(state.heading), math.sin(state.heading)])


@dataclass
class TargetState:
    pos: np.ndarray
    covered: bool = False
    covered_at: int | None = None   # step index of the coverage event
    covered_by: int | None = None   # agent index that achieved it


@dataclass
class CoverageEvent:
    step: int
    target: int
    agent: int


@dataclass
class EpisodeState:
    step: int
    agents: list[AgentState]
    targets: list[TargetState]
    prev_messages: np.ndarray       # (n_agents, d_c), messages emitted last step
    rng: np.random.Generator
    done: bool = False
    events: list = field(default_factory=list)  # accumulated per-episode event log


def init_episode(config: WorldConfig, seed: int) -> EpisodeState:
    """Draw a fresh episode. Identical (config, seed) pairs are bit-identical.

    Targets are placed first (uniform, may overlap each other), then agents in
    holonomic-first order, rejection-sampled so no two agent bodies overlap and
    no agent starts inside any target's coverage radius.
    """
    rng = np.random.default_rng(seed)
    d = config.d

    targets = [TargetState(pos=rng.uniform(0.0, d, 2)) for _ in range(config.n_t)]
    target_xy = np.array([t.pos for t in targets]) if targets else np.empty((0, 2))

    agents: list[AgentState] = []
    placed_xy: list[np.ndarray] = []
    placed_r: list[float] = []
    for i in range(config.n_agents):
        r_i = config.kind_radius(i)
        for attempt in range(MAX_SPAWN_ATTEMPTS):
            pos = rng.uniform(0.0, d, 2)
            ok = True
            for q, r_q in zip(placed_xy, placed_r):
                if math.hypot(pos[0] - q[0], pos[1] - q[1]) < r_i + r_q:
                    ok = False
                    break
            if ok and len(target_xy):
                gaps = np.hypot(target_xy[:, 0] - pos[0], target_xy[:, 1] - pos[1])
                if np.any(gaps <= config.rho_cov):
                    ok = False
            if ok:
                break
        else:
            raise ConfigError(
                f"could not place agent {i} after {MAX_SPAWN_ATTEMPTS} attempts; "
                "workspace too crowded for the configured radii"
            )
        placed_xy.append(pos)
        placed_r.append(r_i)
        if i < config.n_h:
            agents.append(HolonomicState(pos=pos, vel=np.zeros(2)))
        else:
            heading = wrap_angle(rng.uniform(-math.pi, math.pi))
            agents.append(DiffDriveState(pos=pos, heading=heading))

    return EpisodeState(
        step=0,
        agents=agents,
        targets=targets,
        prev_messages=np.zeros((config.n_agents, config.d_c)),
        rng=rng,
    )


def check_coverage(state: EpisodeState, config: WorldConfig) -> list[CoverageEvent]:
    """Mark targets whose nearest agent is within rho_cov; covered is latched.

    The crediting agent is the distance argmin (lowest index on ties). Returns
    the events for newly covered targets; already covered targets never fire.
    """
    events: list[CoverageEvent] = []
    for t_idx, target in enumerate(state.targets):
        if target.covered:
            continue
        best_agent = -1
        best_dist = math.inf
        for a_idx, agent in enumerate(state.agents):
            dx = agent.pos[0] - target.pos[0]
            dy = agent.pos[1] - target.pos[1]
            dist = math.sqrt(dx * dx + dy * dy)
            if dist < best_dist:
                best_dist = dist
                best_agent = a_idx
        if best_agent >= 0 and best_dist <= config.rho_cov:
            target.covered = True
            target.covered_at = state.step
            target.covered_by = best_agent
            events.append(CoverageEvent(step=state.step, target=t_idx, agent=best_agent))
    return events
