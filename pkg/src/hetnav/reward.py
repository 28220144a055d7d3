"""Per-agent reward terms and the four ablation presets."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .world import CoverageEvent

COMM_NORM_EPS = 1e-9

# Term masks (dist, goal, coll, comm) per preset; each preset adds one term.
PRESETS: dict[str, tuple[bool, bool, bool, bool]] = {
    "R1": (True, False, False, False),
    "R2": (True, True, False, False),
    "R3": (True, True, True, False),
    "R4": (True, True, True, True),
}


@dataclass
class RewardWeights:
    w_dist: float = 1.0
    w_goal: float = 1.0
    w_coll: float = 1.0
    w_comm: float = 0.1
    r_goal: float = 10.0
    r_coll: float = -8.0
    # "intent": positive when the nearest-target distance shrinks.
    # "literal": the raw now-minus-previous difference (opposite sign).
    distance_sign: str = "intent"

    def __post_init__(self) -> None:
        if self.distance_sign not in ("intent", "literal"):
            raise ValueError(f"distance_sign must be 'intent' or 'literal', got {self.distance_sign!r}")


@dataclass
class RewardTerms:
    dist: float
    goal: float
    coll: float
    comm: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dist, self.goal, self.coll, self.comm])


def min_target_distance(pos: np.ndarray, target_xy: np.ndarray) -> float:
    """Distance to the nearest target; covered targets still count. inf if none."""
    if len(target_xy) == 0:
        return math.inf
    dx = target_xy[:, 0] - pos[0]
    dy = target_xy[:, 1] - pos[1]
    return float(np.min(np.sqrt(dx * dx + dy * dy)))


def distance_term(
    pos_now: np.ndarray,
    pos_prev: np.ndarray,
    target_xy: np.ndarray,
    weights: RewardWeights,
) -> float:
    """Change in nearest-target distance across the step; 0 with no targets."""
    if len(target_xy) == 0:
        return 0.0
    d_now = min_target_distance(pos_now, target_xy)
    d_prev = min_target_distance(pos_prev, target_xy)
    if weights.distance_sign == "intent":
        return d_prev - d_now
    return d_now - d_prev


def goal_term(agent_index: int, events: list[CoverageEvent], weights: RewardWeights) -> float:
    """r_goal per target newly covered this step credited to this agent."""
    count = sum(1 for e in events if e.agent == agent_index)
    return weights.r_goal * count


def collision_term(
    agent_index: int, positions: np.ndarray, radii: np.ndarray, weights: RewardWeights
) -> float:
    """r_coll per other agent whose body strictly overlaps this one."""
    count = 0
    xi, yi = positions[agent_index]
    ri = radii[agent_index]
    for j in range(len(positions)):
        if j == agent_index:
            continue
        dx = positions[j, 0] - xi
        dy = positions[j, 1] - yi
        if math.sqrt(dx * dx + dy * dy) < ri + radii[j]:
            count += 1
    return weights.r_coll * count


def comm_term(agent_index: int, messages: np.ndarray) -> float:
    """Sum over other agents of (1 - cos^2) between messages.

    Cosine similarity is defined as 0 when either message norm is below
    1e-9, so silent agents count as maximally dissimilar. Bounded [0, n-1].
    """
    n = messages.shape[0]
    mi = messages[agent_index]
    ni = math.sqrt(float(np.sum(mi * mi)))
    total = 0.0
    for j in range(n):
        if j == agent_index:
            continue
        mj = messages[j]
        nj = math.sqrt(float(np.sum(mj * mj)))
        if ni < COMM_NORM_EPS or nj < COMM_NORM_EPS:
            gamma = 0.0
        else:
            # Clamp: rounding can push |cos| a hair past 1 for parallel vectors.
            gamma = min(max(float(np.sum(mi * mj)) / (ni * nj), -1.0), 1.0)
        total += 1.0 - gamma * gamma
    return total


def total_reward(terms: RewardTerms, weights: RewardWeights, preset: str) -> float:
    """Weighted sum of the terms enabled by the preset mask."""
    mask = PRESETS[preset]
    total = 0.0
    if mask[0]:
        total += weights.w_dist * terms.dist
    if mask[1]:
        total += weights.w_goal * terms.goal
    if mask[2]:
        total += weights.w_coll * terms.coll
    if mask[3]:
        total += weights.w_comm * terms.comm
    return total
