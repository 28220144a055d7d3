"""Communication graph, relational edge features, and observation assembly."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import WorldConfig
from .sensing import RangeScan
from .world import AgentKind, AgentState, HolonomicState, world_velocity


@dataclass
class CommGraph:
    """Undirected proximity graph: i~j iff ||p_i - p_j|| <= r_c, boundary-inclusive."""
    n: int
    adj: list[list[int]]  # sorted neighbor lists, no self entries

    def edges(self) -> list[tuple[int, int]]:
        """All directed (dst, src) pairs, lexicographically ordered."""
        return [(i, j) for i in range(self.n) for j in self.adj[i]]

    def degree(self, i: int) -> int:
        return len(self.adj[i])


def build_graph(states: list[AgentState], config: WorldConfig) -> CommGraph:
    n = len(states)
    adj: list[list[int]] = [[] for _ in range(n)]
    r_c = config.r_c
    for i in range(n):
        pi = states[i].pos
        for j in range(i + 1, n):
            dx = pi[0] - states[j].pos[0]
            dy = pi[1] - states[j].pos[1]
            if math.sqrt(dx * dx + dy * dy) <= r_c:
                adj[i].append(j)
                adj[j].append(i)
    return CommGraph(n=n, adj=adj)


@dataclass
class EdgeFeature:
    """Relational features of ordered pair (i, j): i's state relative to j's."""
    rel_pos: np.ndarray   # p_i - p_j
    dist: float
    rel_vel: np.ndarray   # world-frame v_i - v_j

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.rel_pos, [self.dist], self.rel_vel])


EDGE_FEATURE_DIM = 5


def edge_features(graph: CommGraph, states: list[AgentState]) -> dict[tuple[int, int], EdgeFeature]:
    vels = [world_velocity(s) for s in states]
    feats: dict[tuple[int, int], EdgeFeature] = {}
    for i, j in graph.edges():
        rel_pos = states[i].pos - states[j].pos
        dist = math.sqrt(rel_pos[0] * rel_pos[0] + rel_pos[1] * rel_pos[1])
        feats[(i, j)] = EdgeFeature(rel_pos=rel_pos, dist=dist, rel_vel=vels[i] - vels[j])
    return feats


@dataclass
class Observation:
    """Decentralized per-agent observation.

    kin is (vx, vy) for holonomic agents and (v, theta, omega) for
    diff-drive agents, so flattened widths are n_l + d_c + 2 and
    n_l + d_c + 3 respectively.
    """
    kind: AgentKind
    scan: np.ndarray   # (n_l,)
    msg: np.ndarray    # (d_c,) mean of neighbors' previous-step messages
    kin: np.ndarray    # (2,) or (3,)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.scan, self.msg, self.kin])


def neighbor_message_mean(
    agent_index: int, prev_messages: np.ndarray, graph: CommGraph
) -> np.ndarray:
    """Component-wise mean over current neighbors; zeros when isolated."""
    neighbors = graph.adj[agent_index]
    count = len(neighbors)
    d_c = prev_messages.shape[1]
    if count == 0:
        return np.zeros(d_c)
    mask = np.zeros((prev_messages.shape[0], 1))
    mask[neighbors] = 1.0
    return np.sum(prev_messages * mask, axis=0) / count


def assemble_observation(
    agent_index: int,
    scan: RangeScan,
    prev_messages: np.ndarray,
    graph: CommGraph,
    state: AgentState,
    config: WorldConfig,
) -> Observation:
    msg = neighbor_message_mean(agent_index, prev_messages, graph)
    if isinstance(state, HolonomicState):
        kin = np.array([state.vel[0], state.vel[1]])
        kind = AgentKind.HOLONOMIC
    else:
        kin = np.array([state.speed, state.heading, state.ang_speed])
        kind = AgentKind.DIFF_DRIVE
    return Observation(kind=kind, scan=scan.readings, msg=msg, kin=kin)
