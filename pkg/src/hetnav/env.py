"""Episode environment: reset/step pipeline, events, and episode metrics.

Step order (fixed): snapshot states -> safety filters against the snapshot ->
integrate (or hold on infeasible fallback) -> workspace clamp -> coverage ->
rewards over the (t, t+1) transition -> rebuild graph, deliver the messages
emitted this step, assemble next observations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .commgraph import Observation, assemble_observation, build_graph
from .config import WorldConfig
from .dynamics import DiffCommand, HoloCommand, step_diff_drive, step_holonomic
from .policy import TeamPolicy
from .reward import (
    PRESETS,
    RewardTerms,
    RewardWeights,
    collision_term,
    comm_term,
    distance_term,
    goal_term,
    min_target_distance,
    total_reward,
)
from .safety import FilterResult, apply_filter
from .sensing import ray_cast
from .world import (
    AgentKind,
    DiffDriveState,
    EpisodeState,
    HolonomicState,
    check_coverage,
    init_episode,
)

FALLBACK_MODES = ("stop", "drift")


@dataclass
class Action:
    """One agent's command for a step; message clipped to [-1, 1] per component."""
    move: HoloCommand | DiffCommand
    msg: np.ndarray

    def __post_init__(self) -> None:
        self.msg = np.clip(np.asarray(self.msg, dtype=np.float64), -1.0, 1.0)


@dataclass
class Event:
    kind: str  # coverage | collision | filter-intervention | infeasible-fallback
    step: int
    agent: int
    target: int | None = None
    other: int | None = None
    alpha: float | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "step": self.step, "agent": self.agent}
        if self.target is not None:
            out["target"] = self.target
        if self.other is not None:
            out["other"] = self.other
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out


@dataclass
class StepOutput:
    observations: list[Observation]
    rewards: np.ndarray                # (n_agents,)
    reward_terms: list[RewardTerms]
    events: list[Event]
    done: bool
    alphas: np.ndarray                 # (n_agents,) chosen filter scalings


class Environment:
    """Single-episode engine with a gym-style reset/step surface."""

    def __init__(
        self,
        config: WorldConfig | None = None,
        preset: str = "R4",
        weights: RewardWeights | None = None,
        filter_enabled: bool = True,
        fallback_mode: str = "stop",
    ):
        if preset not in PRESETS:
            raise ValueError(f"unknown reward preset {preset!r}; expected one of {sorted(PRESETS)}")
        if fallback_mode not in FALLBACK_MODES:
            raise ValueError(f"fallback_mode must be one of {FALLBACK_MODES}, got {fallback_mode!r}")
        self.config = config if config is not None else WorldConfig()
        self.preset = preset
        self.weights = weights if weights is not None else RewardWeights()
        self.filter_enabled = filter_enabled
        self.fallback_mode = fallback_mode
        self.state: EpisodeState | None = None

    # -- episode control -------------------------------------------------

    def reset(self, seed: int) -> list[Observation]:
        self.state = init_episode(self.config, seed)
        return self._observations()

    def step(self, actions: Sequence[Action]) -> StepOutput:
        state = self._require_state()
        if state.done:
            raise RuntimeError("episode is done; call reset() before stepping again")
        config = self.config
        n = config.n_agents
        if len(actions) != n:
            raise ValueError(f"expected {n} actions, got {len(actions)}")
        self._check_action_kinds(actions)

        # (1) snapshot time-t quantities
        agents_t = list(state.agents)
        positions_t = np.array([a.pos for a in agents_t])
        target_xy = np.array([t.pos for t in state.targets]) if state.targets else np.empty((0, 2))
        prev_min_dist = [min_target_distance(positions_t[i], target_xy) for i in range(n)]

        # (2) filters, all against the frozen snapshot
        results: list[FilterResult] = []
        for i in range(n):
            cmd = actions[i].move
            if self.filter_enabled:
                neighbors = [agents_t[j] for j in range(n) if j != i]
                results.append(
                    apply_filter(agents_t[i], config.kind_radius(i), cmd, neighbors, config)
                )
            else:
                results.append(
                    FilterResult(
                        alpha=1.0,
                        safe_cmd=cmd,
                        ladder_verdicts=(True,) * 7,
                        intervened=False,
                        feasible=True,
                    )
                )

        # (3) integrate; infeasible fallback either stops dead or drifts
        for i in range(n):
            res = results[i]
            agent = agents_t[i]
            if not res.feasible and self.fallback_mode == "stop":
                if isinstance(agent, HolonomicState):
                    state.agents[i] = HolonomicState(pos=agent.pos.copy(), vel=np.zeros(2))
                else:
                    state.agents[i] = DiffDriveState(
                        pos=agent.pos.copy(), heading=agent.heading, speed=0.0, ang_speed=0.0
                    )
                continue
            if isinstance(agent, HolonomicState):
                state.agents[i] = step_holonomic(agent, res.safe_cmd, config)
            else:
                state.agents[i] = step_diff_drive(agent, res.safe_cmd, config)

        # (4) workspace clamp; clamped axes zero the offending velocity
        clamp_to_workspace(state.agents, config)

        state.step += 1

        # (5) coverage, latched
        events: list[Event] = []
        cov_events = check_coverage(state, config)
        for ev in cov_events:
            events.append(Event(kind="coverage", step=state.step, agent=ev.agent, target=ev.target))

        # (6) rewards over the (t, t+1) transition
        positions_t1 = np.array([a.pos for a in state.agents])
        radii = np.array([config.kind_radius(i) for i in range(n)])
        messages = np.stack([a.msg for a in actions])
        terms_list: list[RewardTerms] = []
        rewards = np.zeros(n)
        for i in range(n):
            d_now = min_target_distance(positions_t1[i], target_xy)
            if len(target_xy) == 0:
                dist = 0.0
            elif self.weights.distance_sign == "intent":
                dist = prev_min_dist[i] - d_now
            else:
                dist = d_now - prev_min_dist[i]
            terms = RewardTerms(
                dist=dist,
                goal=goal_term(i, cov_events, self.weights),
                coll=collision_term(i, positions_t1, radii, self.weights),
                comm=comm_term(i, messages),
            )
            terms_list.append(terms)
            rewards[i] = total_reward(terms, self.weights, self.preset)

        # (7) events: collisions at t+1, filter outcomes
        for i in range(n):
            for j in range(i + 1, n):
                dx = positions_t1[i, 0] - positions_t1[j, 0]
                dy = positions_t1[i, 1] - positions_t1[j, 1]
                if math.sqrt(dx * dx + dy * dy) < radii[i] + radii[j]:
                    events.append(Event(kind="collision", step=state.step, agent=i, other=j))
        for i in range(n):
            if results[i].intervened:
                events.append(
                    Event(kind="filter-intervention", step=state.step, agent=i, alpha=results[i].alpha)
                )
            if not results[i].feasible:
                events.append(Event(kind="infeasible-fallback", step=state.step, agent=i))

        # (8) deliver this step's messages; done check; next observations
        state.prev_messages = messages
        all_covered = bool(state.targets) and all(t.covered for t in state.targets)
        if all_covered or state.step >= config.max_steps:
            state.done = True
        state.events.extend(events)
        return StepOutput(
            observations=self._observations(),
            rewards=rewards,
            reward_terms=terms_list,
            events=events,
            done=state.done,
            alphas=np.array([r.alpha for r in results]),
        )

    # -- helpers -----------------------------------------------------------

    def _require_state(self) -> EpisodeState:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        return self.state

    def _check_action_kinds(self, actions: Sequence[Action]) -> None:
        for i, action in enumerate(actions):
            expect_holo = i < self.config.n_h
            if expect_holo and not isinstance(action.move, HoloCommand):
                raise ValueError(f"agent {i} is holonomic and needs a HoloCommand")
            if not expect_holo and not isinstance(action.move, DiffCommand):
                raise ValueError(f"agent {i} is diff-drive and needs a DiffCommand")
            if action.msg.shape != (self.config.d_c,):
                raise ValueError(
                    f"agent {i} message must have width d_c={self.config.d_c}, "
                    f"got shape {action.msg.shape}"
                )

    def _observations(self) -> list[Observation]:
        state = self._require_state()
        config = self.config
        graph = build_graph(state.agents, config)
        obs = []
        for i, agent in enumerate(state.agents):
            heading = agent.heading if isinstance(agent, DiffDriveState) else 0.0
            scan = ray_cast(agent.pos, agent.kind, state.targets, config, heading=heading)
            obs.append(
                assemble_observation(i, scan, state.prev_messages, graph, agent, config)
            )
        return obs


def clamp_to_workspace(agents: list, config: WorldConfig) -> None:
    """Project positions onto [0, d]^2, zeroing the velocity along clamped axes."""
    d = config.d
    for i, agent in enumerate(agents):
        x, y = float(agent.pos[0]), float(agent.pos[1])
        cx = min(max(x, 0.0), d)
        cy = min(max(y, 0.0), d)
        if cx == x and cy == y:
            continue
        if isinstance(agent, HolonomicState):
            vel = agent.vel.copy()
            if cx != x:
                vel[0] = 0.0
            if cy != y:
                vel[1] = 0.0
            agents[i] = HolonomicState(pos=np.array([cx, cy]), vel=vel)
        else:
            agents[i] = DiffDriveState(
                pos=np.array([cx, cy]), heading=agent.heading, speed=0.0,
                ang_speed=agent.ang_speed,
            )


# --- episode metrics ----------------------------------------------------------

@dataclass
class EpisodeMetrics:
    seed: int
    targets_final: int
    steps_to_first: int                        # -1 when no target was covered
    steps_to_all: int                          # -1 when coverage never completed
    collisions: int
    interventions: int
    infeasible_fallbacks: int
    per_agent_discoveries: list[int]
    coverage_curve: list[int] = field(default_factory=list)  # cumulative per step
    mean_comm_dissimilarity: float = 0.0

    def csv_row(self) -> list:
        return [
            self.seed, self.targets_final, self.steps_to_first, self.steps_to_all,
            self.collisions, self.interventions, self.infeasible_fallbacks,
            *self.per_agent_discoveries,
        ]


def metrics_header(n_agents: int) -> list[str]:
    return [
        "seed", "targets_final", "steps_to_first", "steps_to_all",
        "collisions", "interventions", "infeasible_fallbacks",
        *[f"agent{i}_disc" for i in range(n_agents)],
    ]


def run_episode(
    config: WorldConfig,
    seed: int,
    policy: TeamPolicy,
    steps: int,
    preset: str = "R4",
    weights: RewardWeights | None = None,
    filter_enabled: bool = True,
    fallback_mode: str = "stop",
    traj_sink=None,
) -> EpisodeMetrics:
    """Roll one seeded episode and distill it into metrics.

    traj_sink, when given, receives one dict per step (JSON-ready).
    """
    env = Environment(
        config=config, preset=preset, weights=weights,
        filter_enabled=filter_enabled, fallback_mode=fallback_mode,
    )
    observations = env.reset(seed)
    state = env.state
    n = config.n_agents
    collisions = interventions = fallbacks = 0
    comm_sum = 0.0
    curve: list[int] = []
    obs_arg = observations if policy.needs_observations else None
    for t in range(steps):
        if state.done:
            break
        outputs = policy.act(t, obs_arg, state.agents, config)
        actions = [
            Action(
                move=(
                    HoloCommand(out.move[0], out.move[1], config.u_max)
                    if i < config.n_h
                    else DiffCommand(out.move[0], out.move[1], config.u_max)
                ),
                msg=out.msg,
            )
            for i, out in enumerate(outputs)
        ]
        result = env.step(actions)
        for ev in result.events:
            if ev.kind == "collision":
                collisions += 1
            elif ev.kind == "filter-intervention":
                interventions += 1
            elif ev.kind == "infeasible-fallback":
                fallbacks += 1
        comm_sum += float(np.sum(np.array([tm.comm for tm in result.reward_terms]))) / n
        curve.append(sum(1 for tg in state.targets if tg.covered))
        if traj_sink is not None:
            traj_sink(trajectory_row(state, result, config))
        obs_arg = result.observations if policy.needs_observations else None

    cov_steps = sorted(tg.covered_at for tg in state.targets if tg.covered)
    discoveries = [0] * n
    for tg in state.targets:
        if tg.covered:
            discoveries[tg.covered_by] += 1
    steps_run = len(curve)
    return EpisodeMetrics(
        seed=seed,
        targets_final=sum(1 for tg in state.targets if tg.covered),
        steps_to_first=cov_steps[0] if cov_steps else -1,
        steps_to_all=cov_steps[-1] if len(cov_steps) == len(state.targets) and state.targets else -1,
        collisions=collisions,
        interventions=interventions,
        infeasible_fallbacks=fallbacks,
        per_agent_discoveries=discoveries,
        coverage_curve=curve,
        mean_comm_dissimilarity=comm_sum / steps_run if steps_run else 0.0,
    )


def trajectory_row(state: EpisodeState, result: StepOutput, config: WorldConfig) -> dict:
    agents = []
    for i, agent in enumerate(state.agents):
        entry: dict = {"pos": [float(agent.pos[0]), float(agent.pos[1])]}
        if isinstance(agent, HolonomicState):
            entry["vel"] = [float(agent.vel[0]), float(agent.vel[1])]
        else:
            entry["heading"] = agent.heading
            entry["speed"] = agent.speed
            entry["ang_speed"] = agent.ang_speed
        entry["alpha"] = float(result.alphas[i])
        entry["reward"] = float(result.rewards[i])
        agents.append(entry)
    return {
        "step": state.step,
        "agents": agents,
        "events": [e.to_dict() for e in result.events],
        "done": result.done,
    }
