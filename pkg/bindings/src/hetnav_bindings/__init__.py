"""Flat-array bindings over the navigation engine for external RL trainers.

Hosts drive environments through opaque integer handles: observations come
back as per-agent float vectors, actions go in as one row of 2 + d_c numbers
per agent ([command, command, message...]), and rewards/done/info are plain
numerics and dicts, so no engine types cross the boundary. A batch handle
steps several identically configured envs in lockstep (env i is reset with
seed + i, matching hetnav.run_batch's seeding); finished envs freeze with
zero reward instead of raising, so vectorized trainers can keep stepping.

Handles are not shareable across threads: serialize calls per handle.
Distinct handles are fully independent.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict

import numpy as np

from hetnav import (
    PRESETS,
    Action,
    DiffCommand,
    Environment,
    HoloCommand,
    WorldConfig,
    load_config,
)

API_VERSION = "hetnav-env/1"

__all__ = [
    "API_VERSION",
    "close",
    "make_env",
    "make_env_batch",
    "preset",
    "reset",
    "step",
]

_records: dict[int, "_Record"] = {}
_ids = itertools.count(1)


class _Record:
    """One open handle: a single env, or a lockstep batch of them."""

    def __init__(self, envs: list[Environment], batched: bool):
        self.envs = envs
        self.batched = batched
        self.last_obs: list[list[np.ndarray]] = [[] for _ in envs]

    @property
    def config(self) -> WorldConfig:
        return self.envs[0].config


def make_env(
    config_path: str | None = None,
    *,
    preset: str = "R4",
    filter_enabled: bool = True,
    fallback_mode: str = "stop",
) -> int:
    """Create one environment (scenario defaults when no config file is given)."""
    return _register(
        _build_envs(1, config_path, preset, filter_enabled, fallback_mode), batched=False
    )


def make_env_batch(
    n_envs: int,
    config_path: str | None = None,
    *,
    preset: str = "R4",
    filter_enabled: bool = True,
    fallback_mode: str = "stop",
) -> int:
    """Create `n_envs` identically configured environments behind one handle."""
    if n_envs < 1:
        raise ValueError("n_envs must be >= 1")
    return _register(
        _build_envs(n_envs, config_path, preset, filter_enabled, fallback_mode), batched=True
    )


def reset(handle: int, seed: int):
    """(Re)start the episode(s) from a seed.

    Single env: a list of per-agent observation vectors. Batch: one such
    list per env, env i seeded with seed + i.
    """
    record = _get(handle)
    for i, env in enumerate(record.envs):
        record.last_obs[i] = _flatten(env.reset(seed + i if record.batched else seed))
    return list(record.last_obs) if record.batched else record.last_obs[0]


def step(handle: int, actions):
    """Advance one step. Returns (observations, rewards, done, info).

    Single env: observations as per-agent vectors, rewards (n_agents,),
    done bool, info dict with events / per-term reward breakdown / alphas.
    Batch: per-env observation lists, rewards (n_envs, n_agents), done
    (n_envs,) bools, one info dict per env. A finished env is skipped:
    its last observations come back with zero rewards and {"frozen": True}.
    """
    record = _get(handle)
    config = record.config
    if not record.batched:
        out = record.envs[0].step(_decode_actions(actions, config))
        record.last_obs[0] = _flatten(out.observations)
        return record.last_obs[0], np.asarray(out.rewards, dtype=float), out.done, _info(out)

    grid = _as_action_grid(actions, len(record.envs), config)
    all_obs: list[list[np.ndarray]] = []
    rewards = np.zeros((len(record.envs), config.n_agents))
    dones = np.zeros(len(record.envs), dtype=bool)
    infos: list[dict] = []
    for i, env in enumerate(record.envs):
        if env.state is not None and env.state.done:
            all_obs.append(record.last_obs[i])
            dones[i] = True
            infos.append({"events": [], "reward_terms": [], "alphas": [], "frozen": True})
            continue
        out = env.step(_decode_actions(grid[i], config))
        record.last_obs[i] = _flatten(out.observations)
        all_obs.append(record.last_obs[i])
        rewards[i] = out.rewards
        dones[i] = out.done
        infos.append(_info(out))
    return all_obs, rewards, dones, infos


def close(handle: int) -> None:
    """Release a handle; every later call on it raises RuntimeError."""
    _get(handle)
    del _records[handle]


def preset(name: str) -> dict[str, bool]:
    """Reward-term enable mask for a named preset (keys dist/goal/coll/comm)."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    dist, goal, coll, comm = PRESETS[name]
    return {"dist": dist, "goal": goal, "coll": coll, "comm": comm}


def _register(envs: list[Environment], batched: bool) -> int:
    handle = next(_ids)
    _records[handle] = _Record(envs, batched)
    return handle


def _get(handle: int) -> _Record:
    record = _records.get(handle)
    if record is None:
        raise RuntimeError(f"env handle {handle!r} is closed or unknown")
    return record


def _build_envs(
    count: int,
    config_path: str | None,
    preset: str,
    filter_enabled: bool,
    fallback_mode: str,
) -> list[Environment]:
    config = load_config(config_path) if config_path else WorldConfig()
    return [
        Environment(
            config=config,
            preset=preset,
            filter_enabled=filter_enabled,
            fallback_mode=fallback_mode,
        )
        for _ in range(count)
    ]


def _flatten(observations) -> list[np.ndarray]:
    return [o.flatten() for o in observations]


def _info(out) -> dict:
    return {
        "events": [e.to_dict() for e in out.events],
        "reward_terms": [asdict(t) for t in out.reward_terms],
        "alphas": [float(a) for a in out.alphas],
    }


def _decode_actions(actions, config: WorldConfig) -> list[Action]:
    width = 2 + config.d_c
    n = config.n_agents
    try:
        arr = np.asarray(actions, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(_action_shape_msg(n, width, "input is ragged or non-numeric")) from exc
    if arr.ndim == 1 and arr.size == n * width:
        arr = arr.reshape(n, width)
    if arr.shape != (n, width):
        raise ValueError(_action_shape_msg(n, width, f"got shape {arr.shape}"))
    out = []
    for i in range(n):
        kind = HoloCommand if i < config.n_h else DiffCommand
        move = kind(arr[i, 0], arr[i, 1], config.u_max)
        out.append(Action(move=move, msg=arr[i, 2:]))
    return out


def _as_action_grid(actions, n_envs: int, config: WorldConfig) -> np.ndarray:
    width = 2 + config.d_c
    n = config.n_agents
    try:
        arr = np.asarray(actions, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(
            _batch_shape_msg(n_envs, n, width, "input is ragged or non-numeric")
        ) from exc
    if arr.ndim == 1 and arr.size == n_envs * n * width:
        arr = arr.reshape(n_envs, n, width)
    if arr.shape != (n_envs, n, width):
        raise ValueError(_batch_shape_msg(n_envs, n, width, f"got shape {arr.shape}"))
    return arr


def _action_shape_msg(n: int, width: int, detail: str) -> str:
    return (
        f"actions must be {n} rows of width {width} "
        f"(2 command values + {width - 2} message values); {detail}"
    )


def _batch_shape_msg(n_envs: int, n: int, width: int, detail: str) -> str:
    return (
        f"batch actions must be {n_envs} x {n} rows of width {width} "
        f"(2 command values + {width - 2} message values per agent); {detail}"
    )
