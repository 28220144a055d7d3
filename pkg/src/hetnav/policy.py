"""Policies: scripted baselines and forward-pass-only neural inference.

The neural stack is a shared GATv2 encoder over the communication graph,
per-kind MLP action heads, and a DeepSets state-value head. Weights come
from a JSON bundle; there is no training code here.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .commgraph import (
    EDGE_FEATURE_DIM,
    CommGraph,
    Observation,
    build_graph,
    edge_features,
)
from .config import WorldConfig
from .world import AgentKind, AgentState

LEAKY_SLOPE = 0.2
HEAD_HIDDEN = 256
PHI_HIDDEN = 128
RHO_HIDDEN = 256
WEIGHTS_FORMAT_VERSION = 1


@dataclass
class PolicyOutput:
    """Raw per-agent network output: pre-squash move pair plus message."""
    move: np.ndarray  # (2,): force (holonomic) or (lin, ang) speeds (diff-drive)
    msg: np.ndarray   # (d_c,)


class TeamPolicy:
    """Joint policy interface: one call maps team observations to outputs."""

    #: Engines may skip building observations for policies that ignore them.
    needs_observations = True

    def act(
        self,
        t: int,
        observations: list[Observation] | None,
        states: list[AgentState],
        config: WorldConfig,
    ) -> list[PolicyOutput]:
        raise NotImplementedError


RANDOM_STREAM = 0x5EED
GREEDY_STREAM = 0x6EED


class RandomPolicy(TeamPolicy):
    """Uniform commands in the actuation bounds, messages uniform in [-1, 1].

    The whole action block is drawn up front from a per-episode stream so
    the scalar and vectorized engines consume identical values.
    """

    needs_observations = False

    def __init__(self, config: WorldConfig, seed: int, horizon: int):
        moves, msgs = draw_random_action_block(config, seed, horizon)
        self._moves = moves
        self._msgs = msgs

    def act(self, t, observations, states, config):
        return [
            PolicyOutput(move=self._moves[t, i], msg=self._msgs[t, i])
            for i in range(config.n_agents)
        ]


def draw_random_action_block(
    config: WorldConfig, seed: int, horizon: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([seed, RANDOM_STREAM])
    moves = rng.uniform(-config.u_max, config.u_max, (horizon, config.n_agents, 2))
    msgs = rng.uniform(-1.0, 1.0, (horizon, config.n_agents, config.d_c))
    return moves, msgs


class GreedyPolicy(TeamPolicy):
    """Steer toward the nearest echo; wander on a persistent heading otherwise.

    Messages are the agent's basis vector e_(i mod d_c), so distinct agents
    emit mutually orthogonal messages.
    """

    def __init__(self, config: WorldConfig, seed: int):
        self._rng = np.random.default_rng([seed, GREEDY_STREAM])
        self._wander = self._rng.uniform(-math.pi, math.pi, config.n_agents)

    def act(self, t, observations, states, config):
        out: list[PolicyOutput] = []
        for i, obs in enumerate(observations):
            k = int(np.argmin(obs.scan))
            max_range = config.r_h_l if obs.kind == AgentKind.HOLONOMIC else config.r_d_l
            hit = float(obs.scan[k]) < max_range
            ray_angle = 2.0 * math.pi * k / config.n_l
            if obs.kind == AgentKind.HOLONOMIC:
                if hit:
                    ang = ray_angle  # world frame
                else:
                    self._wander[i] += self._rng.uniform(-0.4, 0.4)
                    ang = self._wander[i]
                move = np.array([config.u_max * math.cos(ang), config.u_max * math.sin(ang)])
            else:
                if hit:
                    turn = _wrap(ray_angle)  # already heading-relative
                else:
                    self._wander[i] += self._rng.uniform(-0.4, 0.4)
                    turn = _wrap(self._wander[i] - states[i].heading)
                ang_cmd = min(max(2.0 * turn, -config.u_max), config.u_max)
                lin_cmd = config.u_max if abs(turn) < math.pi / 2 else 0.0
                move = np.array([lin_cmd, ang_cmd])
            msg = np.zeros(config.d_c)
            msg[i % config.d_c] = 1.0
            out.append(PolicyOutput(move=move, msg=msg))
        return out


def _wrap(theta: float) -> float:
    wrapped = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if wrapped == -math.pi else wrapped


# --- weights bundle ----------------------------------------------------------

@dataclass
class WeightBundle:
    meta: dict
    tensors: dict[str, np.ndarray] = field(default_factory=dict)


def save_weights(bundle: WeightBundle, path: str | Path) -> None:
    doc = {
        "meta": bundle.meta,
        "tensors": [
            {"name": name, "shape": list(t.shape), "data": t.reshape(-1).tolist()}
            for name, t in bundle.tensors.items()
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_weights(path: str | Path) -> WeightBundle:
    """Load and structurally validate a weights file.

    Checks: top-level shape, tensor entry fields, data length == prod(shape),
    finite values, no duplicate names.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"weights file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "meta" not in doc or "tensors" not in doc:
        raise ValueError(f"weights file {path} must have 'meta' and 'tensors' keys")
    tensors: dict[str, np.ndarray] = {}
    for entry in doc["tensors"]:
        name = entry.get("name")
        shape = entry.get("shape")
        data = entry.get("data")
        if not isinstance(name, str) or not isinstance(shape, list) or not isinstance(data, list):
            raise ValueError(f"malformed tensor entry in {path}: {entry.get('name')!r}")
        if name in tensors:
            raise ValueError(f"duplicate tensor name {name!r} in {path}")
        expected = int(np.prod(shape)) if shape else 1
        if len(data) != expected:
            raise ValueError(
                f"tensor {name!r}: data length {len(data)} != prod(shape) {expected}"
            )
        arr = np.array(data, dtype=np.float64).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} contains non-finite values")
        tensors[name] = arr
    return WeightBundle(meta=dict(doc["meta"]), tensors=tensors)


def node_feature_width(config: WorldConfig) -> int:
    """Padded observation width plus trailing kind flag."""
    holo = config.n_l + config.d_c + 2
    diff = config.n_l + config.d_c + 3
    return max(holo, diff) + 1


def node_features(observations: list[Observation], config: WorldConfig) -> np.ndarray:
    """Observations zero-padded to a common width, kind flag appended (0/1)."""
    width = node_feature_width(config)
    out = np.zeros((len(observations), width))
    for i, obs in enumerate(observations):
        flat = obs.flatten()
        out[i, : len(flat)] = flat
        out[i, -1] = 0.0 if obs.kind == AgentKind.HOLONOMIC else 1.0
    return out


# --- neural forward passes ---------------------------------------------------

def leaky_relu(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, x, LEAKY_SLOPE * x)


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, x, np.expm1(x))


def gatv2_forward(
    feats: np.ndarray,
    graph: CommGraph,
    efeats: dict[tuple[int, int], "np.ndarray"],
    weight: np.ndarray,
    att: np.ndarray,
    bias: np.ndarray | None = None,
    return_attention: bool = False,
) -> np.ndarray | tuple[np.ndarray, list[np.ndarray]]:
    """One GATv2 layer with self-loops.

    For destination i and source j (j a neighbor of i, plus j = i with zero
    edge features): z_ij = W @ [h_i ; h_j ; e_ij] + b, attention score
    a . LeakyReLU(z_ij), softmax over sources, output sum alpha_ij * z_ij.

    With return_attention, also returns one softmax row per destination,
    ordered [self, *graph.adj[i]].
    """
    n, in_dim = feats.shape
    out_dim, total = weight.shape
    edge_dim = total - 2 * in_dim
    if edge_dim < 0:
        raise ValueError(
            f"GAT weight expects concat width {total}, node features are {in_dim} wide"
        )
    zero_edge = np.zeros(edge_dim)
    out = np.zeros((n, out_dim))
    rows: list[np.ndarray] = []
    for i in range(n):
        sources = [i] + graph.adj[i]
        zs = np.empty((len(sources), out_dim))
        for row, j in enumerate(sources):
            e = zero_edge if j == i else efeats[(i, j)]
            cat = np.concatenate([feats[i], feats[j], e])
            z = weight @ cat
            if bias is not None:
                z = z + bias
            zs[row] = z
        scores = leaky_relu(zs) @ att
        scores = scores - np.max(scores)
        w = np.exp(scores)
        w = w / np.sum(w)
        out[i] = w @ zs
        if return_attention:
            rows.append(w)
    if return_attention:
        return out, rows
    return out


def mlp_forward(x: np.ndarray, layers: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """ELU MLP: every layer but the last is ELU-activated, the last is linear."""
    h = x
    for idx, (w, b) in enumerate(layers):
        h = w @ h + b
        if idx < len(layers) - 1:
            h = elu(h)
    return h


def deepsets_value(
    obs_feats: np.ndarray,
    phi_layers: list[tuple[np.ndarray, np.ndarray]],
    rho_layers: list[tuple[np.ndarray, np.ndarray]],
) -> float:
    """V = rho(mean_i phi(o_i)); permutation-invariant by construction."""
    embeds = []
    for row in obs_feats:
        h = row
        for w, b in phi_layers:
            h = elu(w @ h + b)
        embeds.append(h)
    pooled = np.mean(np.stack(embeds), axis=0)
    return float(mlp_forward(pooled, rho_layers)[0])


# --- bundle schema -----------------------------------------------------------

def _layer_names(prefix: str, count: int) -> list[str]:
    names = [f"{prefix}.{k}" for k in range(count)]
    names.append(f"{prefix}.out")
    return names


def required_tensor_names() -> list[str]:
    names = ["gat.weight", "gat.att", "gat.bias"]
    for kind in ("holonomic", "diff_drive"):
        for layer in _layer_names(f"head.{kind}", 2):
            names.extend([f"{layer}.weight", f"{layer}.bias"])
    for layer in (f"critic.phi.{k}" for k in range(2)):
        names.extend([f"{layer}.weight", f"{layer}.bias"])
    for layer in _layer_names("critic.rho", 2):
        names.extend([f"{layer}.weight", f"{layer}.bias"])
    return names


def init_weights(config: WorldConfig, rng: np.random.Generator, embed_dim: int = 64) -> WeightBundle:
    """Random bundle with the full schema (for tests and demos)."""
    width = node_feature_width(config)
    out_dim = 2 + config.d_c

    def lin(rows: int, cols: int) -> np.ndarray:
        scale = 1.0 / math.sqrt(cols)
        return rng.uniform(-scale, scale, (rows, cols))

    tensors: dict[str, np.ndarray] = {
        "gat.weight": lin(embed_dim, 2 * width + EDGE_FEATURE_DIM),
        "gat.att": lin(1, embed_dim)[0],
        "gat.bias": np.zeros(embed_dim),
    }
    for kind in ("holonomic", "diff_drive"):
        dims = [(HEAD_HIDDEN, embed_dim), (HEAD_HIDDEN, HEAD_HIDDEN), (out_dim, HEAD_HIDDEN)]
        for name, (rows, cols) in zip(_layer_names(f"head.{kind}", 2), dims):
            tensors[f"{name}.weight"] = lin(rows, cols)
            tensors[f"{name}.bias"] = np.zeros(rows)
    phi_dims = [(PHI_HIDDEN, width), (PHI_HIDDEN, PHI_HIDDEN)]
    for name, (rows, cols) in zip((f"critic.phi.{k}" for k in range(2)), phi_dims):
        tensors[f"{name}.weight"] = lin(rows, cols)
        tensors[f"{name}.bias"] = np.zeros(rows)
    rho_dims = [(RHO_HIDDEN, PHI_HIDDEN), (RHO_HIDDEN, RHO_HIDDEN), (1, RHO_HIDDEN)]
    for name, (rows, cols) in zip(_layer_names("critic.rho", 2), rho_dims):
        tensors[f"{name}.weight"] = lin(rows, cols)
        tensors[f"{name}.bias"] = np.zeros(rows)
    meta = {
        "format_version": WEIGHTS_FORMAT_VERSION,
        "d_c": config.d_c,
        "n_l": config.n_l,
        "node_width": width,
        "edge_dim": EDGE_FEATURE_DIM,
        "embed_dim": embed_dim,
    }
    return WeightBundle(meta=meta, tensors=tensors)


class NeuralPolicy(TeamPolicy):
    """GATv2 encoder + per-kind MLP heads, tanh-squashed to actuation bounds."""

    def __init__(self, bundle: WeightBundle, config: WorldConfig):
        width = node_feature_width(config)
        meta = bundle.meta
        for key, expected in (("d_c", config.d_c), ("n_l", config.n_l), ("node_width", width)):
            if key in meta and meta[key] != expected:
                raise ValueError(
                    f"weights metadata {key}={meta[key]} does not match scenario ({expected})"
                )
        missing = [n for n in required_tensor_names() if n not in bundle.tensors]
        if missing:
            raise ValueError(f"weights bundle missing tensors: {', '.join(missing)}")
        extra = sorted(set(bundle.tensors) - set(required_tensor_names()))
        if extra:
            warnings.warn(f"ignoring unknown tensors in weights bundle: {', '.join(extra)}")
        t = bundle.tensors
        expected_cat = 2 * width + EDGE_FEATURE_DIM
        if t["gat.weight"].shape[1] != expected_cat:
            raise ValueError(
                f"gat.weight second dim {t['gat.weight'].shape[1]} != expected {expected_cat}"
            )
        out_dim = 2 + config.d_c
        for kind in ("holonomic", "diff_drive"):
            head_out = t[f"head.{kind}.out.weight"].shape[0]
            if head_out != out_dim:
                raise ValueError(
                    f"head.{kind} output width {head_out} != 2 + d_c = {out_dim}"
                )
        self._bundle = bundle
        self._heads = {
            AgentKind.HOLONOMIC: _collect(t, "head.holonomic"),
            AgentKind.DIFF_DRIVE: _collect(t, "head.diff_drive"),
        }
        self._phi = [(t[f"critic.phi.{k}.weight"], t[f"critic.phi.{k}.bias"]) for k in range(2)]
        self._rho = _collect(t, "critic.rho")

    def act(self, t, observations, states, config):
        feats = node_features(observations, config)
        graph = build_graph(states, config)
        efeats = {k: v.flatten() for k, v in edge_features(graph, states).items()}
        tensors = self._bundle.tensors
        embeds = gatv2_forward(
            feats, graph, efeats, tensors["gat.weight"], tensors["gat.att"], tensors["gat.bias"]
        )
        out: list[PolicyOutput] = []
        for i, obs in enumerate(observations):
            raw = mlp_forward(embeds[i], self._heads[obs.kind])
            move = np.tanh(raw[:2]) * config.u_max
            msg = np.tanh(raw[2:])
            out.append(PolicyOutput(move=move, msg=msg))
        return out

    def value(self, observations: list[Observation], config: WorldConfig) -> float:
        return deepsets_value(node_features(observations, config), self._phi, self._rho)


def _collect(tensors: dict[str, np.ndarray], prefix: str) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    for name in _layer_names(prefix, 2):
        layers.append((tensors[f"{name}.weight"], tensors[f"{name}.bias"]))
    return layers


def make_policy(spec: str, config: WorldConfig, seed: int, horizon: int) -> TeamPolicy:
    """Build a policy from a CLI-style selector: greedy | random | weights:<path>."""
    if spec == "greedy":
        return GreedyPolicy(config, seed)
    if spec == "random":
        return RandomPolicy(config, seed, horizon)
    if spec.startswith("weights:"):
        return NeuralPolicy(load_weights(spec[len("weights:"):]), config)
    raise ValueError(f"unknown policy selector {spec!r}")
