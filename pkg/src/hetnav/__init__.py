"""Deterministic 2D navigation scenarios for mixed holonomic / differential-drive
teams: safety-filtered dynamics, range sensing, messaging, reward shaping, and
batch rollout tooling."""

from .batch import VEC_BLOCK, BatchResult, run_batch, write_metrics_csv
from .commgraph import (
    EDGE_FEATURE_DIM,
    CommGraph,
    EdgeFeature,
    Observation,
    assemble_observation,
    build_graph,
    edge_features,
    neighbor_message_mean,
)
from .config import ConfigError, WorldConfig, config_from_dict, load_config
from .dynamics import (
    RK4_SUBSTEPS,
    DiffCommand,
    HoloCommand,
    step_diff_drive,
    step_holonomic,
    unicycle_rk4,
    unicycle_rk4_trajectory,
)
from .env import (
    Action,
    Environment,
    EpisodeMetrics,
    Event,
    StepOutput,
    metrics_header,
    run_episode,
)
from .policy import (
    GreedyPolicy,
    NeuralPolicy,
    PolicyOutput,
    RandomPolicy,
    TeamPolicy,
    WeightBundle,
    deepsets_value,
    gatv2_forward,
    init_weights,
    load_weights,
    make_policy,
    required_tensor_names,
    save_weights,
)
from .reward import (
    PRESETS,
    RewardTerms,
    RewardWeights,
    comm_term,
    collision_term,
    distance_term,
    goal_term,
    min_target_distance,
    total_reward,
)
from .safety import (
    ALPHA_LADDER,
    FilterResult,
    apply_filter,
    instance_clearance,
    oracle_filter,
    random_filter_instance,
)
from .sensing import RangeScan, base_ray_directions, ray_cast, ray_directions
from .world import (
    AgentKind,
    AgentState,
    CoverageEvent,
    DiffDriveState,
    EpisodeState,
    HolonomicState,
    TargetState,
    check_coverage,
    init_episode,
    world_velocity,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_LADDER",
    "Action",
    "AgentKind",
    "AgentState",
    "BatchResult",
    "CommGraph",
    "ConfigError",
    "CoverageEvent",
    "DiffCommand",
    "DiffDriveState",
    "EDGE_FEATURE_DIM",
    "EdgeFeature",
    "Environment",
    "EpisodeMetrics",
    "EpisodeState",
    "Event",
    "FilterResult",
    "GreedyPolicy",
    "HoloCommand",
    "HolonomicState",
    "NeuralPolicy",
    "Observation",
    "PRESETS",
    "PolicyOutput",
    "RK4_SUBSTEPS",
    "RandomPolicy",
    "RangeScan",
    "RewardTerms",
    "RewardWeights",
    "StepOutput",
    "TargetState",
    "TeamPolicy",
    "VEC_BLOCK",
    "WeightBundle",
    "WorldConfig",
    "apply_filter",
    "assemble_observation",
    "base_ray_directions",
    "build_graph",
    "check_coverage",
    "collision_term",
    "comm_term",
    "config_from_dict",
    "deepsets_value",
    "distance_term",
    "edge_features",
    "gatv2_forward",
    "goal_term",
    "init_episode",
    "init_weights",
    "instance_clearance",
    "load_config",
    "load_weights",
    "make_policy",
    "metrics_header",
    "min_target_distance",
    "neighbor_message_mean",
    "oracle_filter",
    "random_filter_instance",
    "ray_cast",
    "ray_directions",
    "required_tensor_names",
    "run_batch",
    "run_episode",
    "save_weights",
    "step_diff_drive",
    "step_holonomic",
    "total_reward",
    "unicycle_rk4",
    "unicycle_rk4_trajectory",
    "world_velocity",
    "wrap_angle",
    "write_metrics_csv",
]
