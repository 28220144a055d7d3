"""World configuration: defaults, validation, and scenario-file loading.

A scenario file is a flat TOML document whose keys mirror :class:`WorldConfig`
field names exactly. Unknown keys are rejected so typos fail loudly.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised for invalid configuration values or malformed scenario files."""


@dataclass
class WorldConfig:
    """Static world parameters shared by every episode of a scenario.

    Distances are meters, times seconds, masses kilograms. Agents are ordered
    holonomic-first everywhere: indices [0, n_h) are holonomic, [n_h, n_h+n_d)
    are differential-drive.
    """

    n_h: int = 2            # holonomic agent count
    n_d: int = 1            # differential-drive agent count
    n_t: int = 3            # target count
    d: float = 10.0         # workspace side length; positions live in [0, d]^2
    r_h: float = 0.5        # holonomic body radius
    r_d: float = 0.5        # diff-drive body radius
    r_h_l: float = 3.0      # holonomic sensor range
    r_d_l: float = 1.5      # diff-drive sensor range
    n_l: int = 16           # rays per scan
    rho_cov: float = 1.5    # coverage radius around a target
    d_safe: float = 0.05    # safety margin added on top of body radii
    r_c: float = 4.5        # communication radius
    d_c: int = 16           # message vector width
    m_mass: float = 1.0     # holonomic agent mass
    dt: float = 0.1         # step duration
    c_d: float = 0.25       # holonomic drag coefficient
    u_max: float = 1.0      # command bound (force per axis / linear & angular speed)
    v_max: float = 10.0     # per-axis speed bound, also the filter's worst-case neighbor speed
    max_steps: int = 100    # episode horizon
    target_radius: float = 0.1  # physical disc radius of a target (sensing only)

    def __post_init__(self) -> None:
        validate(self)

    @property
    def n_agents(self) -> int:
        return self.n_h + self.n_d

    def kind_radius(self, index: int) -> float:
        """Body radius of agent `index` under holonomic-first ordering."""
        return self.r_h if index < self.n_h else self.r_d

    def sensor_range(self, index: int) -> float:
        return self.r_h_l if index < self.n_h else self.r_d_l


_POSITIVE_FIELDS = (
    "d", "r_h", "r_d", "r_h_l", "r_d_l", "rho_cov", "r_c",
    "m_mass", "dt", "u_max", "v_max", "target_radius",
)

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(WorldConfig)}
_INT_FIELDS = {name for name, tp in _FIELD_TYPES.items() if tp == "int"}


def validate(config: WorldConfig) -> None:
    """Raise :class:`ConfigError` on any out-of-range field."""
    for name in _INT_FIELDS:
        value = getattr(config, name)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
    for name in _POSITIVE_FIELDS:
        value = getattr(config, name)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        if not math.isfinite(value) or value <= 0:
            raise ConfigError(f"{name} must be finite and > 0, got {value}")
    if config.n_h < 0 or config.n_d < 0:
        raise ConfigError("agent counts must be >= 0")
    if config.n_h + config.n_d < 1:
        raise ConfigError("at least one agent is required")
    if config.n_t < 0:
        raise ConfigError("n_t must be >= 0")
    if config.n_l < 1:
        raise ConfigError("n_l must be >= 1")
    if config.d_c < 1:
        raise ConfigError("d_c must be >= 1")
    if config.max_steps < 1:
        raise ConfigError("max_steps must be >= 1")
    if config.u_max > config.v_max:
        raise ConfigError("u_max must not exceed v_max")
    if config.d_safe < 0:
        raise ConfigError("d_safe must be >= 0")


_VALID_KEYS = set(_FIELD_TYPES)


def load_config(path: str | Path) -> WorldConfig:
    """Load a scenario file. Missing keys fall back to defaults."""
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse scenario file {path}: {exc}") from exc
    return config_from_dict(data, source=str(path))


def config_from_dict(data: dict, source: str = "<dict>") -> WorldConfig:
    unknown = sorted(set(data) - _VALID_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario keys in {source}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            kwargs[key] = float(value)
    return WorldConfig(**kwargs)
