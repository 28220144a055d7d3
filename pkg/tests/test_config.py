"""Configuration defaults, validation, and scenario-file loading."""
import pytest

from hetnav import ConfigError, WorldConfig, config_from_dict, load_config


def test_defaults():
    c = WorldConfig()
    assert c.n_h == 2
    assert c.n_d == 1
    assert c.n_t == 3
    assert c.d == 10.0
    assert c.r_h == 0.5
    assert c.r_d == 0.5
    assert c.r_h_l == 3.0
    assert c.r_d_l == 1.5
    assert c.n_l == 16
    assert c.rho_cov == 1.5
    assert c.d_safe == 0.05
    assert c.r_c == 4.5
    assert c.d_c == 16
    assert c.m_mass == 1.0
    assert c.dt == 0.1
    assert c.c_d == 0.25
    assert c.u_max == 1.0
    assert c.v_max == 10.0
    assert c.max_steps == 100
    assert c.target_radius == 0.1


def test_derived_accessors():
    c = WorldConfig()
    assert c.n_agents == 3
    assert c.kind_radius(0) == 0.5
    assert c.kind_radius(2) == 0.5
    assert c.sensor_range(0) == 3.0
    assert c.sensor_range(2) == 1.5
    c2 = config_from_dict({"r_h": 0.3, "r_d": 0.7})
    assert c2.kind_radius(1) == 0.3   # index 1 still holonomic
    assert c2.kind_radius(2) == 0.7


def test_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown scenario keys"):
        config_from_dict({"n_h": 2, "speling_error": 1})


def test_rejects_wrong_types():
    with pytest.raises(ConfigError, match="must be an integer"):
        config_from_dict({"n_h": 2.5})
    with pytest.raises(ConfigError, match="must be a number"):
        config_from_dict({"dt": "fast"})
    with pytest.raises(ConfigError):
        config_from_dict({"n_t": True})


def test_rejects_out_of_range():
    with pytest.raises(ConfigError):
        config_from_dict({"dt": 0.0})
    with pytest.raises(ConfigError):
        config_from_dict({"d": -10.0})
    with pytest.raises(ConfigError):
        config_from_dict({"n_h": 0, "n_d": 0})
    with pytest.raises(ConfigError):
        config_from_dict({"n_h": -1})
    with pytest.raises(ConfigError):
        config_from_dict({"max_steps": 0})
    with pytest.raises(ConfigError):
        config_from_dict({"u_max": 2.0, "v_max": 1.0})
    with pytest.raises(ConfigError):
        config_from_dict({"d_safe": -0.01})
    with pytest.raises(ConfigError):
        config_from_dict({"v_max": float("inf")})


def test_load_toml(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text('n_h = 4\nn_d = 2\nd = 20.0\nrho_cov = 2.0\n')
    c = load_config(path)
    assert c.n_h == 4
    assert c.n_d == 2
    assert c.d == 20.0
    assert c.rho_cov == 2.0
    assert c.dt == 0.1  # untouched keys keep defaults


def test_load_toml_int_promotes_to_float(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text("d = 12\n")
    c = load_config(path)
    assert c.d == 12.0
    assert isinstance(c.d, float)


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "nope.toml")


def test_load_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("n_h = = 2\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(path)


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)
