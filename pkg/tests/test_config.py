import pytest
import yaml
from hypothesis import given, settings, strategies as st

from mtnet.config import ConfigError, RunConfig, config_hash, dump_config, load_config, parse_config


def test_minimal_config_is_fully_defaulted(tmp_path):
    data = tmp_path / "obs.csv"
    data.write_text("t,i,j,value\n")
    cfg = parse_config(f"command: fit\npaths:\n  input: {data}\n")
    assert cfg.gibbs.sweeps == 2000 and cfg.gibbs.burn_in == 500 and cfg.gibbs.thin == 1
    assert cfg.gibbs.chains == 1 and cfg.threshold == "auto"
    assert cfg.beta().kind == "inverse-gamma"
    assert cfg.granger.p == 1 and cfg.granger.w == 52


def test_sweeps_not_above_burn_in_names_both_fields():
    text = "command: simulate\ngibbs:\n  sweeps: 100\n  burn_in: 100\n"
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    msg = str(ei.value)
    assert "gibbs.sweeps" in msg and "gibbs.burn_in" in msg
    assert ei.value.line == 3


def test_unknown_keys_rejected_with_line():
    with pytest.raises(ConfigError, match="unknown key 'gibbs.sweps'") as ei:
        parse_config("command: simulate\ngibbs:\n  sweps: 10\n")
    assert ei.value.line == 3
    with pytest.raises(ConfigError, match="unknown key 'colour'"):
        parse_config("command: simulate\ncolour: red\n")


def test_parse_error_has_line():
    with pytest.raises(ConfigError) as ei:
        parse_config("command: simulate\ngibbs: [1, 2\nseed: 3\n")
    assert ei.value.line is not None


def test_type_errors_name_field():
    with pytest.raises(ConfigError, match="gibbs.chains must be an integer"):
        parse_config("command: simulate\ngibbs:\n  chains: two\n")
    with pytest.raises(ConfigError, match="chains must be at least 1"):
        parse_config("command: simulate\ngibbs:\n  chains: 0\n")
    with pytest.raises(ConfigError, match="beta_mode"):
        parse_config("command: simulate\nbeta_mode: flat\n")
    with pytest.raises(ConfigError, match="threshold"):
        parse_config("command: simulate\nthreshold: high\n")


def test_read_commands_need_existing_input(tmp_path):
    with pytest.raises(ConfigError, match="paths.input is required"):
        parse_config("command: fit\n")
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(f"command: granger\npaths:\n  input: {tmp_path / 'nope.csv'}\n")


def test_command_mismatch():
    with pytest.raises(ConfigError, match="does not match"):
        parse_config("command: simulate\n", command="fit")
    assert parse_config("seed: 1\n", command="simulate").command == "simulate"
    with pytest.raises(ConfigError, match="command"):
        parse_config("seed: 1\n")


def test_load_config_from_file(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("command: simulate\nseed: 9\n")
    assert load_config(f).seed == 9
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.yaml")


configs = st.fixed_dictionaries({
    "command": st.just("simulate"),
    "seed": st.integers(0, 2**32),
    "beta_mode": st.sampled_from(["jeffreys", "fixed:2.0", "inverse-gamma:3.0,1.0", "fixed:0.5"]),
    "threshold": st.one_of(st.just("auto"), st.floats(-5, 5, allow_nan=False)),
    "gibbs": st.fixed_dictionaries({"sweeps": st.integers(11, 5000), "burn_in": st.integers(0, 10),
                                    "thin": st.integers(1, 5), "chains": st.integers(1, 4)}),
    "scenario": st.fixed_dictionaries({"n": st.integers(2, 20), "nu_true": st.floats(0.5, 30),
                                       "edge_prob": st.floats(0, 1)}),
    "study": st.fixed_dictionaries({"nus": st.lists(st.floats(0.5, 30), min_size=1, max_size=4)}),
})


@given(configs)
@settings(max_examples=40)
def test_round_trip_is_identity(data):
    cfg = parse_config(yaml.safe_dump(data))
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)
    assert config_hash(again) == config_hash(cfg)


def test_hash_depends_on_content():
    a = parse_config("command: simulate\nseed: 1\n")
    b = parse_config("command: simulate\nseed: 2\n")
    assert config_hash(a) != config_hash(b)
    assert isinstance(a, RunConfig)
