"""
Tests for experiment configuration, presets and YAML loading.
"""

from pathlib import Path
from tempfile import TemporaryDirectory

import pytest
import yaml

from policy_certificates.config import (
    OUTPUT_DIR_ENV,
    PRESETS,
    AlgorithmSpec,
    EnvironmentSpec,
    ExperimentConfig,
    dump_config,
    load_config_file,
    merge,
    preset,
    resolve_config,
)
from policy_certificates.exceptions import ConfigurationError
from policy_certificates.orlc import ConfidenceConfig
from policy_certificates.orlc_si import EllipsoidConfig
from policy_certificates.types import BonusKind, PlannerKind


class TestPresets:
    """Test named presets."""

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_every_preset_resolves(self, name):
        """Test every preset builds a valid configuration named after it."""
        config = resolve_config(name, environ={})
        assert config.name == name
        assert config.episodes >= 1

    def test_tabular_desk(self):
        """Test the small tabular preset."""
        config = resolve_config("tabular-desk", environ={})
        assert (config.environment.n_states, config.environment.n_actions) == (5, 3)
        assert config.environment.horizon == 4
        assert config.episodes == 20_000
        assert len(config.seeds) == 10
        assert config.algorithm.bonus is BonusKind.REFINED

    def test_contextual_desk(self):
        """Test the contextual preset uses the mass-constrained planner."""
        config = resolve_config("contextual-desk", environ={})
        assert config.algorithm.name == "orlc_si"
        assert config.algorithm.planner is PlannerKind.MASS_CONSTRAINED
        assert config.environment.dim_r == 4
        assert len(config.seeds) == 5

    def test_unknown_preset(self):
        """Test unknown preset names raise ConfigurationError."""
        with pytest.raises(ConfigurationError) as exc_info:
            preset("nope")
        assert exc_info.value.key == "preset"

    def test_preset_is_a_copy(self):
        """Test mutating a returned preset leaves the table untouched."""
        data = preset("tabular-desk")
        data["environment"]["n_states"] = 99
        assert PRESETS["tabular-desk"]["environment"]["n_states"] == 5


class TestPrecedence:
    """Test the merge order of configuration sources."""

    def test_file_overrides_preset(self):
        """Test file values replace preset values but keep the rest."""
        config = resolve_config("tabular-desk", {"episodes": 50, "environment": {"horizon": 2}}, environ={})
        assert config.episodes == 50
        assert config.environment.horizon == 2
        assert config.environment.n_states == 5

    def test_flags_override_file(self):
        """Test flag overrides beat file values and None flags are ignored."""
        config = resolve_config(
            "tabular-desk",
            {"episodes": 50, "stride": 7},
            {"episodes": 10, "stride": None},
            environ={},
        )
        assert config.episodes == 10
        assert config.stride == 7

    def test_environment_variable_is_lowest(self):
        """Test the output directory variable only fills the default."""
        env = {OUTPUT_DIR_ENV: "/tmp/from-env"}
        assert resolve_config("tabular-desk", environ=env).output_dir == "/tmp/from-env"
        config = resolve_config("tabular-desk", {"output_dir": "from-file"}, environ=env)
        assert config.output_dir == "from-file"

    def test_preset_from_file(self):
        """Test a preset key inside the file is honored."""
        config = resolve_config(None, {"preset": "bandit-desk", "name": "mine"}, environ={})
        assert config.environment.n_actions == 20
        assert config.name == "mine"

    def test_merge_is_recursive(self):
        """Test nested mappings merge key by key."""
        merged = merge({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"c": 5}, "d": None})
        assert merged == {"a": {"b": 1, "c": 5}, "d": 3}


class TestValidation:
    """Test rejection of invalid configurations."""

    def test_unknown_top_level_key(self):
        """Test unknown keys are named in the error."""
        with pytest.raises(ConfigurationError) as exc_info:
            ExperimentConfig.from_dict({"epsiodes": 10})
        assert exc_info.value.key == "epsiodes"

    def test_unknown_nested_key(self):
        """Test unknown section keys carry the section prefix."""
        with pytest.raises(ConfigurationError) as exc_info:
            ExperimentConfig.from_dict({"environment": {"states": 3}})
        assert exc_info.value.key == "environment.states"

    @pytest.mark.parametrize(
        "data,key",
        [
            ({"episodes": 0}, "episodes"),
            ({"seeds": []}, "seeds"),
            ({"seeds": [1, 1]}, "seeds"),
            ({"stride": 0}, "stride"),
            ({"algorithm": {"delta": 1.5}}, "delta"),
            ({"algorithm": {"bonus": "tight"}}, "algorithm.bonus"),
            ({"environment": {"kind": "grid"}}, "environment.kind"),
            ({"environment": {"n_states": 0}}, "environment.n_states"),
        ],
    )
    def test_invalid_values(self, data, key):
        """Test invalid values raise ConfigurationError naming the key."""
        with pytest.raises(ConfigurationError) as exc_info:
            ExperimentConfig.from_dict(data)
        assert exc_info.value.key == key

    def test_algorithm_environment_mismatch(self):
        """Test the tabular learner refuses contextual instances and vice versa."""
        with pytest.raises(ConfigurationError):
            ExperimentConfig(environment=EnvironmentSpec(kind="contextual"))
        with pytest.raises(ConfigurationError):
            ExperimentConfig(algorithm=AlgorithmSpec(name="orlc_si"))
        with pytest.raises(ConfigurationError):
            ExperimentConfig(environment=EnvironmentSpec(kind="bandit", contextual=True))

    def test_context_free_bandit_accepted(self):
        """Test the tabular learner accepts a bandit without context."""
        config = ExperimentConfig(environment=EnvironmentSpec(kind="bandit", contextual=False))
        assert config.environment.is_fixed
        assert not EnvironmentSpec(kind="bandit").is_fixed
        assert EnvironmentSpec(kind="tabular").is_fixed

    def test_bandit_presets(self):
        """Test the bandit presets use the context-free bandit generator."""
        for name, arms in (("bandit-desk", 20), ("bandit-paper", 100)):
            config = resolve_config(name, environ={})
            assert config.environment.kind == "bandit"
            assert not config.environment.contextual
            assert config.environment.n_actions == arms
            assert config.algorithm.name == "orlc"

    def test_learner_configs(self):
        """Test algorithm specs build the matching learner settings."""
        assert isinstance(AlgorithmSpec().learner_config(), ConfidenceConfig)
        spec = AlgorithmSpec(name="orlc_si", lam=2.0, planner="plain")
        learner = spec.learner_config()
        assert isinstance(learner, EllipsoidConfig)
        assert learner.lam == 2.0
        assert learner.planner is PlannerKind.PLAIN


class TestYaml:
    """Test YAML files."""

    def test_load_and_dump(self):
        """Test a dumped configuration loads back to the same configuration."""
        config = resolve_config("shift-desk", {"episodes": 123}, environ={})
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "experiment.yaml"
            path.write_text(dump_config(config))
            reloaded = resolve_config(None, load_config_file(path), environ={})
        assert reloaded == config

    def test_empty_file(self):
        """Test an empty file is an empty mapping."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "empty.yaml"
            path.write_text("")
            assert load_config_file(path) == {}

    def test_not_a_mapping(self):
        """Test a YAML list is rejected."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "list.yaml"
            path.write_text(yaml.safe_dump([1, 2]))
            with pytest.raises(ConfigurationError):
                load_config_file(path)

    def test_invalid_yaml(self):
        """Test unparsable YAML raises ConfigurationError."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.yaml"
            path.write_text("episodes: [1, 2\n")
            with pytest.raises(ConfigurationError) as exc_info:
                load_config_file(path)
        assert exc_info.value.key == "config"

    def test_missing_file(self):
        """Test a missing file raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            load_config_file("/nonexistent/experiment.yaml")
