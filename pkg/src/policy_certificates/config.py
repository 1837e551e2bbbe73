"""
Experiment configuration: dataclasses, YAML loading, presets and overrides.

Values are merged in this order, later sources winning:

1. built-in defaults
2. ``POLICY_CERTIFICATES_OUTPUT_DIR`` (output directory only)
3. the named preset
4. the YAML config file
5. command-line flags
"""

import copy
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from .exceptions import ConfigurationError
from .harness import DEFAULT_PAC_LEVELS, DEFAULT_THRESHOLDS
from .orlc import ConfidenceConfig
from .orlc_si import EllipsoidConfig
from .types import BonusKind, ConfidenceVariant, PlannerKind, RewardNoise

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "POLICY_CERTIFICATES_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

ENVIRONMENT_KINDS = ("tabular", "contextual", "bandit")
ALGORITHMS = ("orlc", "orlc_si")


def _enum(enum_type, value: Any, key: str):
    if isinstance(value, enum_type):
        return value
    try:
        return enum_type(value)
    except ValueError as e:
        choices = ", ".join(member.value for member in enum_type)
        raise ConfigurationError(f"{key} must be one of: {choices} (got {value!r})", key=key) from e


@dataclass(frozen=True)
class EnvironmentSpec:
    """
    Which benchmark instance to generate for each seed.

    Attributes:
        kind: ``tabular`` (random MDP), ``contextual`` (linear reward context)
            or ``bandit`` (S = H = 1 with optional reward context)
        n_states: S (ignored for bandits)
        n_actions: A
        horizon: H (ignored for bandits)
        dim_r: Reward context dimension (contextual kinds)
        shift_episode: Episode from which rare context dimensions become common
        contextual: Bandit only, draw a reward context each episode
        reward_noise: Reward sampling family
    """
    kind: str = "tabular"
    n_states: int = 5
    n_actions: int = 3
    horizon: int = 4
    dim_r: int = 4
    shift_episode: Optional[int] = None
    contextual: bool = True
    reward_noise: RewardNoise = RewardNoise.BERNOULLI

    def __post_init__(self) -> None:
        if self.kind not in ENVIRONMENT_KINDS:
            raise ConfigurationError(
                f"environment.kind must be one of {', '.join(ENVIRONMENT_KINDS)} "
                f"(got {self.kind!r})",
                key="environment.kind",
            )
        for key in ("n_states", "n_actions", "horizon", "dim_r"):
            if int(getattr(self, key)) < 1:
                raise ConfigurationError(f"environment.{key} must be at least 1", key=f"environment.{key}")
        if self.shift_episode is not None and self.shift_episode < 1:
            raise ConfigurationError(
                "environment.shift_episode must be a positive episode index",
                key="environment.shift_episode",
            )
        object.__setattr__(
            self, "reward_noise", _enum(RewardNoise, self.reward_noise, "environment.reward_noise")
        )

    @property
    def is_fixed(self) -> bool:
        """True when every episode faces the same MDP (tabular or context-free bandit)."""
        return self.kind == "tabular" or (self.kind == "bandit" and not self.contextual)


@dataclass(frozen=True)
class AlgorithmSpec:
    """
    Learner and its settings.

    Attributes:
        name: ``orlc`` (tabular) or ``orlc_si`` (side information)
        delta: Failure tolerance in (0, 1)
        lam: Ridge regularizer (orlc_si)
        variant: Confidence constants (orlc)
        bonus: Width formulas (orlc)
        planner: Plain or mass-constrained planning (orlc_si)
        replan_every: Policy block length
        xi_theta_r: Reward parameter norm bound override (orlc_si)
        xi_theta_p: Transition parameter norm bound override (orlc_si)
        collapse_certificates: Replace every interval by a point at its upper
            end; only useful to check that the audit catches invalid certificates
    """
    name: str = "orlc"
    delta: float = 0.1
    lam: float = 1.0
    variant: ConfidenceVariant = ConfidenceVariant.APPENDIX
    bonus: BonusKind = BonusKind.REFINED
    planner: PlannerKind = PlannerKind.MASS_CONSTRAINED
    replan_every: int = 1
    xi_theta_r: Optional[float] = None
    xi_theta_p: Optional[float] = None
    collapse_certificates: bool = False

    def __post_init__(self) -> None:
        if self.name not in ALGORITHMS:
            raise ConfigurationError(
                f"algorithm.name must be one of {', '.join(ALGORITHMS)} (got {self.name!r})",
                key="algorithm.name",
            )
        object.__setattr__(self, "variant", _enum(ConfidenceVariant, self.variant, "algorithm.variant"))
        object.__setattr__(self, "bonus", _enum(BonusKind, self.bonus, "algorithm.bonus"))
        object.__setattr__(self, "planner", _enum(PlannerKind, self.planner, "algorithm.planner"))
        # the learner configs carry the range checks
        self.learner_config()

    def learner_config(self) -> Union[ConfidenceConfig, EllipsoidConfig]:
        if self.name == "orlc":
            return ConfidenceConfig(
                delta=self.delta,
                variant=self.variant,
                bonus=self.bonus,
                replan_every=self.replan_every,
            )
        return EllipsoidConfig(
            delta=self.delta,
            lam=self.lam,
            xi_theta_r=self.xi_theta_r,
            xi_theta_p=self.xi_theta_p,
            planner=self.planner,
            replan_every=self.replan_every,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A complete experiment: instance, learner, run length, seeds and outputs.

    Attributes:
        name: Prefix of every output file
        environment: Instance specification
        algorithm: Learner specification
        episodes: Episodes per seed, T >= 1
        seeds: Root seeds, one run each
        thresholds: Mistake thresholds for the report
        pac_levels: Certificate levels for first-time-below in the report
        output_dir: Directory for records and reports
        stride: Keep every n-th record in the JSONL output
        endpoint_window: Always keep this many first and last records
        correlation_stride: Sub-sampling of the correlation estimate
        n_jobs: Seeds run in parallel (joblib semantics, -1 = all cores)
        checkpoint: Also write the instance and final learner statistics
    """
    name: str = "experiment"
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    algorithm: AlgorithmSpec = field(default_factory=AlgorithmSpec)
    episodes: int = 1000
    seeds: Tuple[int, ...] = (0,)
    thresholds: Tuple[float, ...] = DEFAULT_THRESHOLDS
    pac_levels: Tuple[float, ...] = DEFAULT_PAC_LEVELS
    output_dir: str = DEFAULT_OUTPUT_DIR
    stride: int = 100
    endpoint_window: int = 1000
    correlation_stride: int = 1
    n_jobs: int = 1
    checkpoint: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(seed) for seed in self.seeds))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "pac_levels", tuple(float(level) for level in self.pac_levels))
        if self.episodes < 1:
            raise ConfigurationError(f"episodes must be at least 1, got {self.episodes}", key="episodes")
        if not self.seeds:
            raise ConfigurationError("seeds must not be empty", key="seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError(f"seeds must be distinct, got {list(self.seeds)}", key="seeds")
        if self.stride < 1:
            raise ConfigurationError(f"stride must be at least 1, got {self.stride}", key="stride")
        if self.endpoint_window < 0:
            raise ConfigurationError("endpoint_window must not be negative", key="endpoint_window")
        if self.correlation_stride < 1:
            raise ConfigurationError("correlation_stride must be at least 1", key="correlation_stride")
        if any(level <= 0 for level in self.pac_levels):
            raise ConfigurationError("pac_levels must be positive", key="pac_levels")
        if not self.name or "/" in self.name:
            raise ConfigurationError(f"invalid experiment name {self.name!r}", key="name")
        if self.algorithm.name == "orlc" and not self.environment.is_fixed:
            raise ConfigurationError(
                "algorithm orlc needs a tabular environment or a bandit without context, "
                f"got {self.environment.kind!r}",
                key="algorithm.name",
            )
        if self.algorithm.name == "orlc_si" and self.environment.kind == "tabular":
            raise ConfigurationError(
                "algorithm orlc_si needs a contextual or bandit environment",
                key="algorithm.name",
            )

    def to_dict(self) -> Dict[str, Any]:
        """Plain nested dictionary with enum values, as written to YAML."""
        data = asdict(self)
        data["seeds"] = list(self.seeds)
        data["thresholds"] = list(self.thresholds)
        data["pac_levels"] = list(self.pac_levels)
        data["environment"]["reward_noise"] = self.environment.reward_noise.value
        for key in ("variant", "bonus", "planner"):
            data["algorithm"][key] = getattr(self.algorithm, key).value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build a configuration from a nested mapping.

        Raises:
            ConfigurationError: On unknown keys or invalid values
        """
        values = dict(data)
        values.pop("preset", None)
        environment = _build(EnvironmentSpec, values.pop("environment", {}) or {}, "environment")
        algorithm = _build(AlgorithmSpec, values.pop("algorithm", {}) or {}, "algorithm")
        return _build(cls, dict(values, environment=environment, algorithm=algorithm), None)


def _build(cls, values: Mapping[str, Any], section: Optional[str]):
    if not isinstance(values, Mapping):
        raise ConfigurationError(f"{section or 'config'} must be a mapping", key=section)
    known = set(cls.__dataclass_fields__)
    unknown = sorted(set(values) - known)
    if unknown:
        prefix = f"{section}." if section else ""
        raise ConfigurationError(
            f"unknown configuration key(s): {', '.join(prefix + key for key in unknown)}",
            key=prefix + unknown[0],
        )
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"invalid {section or 'config'} values: {e}", key=section) from e


def _desk_seeds(count: int) -> List[int]:
    return list(range(count))


PRESETS: Dict[str, Dict[str, Any]] = {
    "tabular-desk": {
        "environment": {"kind": "tabular", "n_states": 5, "n_actions": 3, "horizon": 4},
        "algorithm": {"name": "orlc", "bonus": "refined"},
        "episodes": 20_000,
        "seeds": _desk_seeds(10),
    },
    "tabular-paper": {
        "environment": {"kind": "tabular", "n_states": 20, "n_actions": 4, "horizon": 10},
        "algorithm": {"name": "orlc", "bonus": "refined"},
        "episodes": 1_000_000,
        "seeds": [0],
    },
    "contextual-desk": {
        "environment": {
            "kind": "contextual", "n_states": 4, "n_actions": 5, "horizon": 3, "dim_r": 4,
        },
        "algorithm": {"name": "orlc_si", "planner": "mass_constrained", "lam": 1.0},
        "episodes": 20_000,
        "seeds": _desk_seeds(5),
    },
    "shift-desk": {
        "environment": {
            "kind": "contextual", "n_states": 5, "n_actions": 10, "horizon": 5, "dim_r": 10,
            "shift_episode": 50_000,
        },
        "algorithm": {"name": "orlc_si", "planner": "mass_constrained"},
        "episodes": 100_000,
        "seeds": [0],
    },
    "shift-paper": {
        "environment": {
            "kind": "contextual", "n_states": 10, "n_actions": 40, "horizon": 5, "dim_r": 10,
            "shift_episode": 2_000_000,
        },
        "algorithm": {"name": "orlc_si", "planner": "mass_constrained"},
        "episodes": 4_000_000,
        "seeds": [0],
        "stride": 1000,
    },
    "bandit-desk": {
        "environment": {"kind": "bandit", "n_actions": 20, "contextual": False},
        "algorithm": {"name": "orlc"},
        "episodes": 50_000,
        "seeds": [0],
    },
    "bandit-paper": {
        "environment": {"kind": "bandit", "n_actions": 100, "contextual": False},
        "algorithm": {"name": "orlc"},
        "episodes": 1_000_000,
        "seeds": [0],
        "correlation_stride": 10,
    },
    "contextual-bandit-desk": {
        "environment": {"kind": "bandit", "n_actions": 40, "dim_r": 10, "contextual": True},
        "algorithm": {"name": "orlc_si", "replan_every": 10},
        "episodes": 50_000,
        "seeds": [0],
    },
    "contextual-bandit-paper": {
        "environment": {"kind": "bandit", "n_actions": 40, "dim_r": 10, "contextual": True},
        "algorithm": {"name": "orlc_si", "replan_every": 1000},
        "episodes": 8_000_000,
        "seeds": [0],
        "stride": 1000,
    },
}


def merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``override`` into a copy of ``base``; ``None`` values do not override."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def preset(name: str) -> Dict[str, Any]:
    """
    Return a copy of a named preset.

    Raises:
        ConfigurationError: If no preset has this name
    """
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}", key="preset"
        )
    return copy.deepcopy(PRESETS[name])


def load_config_file(file_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a YAML experiment file.

    Raises:
        ConfigurationError: If the file is missing, unparsable or not a mapping
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {file_path}: {e}", key="config") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"invalid YAML in {file_path}: {e}", key="config") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {file_path} must contain a mapping", key="config")
    return data


def resolve_config(
    preset_name: Optional[str] = None,
    file_data: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Merge all configuration sources into one validated ExperimentConfig.

    Args:
        preset_name: Preset to start from; a ``preset`` key in the file is used otherwise
        file_data: Parsed YAML config file
        overrides: Values from command-line flags (``None`` entries are ignored)
        environ: Environment variables (defaults to ``os.environ``)

    Raises:
        ConfigurationError: If any source is invalid
    """
    environ = os.environ if environ is None else environ
    file_data = dict(file_data or {})
    merged: Dict[str, Any] = {}
    if environ.get(OUTPUT_DIR_ENV):
        merged["output_dir"] = environ[OUTPUT_DIR_ENV]
    name = preset_name or file_data.get("preset")
    if name:
        merged = merge(merged, preset(name))
        merged.setdefault("name", name)
    merged = merge(merged, file_data)
    merged = merge(merged, overrides or {})
    config = ExperimentConfig.from_dict(merged)
    logger.debug(f"Resolved configuration {config.name!r}: {config.to_dict()}")
    return config


def dump_config(config: ExperimentConfig) -> str:
    """YAML rendering of a resolved configuration."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True)
