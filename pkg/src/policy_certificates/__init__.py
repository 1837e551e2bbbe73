"""
Policy certificates: optimistic episodic reinforcement learning that states,
before every episode, a confidence interval on the return of the policy it is
about to play, together with a harness that audits those certificates against
the true model.

Copyright 2024

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

__version__ = "0.1.0"

from .confidence import (
    bonus_refined_lower,
    bonus_refined_upper,
    bonus_simple,
    delta_prime,
    llnp,
    phi,
    sigma_hat,
)
from .config import (
    PRESETS,
    AlgorithmSpec,
    EnvironmentSpec,
    ExperimentConfig,
    load_config_file,
    resolve_config,
)
from .exceptions import (
    ConfigurationError,
    DimensionError,
    InfeasibleSetError,
    InvalidMDPError,
    InvalidPolicyError,
    NumericalError,
    PolicyCertificatesError,
    ReportSchemaError,
    StorageError,
)
from .experiment import export_csv, run_experiment, summarize
from .generators import (
    ConstantContextSampler,
    DirichletContextSampler,
    gen_bandit,
    gen_random_contextual,
    gen_random_tabular,
    shift_schedule,
)
from .harness import (
    IpocReport,
    RunRecord,
    aggregate,
    audit_episode,
    first_certificate_below,
    pac_extraction,
)
from .least_squares import LsqStats, ellipsoid_width, model_point_estimates, update_lsq
from .mdp import (
    evaluate_policy,
    policy_return,
    realize_context,
    sample_episode,
    solve_exact,
)
from .orlc import ConfidenceConfig, plan_optimistic, run_orlc
from .orlc_si import EllipsoidConfig, plan_optimistic_si, run_orlc_si
from .prob_est import prob_est_norm
from .rng import SeedStreams
from .stats import VisitStats, update_stats
from .types import (
    BonusKind,
    Certificate,
    ConfidenceVariant,
    ContextualLinearMdp,
    EpisodeOutcome,
    EpisodeTrace,
    PlannerKind,
    PlanningResult,
    RewardNoise,
    TabularMdp,
    ValueBounds,
)
from .validation import MdpValidator, MdpViolation, validate_mdp

__all__ = [
    # Core types
    "TabularMdp",
    "ContextualLinearMdp",
    "EpisodeTrace",
    "EpisodeOutcome",
    "PlanningResult",
    "Certificate",
    "ValueBounds",
    "RewardNoise",
    "ConfidenceVariant",
    "BonusKind",
    "PlannerKind",
    # Exceptions
    "PolicyCertificatesError",
    "InvalidMDPError",
    "InvalidPolicyError",
    "DimensionError",
    "NumericalError",
    "InfeasibleSetError",
    "ConfigurationError",
    "StorageError",
    "ReportSchemaError",
    # Exact model operations
    "solve_exact",
    "evaluate_policy",
    "policy_return",
    "realize_context",
    "sample_episode",
    "validate_mdp",
    "MdpValidator",
    "MdpViolation",
    # Instances
    "gen_random_tabular",
    "gen_random_contextual",
    "gen_bandit",
    "shift_schedule",
    "ConstantContextSampler",
    "DirichletContextSampler",
    "SeedStreams",
    # Tabular learner
    "VisitStats",
    "update_stats",
    "delta_prime",
    "llnp",
    "phi",
    "sigma_hat",
    "bonus_simple",
    "bonus_refined_upper",
    "bonus_refined_lower",
    "ConfidenceConfig",
    "plan_optimistic",
    "run_orlc",
    # Side-information learner
    "LsqStats",
    "update_lsq",
    "model_point_estimates",
    "ellipsoid_width",
    "prob_est_norm",
    "EllipsoidConfig",
    "plan_optimistic_si",
    "run_orlc_si",
    # Auditing
    "RunRecord",
    "IpocReport",
    "audit_episode",
    "aggregate",
    "pac_extraction",
    "first_certificate_below",
    # Experiments
    "EnvironmentSpec",
    "AlgorithmSpec",
    "ExperimentConfig",
    "PRESETS",
    "load_config_file",
    "resolve_config",
    "run_experiment",
    "summarize",
    "export_csv",
]
