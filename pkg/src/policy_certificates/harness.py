"""
Auditing of policy certificates against the true model.

Every emitted certificate is checked on the MDP the episode actually faced:
the optimality gap of the played policy must not exceed ``epsilon`` and the
policy's exact return must lie in the certified interval. ``aggregate`` turns
a run's audit records into cumulative, mistake-count and PAC-style metrics.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .mdp import policy_return, solve_exact
from .types import Certificate, EpisodeOutcome, PlanningResult, TabularMdp

logger = logging.getLogger(__name__)

AUDIT_TOLERANCE = 1e-9
DEFAULT_THRESHOLDS = (1.0, 0.5, 0.2, 0.1)
DEFAULT_PAC_LEVELS = (1.0, 0.5, 0.2, 0.1)


@dataclass(frozen=True)
class RunRecord:
    """
    Audit result of one episode.

    Attributes:
        k: 1-based episode index
        epsilon: Certified optimality gap bound
        interval_lo: Lower end of the certified return interval
        interval_hi: Upper end of the certified return interval
        gap: True optimality gap of the played policy
        policy_return: Exact return of the played policy
        optimal_return: Exact optimal return of the episode's MDP
        realized_reward: Sum of the sampled rewards
        context_tag: Context regime of the episode, if any
    """
    k: int
    epsilon: float
    interval_lo: float
    interval_hi: float
    gap: float
    policy_return: float
    optimal_return: float
    realized_reward: float = 0.0
    context_tag: Optional[str] = None

    @property
    def gap_valid(self) -> bool:
        return self.gap <= self.epsilon + AUDIT_TOLERANCE

    @property
    def return_valid(self) -> bool:
        return (
            self.interval_lo - AUDIT_TOLERANCE
            <= self.policy_return
            <= self.interval_hi + AUDIT_TOLERANCE
        )

    @property
    def valid(self) -> bool:
        return self.gap_valid and self.return_valid

    def to_dict(self) -> Dict[str, Any]:
        """Convert record to dictionary for JSON serialization."""
        return {
            "k": self.k,
            "epsilon": self.epsilon,
            "interval_lo": self.interval_lo,
            "interval_hi": self.interval_hi,
            "gap": self.gap,
            "policy_return": self.policy_return,
            "optimal_return": self.optimal_return,
            "realized_reward": self.realized_reward,
            "context_tag": self.context_tag,
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunRecord":
        return cls(
            k=int(data["k"]),
            epsilon=float(data["epsilon"]),
            interval_lo=float(data["interval_lo"]),
            interval_hi=float(data["interval_hi"]),
            gap=float(data["gap"]),
            policy_return=float(data["policy_return"]),
            optimal_return=float(data["optimal_return"]),
            realized_reward=float(data.get("realized_reward", 0.0)),
            context_tag=data.get("context_tag"),
        )


def audit_episode(
    environment: TabularMdp,
    policy: np.ndarray,
    certificate: Certificate,
    episode: int = 1,
    realized_reward: float = 0.0,
    context_tag: Optional[str] = None,
    planning: Optional[PlanningResult] = None,
) -> RunRecord:
    """
    Audit one certificate on the MDP of its episode.

    Args:
        environment: Realized MDP of the episode with its start state
        policy: (H, S) policy that was played
        certificate: Certificate emitted before the episode
        episode: Episode index k
        realized_reward: Sum of sampled rewards, recorded as is
        context_tag: Context regime, recorded as is
        planning: Exact solution of ``environment`` if already known

    Returns:
        RunRecord; validity is reported, never raised
    """
    if planning is None:
        planning = solve_exact(environment, validate=False)
    if environment.initial_distribution is not None:
        optimal = float(environment.initial_distribution @ planning.v_star[0])
    else:
        optimal = planning.optimal_return(environment.initial_state)
    achieved = policy_return(environment, policy)
    record = RunRecord(
        k=int(episode),
        epsilon=certificate.epsilon,
        interval_lo=certificate.lower,
        interval_hi=certificate.upper,
        gap=optimal - achieved,
        policy_return=achieved,
        optimal_return=optimal,
        realized_reward=float(realized_reward),
        context_tag=context_tag,
    )
    if not record.valid:
        logger.warning(
            f"Certificate violated in episode {episode}: epsilon={record.epsilon:.6g}, "
            f"gap={record.gap:.6g}, return={achieved:.6g} not in "
            f"[{record.interval_lo:.6g}, {record.interval_hi:.6g}]"
        )
    return record


def audit_outcome(outcome: EpisodeOutcome, planning: Optional[PlanningResult] = None) -> RunRecord:
    """Audit an outcome yielded by one of the learning runs."""
    return audit_episode(
        outcome.environment,
        outcome.policy,
        outcome.certificate,
        episode=outcome.episode,
        realized_reward=outcome.trace.total_reward,
        context_tag=outcome.context_tag,
        planning=planning,
    )


@dataclass
class AuditColumns:
    """Column-wise audit data of a whole run, the input of ``aggregate_columns``."""
    episodes: np.ndarray
    epsilon: np.ndarray
    gap: np.ndarray
    gap_valid: np.ndarray
    return_valid: np.ndarray

    @classmethod
    def allocate(cls, size: int) -> "AuditColumns":
        return cls(
            episodes=np.zeros(size, dtype=np.int64),
            epsilon=np.zeros(size),
            gap=np.zeros(size),
            gap_valid=np.ones(size, dtype=bool),
            return_valid=np.ones(size, dtype=bool),
        )

    @classmethod
    def from_records(cls, records: Sequence[RunRecord]) -> "AuditColumns":
        columns = cls.allocate(len(records))
        for i, record in enumerate(records):
            columns.set(i, record)
        return columns

    def set(self, index: int, record: RunRecord) -> None:
        self.episodes[index] = record.k
        self.epsilon[index] = record.epsilon
        self.gap[index] = record.gap
        self.gap_valid[index] = record.gap_valid
        self.return_valid[index] = record.return_valid


@dataclass
class IpocReport:
    """
    Aggregate certificate metrics of one run.

    Threshold-keyed maps use the threshold as key; ``to_dict`` renders keys as
    strings for JSON.
    """
    episodes: int
    validity_violations: int
    gap_violations: int
    return_violations: int
    cumulative_certificates: float
    regret: float
    mistake_counts: Dict[float, int] = field(default_factory=dict)
    intervention_precision: Dict[float, Optional[float]] = field(default_factory=dict)
    pearson_correlation: float = 0.0
    correlation_degenerate: bool = False
    pac_times: Dict[float, Optional[int]] = field(default_factory=dict)
    prefix_bound_holds: bool = True
    mean_epsilon: float = 0.0
    mean_gap: float = 0.0
    max_gap: float = 0.0
    final_epsilon: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert report to dictionary for JSON serialization."""
        return {
            "episodes": self.episodes,
            "validity_violations": self.validity_violations,
            "gap_violations": self.gap_violations,
            "return_violations": self.return_violations,
            "cumulative_certificates": self.cumulative_certificates,
            "regret": self.regret,
            "mistake_counts": _keyed(self.mistake_counts),
            "intervention_precision": _keyed(self.intervention_precision),
            "pearson_correlation": self.pearson_correlation,
            "correlation_degenerate": self.correlation_degenerate,
            "pac_times": _keyed(self.pac_times),
            "prefix_bound_holds": self.prefix_bound_holds,
            "mean_epsilon": self.mean_epsilon,
            "mean_gap": self.mean_gap,
            "max_gap": self.max_gap,
            "final_epsilon": self.final_epsilon,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IpocReport":
        return cls(
            episodes=int(data["episodes"]),
            validity_violations=int(data["validity_violations"]),
            gap_violations=int(data["gap_violations"]),
            return_violations=int(data["return_violations"]),
            cumulative_certificates=float(data["cumulative_certificates"]),
            regret=float(data["regret"]),
            mistake_counts={float(k): int(v) for k, v in data["mistake_counts"].items()},
            intervention_precision={
                float(k): v for k, v in data.get("intervention_precision", {}).items()
            },
            pearson_correlation=float(data["pearson_correlation"]),
            correlation_degenerate=bool(data.get("correlation_degenerate", False)),
            pac_times={float(k): v for k, v in data["pac_times"].items()},
            prefix_bound_holds=bool(data.get("prefix_bound_holds", True)),
            mean_epsilon=float(data.get("mean_epsilon", 0.0)),
            mean_gap=float(data.get("mean_gap", 0.0)),
            max_gap=float(data.get("max_gap", 0.0)),
            final_epsilon=float(data.get("final_epsilon", 0.0)),
            metadata=dict(data.get("metadata", {})),
        )


def _keyed(mapping: Dict[float, Any]) -> Dict[str, Any]:
    return {f"{key:g}": value for key, value in mapping.items()}


def pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    """Sample correlation of two series, or None if either is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return None
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


def pac_extraction(records: Iterable[RunRecord], epsilon: float) -> Optional[int]:
    """First episode index whose certificate is at most ``epsilon``, or None."""
    for record in records:
        if record.epsilon <= epsilon:
            return record.k
    return None


def first_certificate_below(
    episodes: np.ndarray, epsilon: np.ndarray, levels: Sequence[float]
) -> Dict[float, Optional[int]]:
    """
    ``pac_extraction`` for many levels at once.

    Binary search over the running minimum of the certificates.
    """
    result: Dict[float, Optional[int]] = {}
    if epsilon.size == 0:
        return {float(level): None for level in levels}
    running_min = np.minimum.accumulate(epsilon)
    for level in levels:
        index = int(np.searchsorted(-running_min, -level, side="left"))
        result[float(level)] = int(episodes[index]) if index < epsilon.size else None
    return result


def aggregate_columns(
    columns: AuditColumns,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    pac_levels: Sequence[float] = DEFAULT_PAC_LEVELS,
    correlation_stride: int = 1,
) -> IpocReport:
    """
    Compute the report of a run from its audit columns.

    Args:
        columns: Audit data ordered by episode
        thresholds: Mistake thresholds tau
        pac_levels: Levels for first-certificate-below times
        correlation_stride: Use every n-th episode for the correlation

    Returns:
        IpocReport

    Raises:
        ValueError: If there are no episodes
    """
    T = int(columns.epsilon.size)
    if T == 0:
        raise ValueError("cannot aggregate an empty run")
    eps, gap = columns.epsilon, columns.gap
    gap_violations = int((~columns.gap_valid).sum())
    return_violations = int((~columns.return_valid).sum())

    mistake_counts: Dict[float, int] = {}
    precision: Dict[float, Optional[float]] = {}
    for tau in thresholds:
        flagged = eps > tau
        count = int(flagged.sum())
        mistake_counts[float(tau)] = count
        precision[float(tau)] = float((gap[flagged] > tau).mean()) if count else None

    stride = max(int(correlation_stride), 1)
    correlation = pearson(eps[::stride], gap[::stride])
    if correlation is None:
        logger.warning("Certificate or gap series is constant; reporting correlation 0")

    slack = AUDIT_TOLERANCE * np.arange(1, T + 1)
    prefix_ok = bool(np.all(np.cumsum(gap) <= np.cumsum(eps) + slack))

    return IpocReport(
        episodes=T,
        validity_violations=gap_violations + return_violations,
        gap_violations=gap_violations,
        return_violations=return_violations,
        cumulative_certificates=float(eps.sum()),
        regret=float(gap.sum()),
        mistake_counts=mistake_counts,
        intervention_precision=precision,
        pearson_correlation=0.0 if correlation is None else correlation,
        correlation_degenerate=correlation is None,
        pac_times=first_certificate_below(columns.episodes, eps, pac_levels),
        prefix_bound_holds=prefix_ok,
        mean_epsilon=float(eps.mean()),
        mean_gap=float(gap.mean()),
        max_gap=float(gap.max()),
        final_epsilon=float(eps[-1]),
    )


def aggregate(
    records: Sequence[RunRecord],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    pac_levels: Sequence[float] = DEFAULT_PAC_LEVELS,
    correlation_stride: int = 1,
) -> IpocReport:
    """Compute the report of a run from its full list of records."""
    return aggregate_columns(
        AuditColumns.from_records(records), thresholds, pac_levels, correlation_stride
    )


def violating_records(records: Iterable[RunRecord]) -> List[RunRecord]:
    return [record for record in records if not record.valid]
