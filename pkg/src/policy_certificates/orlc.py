"""
Optimistic RL with certificates for tabular MDPs.

Before every episode the planner runs two coupled backward inductions on the
empirical model: an optimistic one whose greedy policy is played, and a
pessimistic evaluation of that same policy. The gap between the two values of
the start state is the episode's certificate.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from .confidence import phi, refined_lower_widths, refined_upper_widths, simple_widths
from .exceptions import ConfigurationError
from .mdp import sample_episode, sample_initial_state, with_start_state
from .rng import SeedStreams
from .stats import VisitStats, update_stats
from .types import BonusKind, ConfidenceVariant, EpisodeOutcome, TabularMdp, ValueBounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfidenceConfig:
    """
    Settings of the tabular algorithm.

    Attributes:
        delta: Overall failure tolerance in (0, 1)
        variant: Constants used inside phi
        bonus: Width formulas used during planning
        replan_every: Recompute policy and certificate every this many episodes
    """
    delta: float = 0.1
    variant: ConfidenceVariant = ConfidenceVariant.APPENDIX
    bonus: BonusKind = BonusKind.REFINED
    replan_every: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}", key="delta")
        if self.replan_every < 1:
            raise ConfigurationError(
                f"replan_every must be at least 1, got {self.replan_every}", key="replan_every"
            )


def plan_optimistic(stats: VisitStats, config: ConfidenceConfig) -> ValueBounds:
    """
    Compute optimistic and pessimistic value bounds from the empirical model.

    Both tables are clipped to ``[0, H - t]`` at step ``t``; pairs that were
    never visited are pinned to the full range.

    Args:
        stats: Current visit statistics
        config: Confidence settings

    Returns:
        ValueBounds with the greedy policy of the upper bounds
    """
    S, A, H = stats.n_states, stats.n_actions, stats.horizon
    phi_values = phi(stats.counts, S, A, H, config.delta, config.variant)
    unvisited = stats.counts == 0
    p_hat, r_hat = stats.transition_mean, stats.reward_mean
    states = np.arange(S)

    q_upper = np.zeros((H, S, A))
    q_lower = np.zeros((H, S, A))
    v_upper = np.zeros((H + 1, S))
    v_lower = np.zeros((H + 1, S))
    policy = np.zeros((H, S), dtype=np.int64)

    for t in range(H - 1, -1, -1):
        max_value = float(H - t)
        up_next, low_next = v_upper[t + 1], v_lower[t + 1]
        if config.bonus is BonusKind.SIMPLE:
            width_up = width_low = simple_widths(p_hat, up_next, low_next, phi_values, S, H)
        else:
            width_up = refined_upper_widths(p_hat, up_next, low_next, phi_values, max_value - 1, H)
            width_low = refined_lower_widths(
                p_hat, up_next, low_next, phi_values, max_value - 1, S, H
            )
        upper = np.minimum(np.maximum(r_hat + p_hat @ up_next + width_up, 0.0), max_value)
        lower = np.minimum(np.maximum(r_hat + p_hat @ low_next - width_low, 0.0), max_value)
        upper[unvisited] = max_value
        lower[unvisited] = 0.0

        q_upper[t], q_lower[t] = upper, lower
        policy[t] = np.argmax(upper, axis=1)
        v_upper[t] = upper[states, policy[t]]
        v_lower[t] = lower[states, policy[t]]

    return ValueBounds(
        q_upper=q_upper, q_lower=q_lower, v_upper=v_upper, v_lower=v_lower, policy=policy
    )


def run_orlc(
    mdp: TabularMdp,
    episodes: int,
    config: Optional[ConfidenceConfig] = None,
    rng: Union[SeedStreams, int] = 0,
    stats: Optional[VisitStats] = None,
    first_episode: int = 1,
) -> Iterator[EpisodeOutcome]:
    """
    Run the tabular algorithm and yield one outcome per episode.

    Each episode: draw the start state, plan (every ``replan_every`` episodes),
    emit the certificate of the start state, execute the greedy policy and
    fold the observed transitions into the statistics.

    Args:
        mdp: Environment; only sampled from, never read by the planner
        episodes: Number of episodes T >= 1
        config: Confidence settings (defaults to ``ConfidenceConfig()``)
        rng: SeedStreams or a root seed
        stats: Statistics to resume from (updated in place)
        first_episode: Index of the first episode when resuming

    Yields:
        EpisodeOutcome for episodes ``first_episode .. first_episode + episodes - 1``
    """
    if episodes < 1:
        raise ConfigurationError(f"episodes must be at least 1, got {episodes}", key="episodes")
    config = config or ConfidenceConfig()
    streams = rng if isinstance(rng, SeedStreams) else SeedStreams.from_seed(rng)
    if stats is None:
        stats = VisitStats.empty(mdp.n_states, mdp.n_actions, mdp.horizon)
    logger.info(
        f"Running ORLC for {episodes} episode(s) on S={mdp.n_states} A={mdp.n_actions} "
        f"H={mdp.horizon} (bonus={config.bonus.value}, variant={config.variant.value})"
    )

    bounds: Optional[ValueBounds] = None
    for k in range(first_episode, first_episode + episodes):
        start = sample_initial_state(mdp, streams.transition)
        if bounds is None or (k - first_episode) % config.replan_every == 0:
            bounds = plan_optimistic(stats, config)
        certificate = bounds.certificate(start)
        trace = sample_episode(
            mdp, bounds.policy, streams.transition, streams.reward, episode=k, start_state=start
        )
        update_stats(stats, trace)
        logger.debug(f"Episode {k}: epsilon={certificate.epsilon:.6g}")
        yield EpisodeOutcome(
            episode=k,
            certificate=certificate,
            policy=bounds.policy,
            trace=trace,
            environment=with_start_state(mdp, start),
        )
