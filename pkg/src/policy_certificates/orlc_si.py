"""
Optimistic RL with certificates for MDPs with linear side information.

Rewards and transition probabilities of every (s, a) are estimated by
regularized least squares in the observed contexts. Planning widens the
point estimates by ellipsoid confidence widths; the mass-constrained planner
additionally keeps the successor distribution inside the probability simplex.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .exceptions import ConfigurationError
from .least_squares import LsqStats, ellipsoid_widths, union_bound_count, update_lsq
from .mdp import realize_context, sample_episode, sample_initial_state, with_start_state
from .prob_est import prob_est_norm_batch
from .rng import SeedStreams
from .types import (
    ContextSampler,
    ContextualLinearMdp,
    EpisodeOutcome,
    PlannerKind,
    TabularMdp,
    ValueBounds,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EllipsoidConfig:
    """
    Settings of the side-information algorithm.

    Attributes:
        delta: Overall failure tolerance in (0, 1)
        lam: Ridge regularizer lambda > 0
        xi_theta_r: Reward parameter norm bound (defaults to sqrt(dR))
        xi_theta_p: Transition parameter norm bound (defaults to sqrt(dP))
        planner: Plain widths or simplex mass constraints
        replan_every: Resample contexts and replan every this many episodes
    """
    delta: float = 0.1
    lam: float = 1.0
    xi_theta_r: Optional[float] = None
    xi_theta_p: Optional[float] = None
    planner: PlannerKind = PlannerKind.MASS_CONSTRAINED
    replan_every: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}", key="delta")
        if self.lam <= 0.0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}", key="lam")
        for key in ("xi_theta_r", "xi_theta_p"):
            value = getattr(self, key)
            if value is not None and value <= 0.0:
                raise ConfigurationError(f"{key} must be positive, got {value}", key=key)
        if self.replan_every < 1:
            raise ConfigurationError(
                f"replan_every must be at least 1, got {self.replan_every}", key="replan_every"
            )

    def norm_bounds(self, dim_r: int, dim_p: int) -> Tuple[float, float]:
        """Return ``(xi_r, xi_p)`` with unset bounds replaced by the square root of the dimension."""
        xi_r = self.xi_theta_r if self.xi_theta_r is not None else math.sqrt(dim_r)
        xi_p = self.xi_theta_p if self.xi_theta_p is not None else math.sqrt(dim_p)
        return xi_r, xi_p


def plan_optimistic_si(
    stats: LsqStats,
    config: EllipsoidConfig,
    context_r: np.ndarray,
    context_p: np.ndarray,
    horizon: int,
) -> ValueBounds:
    """
    Compute optimistic and pessimistic value bounds at the current contexts.

    The plain planner uses ``psi = ||V_up||_1 phi_p + phi_r`` around the clipped
    point estimates. The mass-constrained planner replaces the transition
    term by the extreme expectation over the box-constrained simplex, falling
    back to the plain term wherever that set is empty.

    Args:
        stats: Least-squares statistics
        config: Algorithm settings
        context_r: Reward context of the episode
        context_p: Transition context of the episode
        horizon: Episode length H

    Returns:
        ValueBounds clipped to ``[0, H - t]`` at step ``t``
    """
    x_r = np.asarray(context_r, dtype=float)
    x_p = np.asarray(context_p, dtype=float)
    S, A, H = stats.n_states, stats.n_actions, int(horizon)
    xi_r, xi_p = config.norm_bounds(stats.dim_r, stats.dim_p)
    count = union_bound_count(S, A, H)

    theta_r, theta_p = stats.estimates()
    inv_r, inv_p = stats.inverse_grams()
    logdet_r, logdet_p = stats.log_determinants()
    r_hat = np.clip(theta_r @ x_r, 0.0, 1.0)
    p_hat = np.clip(theta_p @ x_p, 0.0, 1.0)
    phi_r = ellipsoid_widths(inv_r, logdet_r, x_r, xi_r, config.delta, stats.lam, count)
    phi_p = ellipsoid_widths(inv_p, logdet_p, x_p, xi_p, config.delta, stats.lam, count)
    constrained = config.planner is PlannerKind.MASS_CONSTRAINED

    q_upper = np.zeros((H, S, A))
    q_lower = np.zeros((H, S, A))
    v_upper = np.zeros((H + 1, S))
    v_lower = np.zeros((H + 1, S))
    policy = np.zeros((H, S), dtype=np.int64)
    states = np.arange(S)
    fallbacks = 0

    for t in range(H - 1, -1, -1):
        max_value = float(H - t)
        up_next, low_next = v_upper[t + 1], v_lower[t + 1]
        transition_width = float(np.abs(up_next).sum()) * phi_p
        up_expect = p_hat @ up_next + transition_width
        low_expect = p_hat @ low_next - transition_width
        if constrained:
            best, feasible_up = prob_est_norm_batch(p_hat, phi_p, up_next)
            worst, feasible_low = prob_est_norm_batch(p_hat, phi_p, -low_next)
            up_expect = np.where(feasible_up, best, up_expect)
            low_expect = np.where(feasible_low, -worst, low_expect)
            fallbacks += int((~feasible_up).sum() + (~feasible_low).sum())

        upper = np.minimum(np.maximum(r_hat + up_expect + phi_r, 0.0), max_value)
        lower = np.minimum(np.maximum(r_hat + low_expect - phi_r, 0.0), max_value)
        q_upper[t], q_lower[t] = upper, lower
        policy[t] = np.argmax(upper, axis=1)
        v_upper[t] = upper[states, policy[t]]
        v_lower[t] = lower[states, policy[t]]

    if fallbacks:
        logger.warning(
            f"Simplex constraint infeasible for {fallbacks} entry(ies); used plain widths there"
        )
    return ValueBounds(
        q_upper=q_upper, q_lower=q_lower, v_upper=v_upper, v_lower=v_lower, policy=policy
    )


def context_tag(sampler: ContextSampler, episode: int) -> Optional[str]:
    """Name of the context regime of ``episode``, if the sampler has scheduled regimes."""
    segment_at = getattr(sampler, "segment_at", None)
    if segment_at is None:
        return None
    return f"segment-{segment_at(episode)}"


def run_orlc_si(
    cmdp: ContextualLinearMdp,
    episodes: int,
    config: Optional[EllipsoidConfig] = None,
    rng: Union[SeedStreams, int] = 0,
    stats: Optional[LsqStats] = None,
    first_episode: int = 1,
) -> Iterator[EpisodeOutcome]:
    """
    Run the side-information algorithm and yield one outcome per episode.

    Each episode (or block of ``replan_every`` episodes) observes fresh
    contexts and plans on them; the realized tabular MDP is used to simulate
    the episode and is handed out for auditing, never to the planner.

    Args:
        cmdp: Contextual environment
        episodes: Number of episodes T >= 1
        config: Algorithm settings (defaults to ``EllipsoidConfig()``)
        rng: SeedStreams or a root seed
        stats: Statistics to resume from (updated in place)
        first_episode: Index of the first episode when resuming

    Yields:
        EpisodeOutcome with the episode's contexts attached to its trace
    """
    if episodes < 1:
        raise ConfigurationError(f"episodes must be at least 1, got {episodes}", key="episodes")
    config = config or EllipsoidConfig()
    streams = rng if isinstance(rng, SeedStreams) else SeedStreams.from_seed(rng)
    if stats is None:
        stats = LsqStats.empty(cmdp.n_states, cmdp.n_actions, cmdp.dim_r, cmdp.dim_p, config.lam)
    logger.info(
        f"Running ORLC-SI for {episodes} episode(s) on S={cmdp.n_states} A={cmdp.n_actions} "
        f"H={cmdp.horizon} dR={cmdp.dim_r} dP={cmdp.dim_p} (planner={config.planner.value})"
    )

    bounds: Optional[ValueBounds] = None
    environment: Optional[TabularMdp] = None
    x_r = x_p = None
    tag: Optional[str] = None
    for k in range(first_episode, first_episode + episodes):
        if bounds is None or (k - first_episode) % config.replan_every == 0:
            x_r = cmdp.context_r.sample(k, streams.context)
            x_p = cmdp.context_p.sample(k, streams.context)
            environment = realize_context(cmdp, x_r, x_p)
            tag = context_tag(cmdp.context_r, k)
            bounds = plan_optimistic_si(stats, config, x_r, x_p, cmdp.horizon)
        start = sample_initial_state(environment, streams.transition)
        certificate = bounds.certificate(start)
        trace = sample_episode(
            environment,
            bounds.policy,
            streams.transition,
            streams.reward,
            episode=k,
            start_state=start,
            context_r=x_r,
            context_p=x_p,
        )
        update_lsq(stats, trace)
        logger.debug(f"Episode {k}: epsilon={certificate.epsilon:.6g}")
        yield EpisodeOutcome(
            episode=k,
            certificate=certificate,
            policy=bounds.policy,
            trace=trace,
            environment=with_start_state(environment, start),
            context_tag=tag,
        )
