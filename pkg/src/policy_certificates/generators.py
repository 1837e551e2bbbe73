"""
Random instance generators and context samplers for the benchmark problems.

- random tabular MDPs: sparse mean rewards and Dirichlet(0.1) dynamics
- contextual MDPs: linear rewards in a Dirichlet-distributed context whose
  prior can shift at scheduled episodes, constant transition context
- bandits (S = H = 1), with or without reward context

All generators draw from the ``instance`` stream of the root seed, so the same
seed always yields the same instance.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .rng import stream
from .types import ContextualLinearMdp, RewardNoise, TabularMdp

logger = logging.getLogger(__name__)

AlphaSchedule = List[Tuple[int, np.ndarray]]


def _normalize_rows(samples: np.ndarray) -> np.ndarray:
    """Renormalize Dirichlet draws; degenerate rows fall back to uniform."""
    sums = samples.sum(axis=-1, keepdims=True)
    bad = ~np.isfinite(sums) | (sums <= 0.0)
    if np.any(bad):
        logger.warning(f"Replacing {int(bad.sum())} degenerate Dirichlet draw(s) by uniform rows")
        samples = np.where(bad, 1.0, samples)
        sums = samples.sum(axis=-1, keepdims=True)
    return samples / sums


class ConstantContextSampler:
    """Returns the same context in every episode."""

    def __init__(self, value: Sequence[float]) -> None:
        self.value = np.array(value, dtype=float)
        self.value.flags.writeable = False
        self.dimension = int(self.value.shape[0])

    def sample(self, episode: int, rng: np.random.Generator) -> np.ndarray:
        return self.value

    def describe(self) -> Dict[str, Any]:
        return {"kind": "constant", "value": self.value.tolist()}


class DirichletContextSampler:
    """
    Draws contexts from a Dirichlet prior that may change at scheduled episodes.

    The schedule is a list of ``(first_episode, alpha)`` pairs sorted by episode;
    ``alpha`` applies from ``first_episode`` (1-based) until the next entry.
    """

    def __init__(self, schedule: Sequence[Tuple[int, Sequence[float]]]) -> None:
        if not schedule:
            raise ValueError("schedule must contain at least one (episode, alpha) pair")
        entries = sorted(
            ((int(start), np.array(alpha, dtype=float)) for start, alpha in schedule),
            key=lambda entry: entry[0],
        )
        dims = {alpha.shape for _, alpha in entries}
        if len(dims) != 1:
            raise ValueError(f"all alpha vectors must have the same length, got {sorted(dims)}")
        if any(np.any(alpha <= 0) for _, alpha in entries):
            raise ValueError("Dirichlet parameters must be positive")
        self.schedule: AlphaSchedule = entries
        self.dimension = int(entries[0][1].shape[0])

    def segment_at(self, episode: int) -> int:
        """Index of the schedule entry in effect for 1-based ``episode``."""
        index = 0
        for i, (start, _) in enumerate(self.schedule):
            if episode >= start:
                index = i
            else:
                break
        return index

    def alpha_at(self, episode: int) -> np.ndarray:
        """Return the prior in effect for 1-based ``episode``."""
        return self.schedule[self.segment_at(episode)][1]

    def sample(self, episode: int, rng: np.random.Generator) -> np.ndarray:
        draw = rng.dirichlet(self.alpha_at(episode))
        return _normalize_rows(draw[None, :])[0]

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": "dirichlet",
            "schedule": [[start, alpha.tolist()] for start, alpha in self.schedule],
        }


def shift_schedule(
    dim_r: int,
    shift_episode: Optional[int],
    rare_dims: int = 4,
    rare_alpha: float = 0.01,
    common_alpha: float = 0.7,
) -> AlphaSchedule:
    """
    Context prior that makes rare dimensions frequent from ``shift_episode`` on.

    Before the shift the first ``rare_dims`` coordinates have parameter
    ``rare_alpha`` and the rest ``common_alpha``; afterwards all are ``common_alpha``.
    ``shift_episode=None`` keeps the initial prior forever.
    """
    before = np.full(dim_r, common_alpha)
    before[: min(rare_dims, dim_r)] = rare_alpha
    schedule: AlphaSchedule = [(1, before)]
    if shift_episode is not None:
        schedule.append((int(shift_episode), np.full(dim_r, common_alpha)))
    return schedule


def gen_random_tabular(
    n_states: int,
    n_actions: int,
    horizon: int,
    seed: int,
    zero_reward_prob: float = 0.85,
    dirichlet_alpha: float = 0.1,
    reward_noise: RewardNoise = RewardNoise.BERNOULLI,
) -> TabularMdp:
    """
    Generate a random tabular MDP.

    Each mean reward is 0 with probability ``zero_reward_prob`` and Unif[0, 1]
    otherwise; each transition row is Dirichlet(``dirichlet_alpha``).

    Args:
        n_states: S
        n_actions: A
        horizon: H
        seed: Root seed; the instance stream is derived from it
    """
    if min(n_states, n_actions, horizon) < 1:
        raise ValueError("n_states, n_actions and horizon must be positive")
    rng = stream(seed, "instance")
    transitions = _normalize_rows(
        rng.dirichlet(np.full(n_states, dirichlet_alpha), size=(n_states, n_actions))
    )
    is_zero = rng.random((n_states, n_actions)) < zero_reward_prob
    rewards = np.where(is_zero, 0.0, rng.random((n_states, n_actions)))
    logger.debug(f"Generated random tabular MDP S={n_states} A={n_actions} H={horizon} seed={seed}")
    return TabularMdp(
        transitions=transitions,
        rewards=rewards,
        horizon=horizon,
        reward_noise=reward_noise,
        initial_state=0,
        metadata={
            "generator": "random_tabular",
            "seed": int(seed),
            "zero_reward_prob": zero_reward_prob,
            "dirichlet_alpha": dirichlet_alpha,
        },
    )


def _sparse_uniform(rng: np.random.Generator, shape: Tuple[int, ...], nonzero_prob: float):
    keep = rng.random(shape) < nonzero_prob
    return np.where(keep, rng.random(shape), 0.0)


def gen_random_contextual(
    n_states: int,
    n_actions: int,
    horizon: int,
    dim_r: int,
    alpha_schedule: AlphaSchedule,
    seed: int,
    reward_nonzero_prob: float = 0.5,
    dirichlet_alpha: float = 0.3,
    reward_noise: RewardNoise = RewardNoise.BERNOULLI,
) -> ContextualLinearMdp:
    """
    Generate an MDP with linear reward side information.

    Reward parameters are ``Bernoulli(reward_nonzero_prob) * Unif(0, 1)`` per
    coordinate, so rewards for any context on the simplex lie in [0, 1].
    Transitions do not depend on context (dP = 1, constant context 1) and each
    row is Dirichlet(``dirichlet_alpha``).

    Args:
        alpha_schedule: ``(first_episode, alpha)`` pairs for the reward context prior
        seed: Root seed; the instance stream is derived from it
    """
    if min(n_states, n_actions, horizon, dim_r) < 1:
        raise ValueError("dimensions must be positive")
    rng = stream(seed, "instance")
    theta_r = _sparse_uniform(rng, (n_states, n_actions, dim_r), reward_nonzero_prob)
    rows = _normalize_rows(
        rng.dirichlet(np.full(n_states, dirichlet_alpha), size=(n_states, n_actions))
    )
    theta_p = rows[..., None]
    context_r = DirichletContextSampler(alpha_schedule)
    if context_r.dimension != dim_r:
        raise ValueError(f"schedule dimension {context_r.dimension} does not match dim_r={dim_r}")
    return ContextualLinearMdp(
        theta_r=theta_r,
        theta_p=theta_p,
        horizon=horizon,
        context_r=context_r,
        context_p=ConstantContextSampler([1.0]),
        xi_theta_r=float(np.sqrt(dim_r)),
        xi_theta_p=1.0,
        xi_x_r=1.0,
        xi_x_p=1.0,
        reward_noise=reward_noise,
        metadata={
            "generator": "random_contextual",
            "seed": int(seed),
            "reward_nonzero_prob": reward_nonzero_prob,
            "dirichlet_alpha": dirichlet_alpha,
        },
    )


def bandit_context_alpha(dim_r: int, frequent_dims: int = 7) -> np.ndarray:
    """Context prior with ``frequent_dims`` common (0.7) and the remaining rare (0.01) dimensions."""
    alpha = np.full(dim_r, 0.01)
    alpha[:frequent_dims] = 0.7
    return alpha


def gen_bandit(
    n_actions: int,
    dim_r: int,
    seed: int,
    contextual: bool = True,
    nonzero_prob: float = 0.9,
    reward_noise: RewardNoise = RewardNoise.BERNOULLI,
) -> ContextualLinearMdp:
    """
    Generate a bandit problem (S = H = 1).

    With ``contextual=True`` the reward context is Dirichlet with prior
    ``bandit_context_alpha(dim_r)``; otherwise ``dim_r`` is forced to 1 and the
    context is the constant 1, so every episode faces the same arm means.

    Args:
        n_actions: Number of arms
        dim_r: Reward context dimension (ignored without context)
        seed: Root seed; the instance stream is derived from it
    """
    if n_actions < 1:
        raise ValueError("n_actions must be at least 1")
    dim = dim_r if contextual else 1
    rng = stream(seed, "instance")
    theta_r = _sparse_uniform(rng, (1, n_actions, dim), nonzero_prob)
    if contextual:
        context_r: Any = DirichletContextSampler([(1, bandit_context_alpha(dim))])
    else:
        context_r = ConstantContextSampler([1.0])
    return ContextualLinearMdp(
        theta_r=theta_r,
        theta_p=np.ones((1, n_actions, 1, 1)),
        horizon=1,
        context_r=context_r,
        context_p=ConstantContextSampler([1.0]),
        xi_theta_r=float(np.sqrt(dim)),
        xi_theta_p=1.0,
        reward_noise=reward_noise,
        metadata={
            "generator": "bandit",
            "seed": int(seed),
            "contextual": contextual,
            "nonzero_prob": nonzero_prob,
        },
    )
