"""
Sufficient statistics of the tabular empirical model.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError
from .types import EpisodeTrace


@dataclass(eq=False)
class VisitStats:
    """
    Visit counts and running means per (state, action).

    Unvisited pairs hold a zero mean reward and a uniform placeholder row;
    planning never lets these placeholders reach an unclipped value.

    Attributes:
        counts: (S, A) visit counts n(s, a)
        reward_mean: (S, A) empirical mean rewards
        transition_mean: (S, A, S) empirical successor frequencies
        horizon: Episode length of the run the statistics belong to
    """
    counts: np.ndarray
    reward_mean: np.ndarray
    transition_mean: np.ndarray
    horizon: int

    @classmethod
    def empty(cls, n_states: int, n_actions: int, horizon: int) -> "VisitStats":
        return cls(
            counts=np.zeros((n_states, n_actions), dtype=np.int64),
            reward_mean=np.zeros((n_states, n_actions)),
            transition_mean=np.full((n_states, n_actions, n_states), 1.0 / n_states),
            horizon=int(horizon),
        )

    @property
    def n_states(self) -> int:
        return int(self.counts.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.counts.shape[1])

    @property
    def total_visits(self) -> int:
        return int(self.counts.sum())

    def copy(self) -> "VisitStats":
        return VisitStats(
            counts=self.counts.copy(),
            reward_mean=self.reward_mean.copy(),
            transition_mean=self.transition_mean.copy(),
            horizon=self.horizon,
        )


def update_stats(stats: VisitStats, trace: EpisodeTrace) -> VisitStats:
    """
    Fold one episode into the running means, in place.

    Every (s, a, h) visit increments n(s, a) once and moves the means by
    ``(observation - mean) / n``.

    Returns:
        The same ``stats`` object, for chaining

    Raises:
        DimensionError: If the trace references states or actions out of range
    """
    S, A = stats.n_states, stats.n_actions
    if trace.states.size and (
        trace.states.max() >= S or trace.next_states.max() >= S or trace.actions.max() >= A
        or min(trace.states.min(), trace.next_states.min(), trace.actions.min()) < 0
    ):
        raise DimensionError(f"trace of episode {trace.episode} has indices outside S={S}, A={A}")
    counts, reward_mean, transition_mean = stats.counts, stats.reward_mean, stats.transition_mean
    for step in trace:
        s, a = step.state, step.action
        counts[s, a] += 1
        weight = 1.0 / counts[s, a]
        reward_mean[s, a] += (step.reward - reward_mean[s, a]) * weight
        row = transition_mean[s, a]
        row *= 1.0 - weight
        row[step.next_state] += weight
    return stats
