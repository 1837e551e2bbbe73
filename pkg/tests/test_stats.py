"""
Tests for the tabular visit statistics.
"""

import numpy as np
import pytest

from policy_certificates.exceptions import DimensionError
from policy_certificates.generators import gen_random_tabular
from policy_certificates.mdp import sample_episode
from policy_certificates.stats import VisitStats, update_stats
from policy_certificates.types import EpisodeTrace


def trace_of(steps, episode=1):
    states, actions, rewards, next_states = (np.array(column) for column in zip(*steps))
    return EpisodeTrace(
        episode=episode,
        states=states.astype(np.int64),
        actions=actions.astype(np.int64),
        rewards=rewards.astype(float),
        next_states=next_states.astype(np.int64),
    )


class TestVisitStats:
    """Test running means and counts."""

    def test_empty(self):
        """Test empty statistics have zero counts and uniform placeholder rows."""
        stats = VisitStats.empty(3, 2, 4)
        assert stats.total_visits == 0
        assert np.allclose(stats.transition_mean.sum(axis=-1), 1.0)
        assert (stats.n_states, stats.n_actions, stats.horizon) == (3, 2, 4)

    def test_single_visit(self):
        """Test one observation sets the count, mean and row exactly."""
        stats = VisitStats.empty(2, 1, 1)
        update_stats(stats, trace_of([(0, 0, 1.0, 1)]))
        assert stats.counts[0, 0] == 1
        assert stats.reward_mean[0, 0] == 1.0
        assert stats.transition_mean[0, 0].tolist() == [0.0, 1.0]

    def test_two_visits(self):
        """Test rewards 0.6 and 0.0 average to 0.3."""
        stats = VisitStats.empty(2, 1, 2)
        update_stats(stats, trace_of([(0, 0, 0.6, 0), (0, 0, 0.0, 1)]))
        assert stats.counts[0, 0] == 2
        assert stats.reward_mean[0, 0] == pytest.approx(0.3)
        assert stats.transition_mean[0, 0].tolist() == pytest.approx([0.5, 0.5])

    def test_matches_batch_recomputation(self):
        """Test running means equal means computed from all observations at once."""
        mdp = gen_random_tabular(4, 3, 5, seed=0, zero_reward_prob=0.2)
        rng = np.random.default_rng(1)
        stats = VisitStats.empty(4, 3, 5)
        observations = []
        for k in range(1, 301):
            policy = rng.integers(0, 3, size=(5, 4))
            trace = sample_episode(mdp, policy, rng, episode=k)
            update_stats(stats, trace)
            observations.extend(trace.steps)

        counts = np.zeros((4, 3))
        reward_sums = np.zeros((4, 3))
        successor_counts = np.zeros((4, 3, 4))
        for s, a, r, s_next in observations:
            counts[s, a] += 1
            reward_sums[s, a] += r
            successor_counts[s, a, s_next] += 1
        visited = counts > 0

        assert np.array_equal(stats.counts, counts)
        assert stats.total_visits == 300 * 5
        assert np.allclose(stats.reward_mean[visited], (reward_sums / np.maximum(counts, 1))[visited], atol=1e-12)
        expected_rows = successor_counts / np.maximum(counts, 1)[..., None]
        assert np.allclose(stats.transition_mean[visited], expected_rows[visited], atol=1e-12)
        assert np.allclose(stats.transition_mean.sum(axis=-1), 1.0)

    def test_copy_is_independent(self):
        """Test copies do not share arrays."""
        stats = VisitStats.empty(2, 1, 1)
        clone = stats.copy()
        update_stats(stats, trace_of([(0, 0, 1.0, 1)]))
        assert clone.counts[0, 0] == 0

    def test_out_of_range_trace(self):
        """Test traces with unknown states raise DimensionError."""
        stats = VisitStats.empty(2, 1, 1)
        with pytest.raises(DimensionError):
            update_stats(stats, trace_of([(0, 0, 1.0, 2)]))
        with pytest.raises(DimensionError):
            update_stats(stats, trace_of([(0, 1, 1.0, 0)]))
