"""
Tests for exact planning, policy evaluation, context realization and sampling.
"""

import itertools

import numpy as np
import pytest

from policy_certificates.exceptions import DimensionError, InvalidMDPError, InvalidPolicyError
from policy_certificates.generators import ConstantContextSampler, gen_random_tabular
from policy_certificates.mdp import (
    check_policy,
    evaluate_policy,
    policy_return,
    realize_context,
    sample_episode,
    sample_initial_state,
    solve_exact,
    with_start_state,
)
from policy_certificates.types import ContextualLinearMdp, RewardNoise, TabularMdp


def brute_force_optimum(mdp, start):
    """Best return over all deterministic time-dependent policies."""
    H, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
    best = -np.inf
    for actions in itertools.product(range(A), repeat=H * S):
        policy = np.array(actions).reshape(H, S)
        best = max(best, evaluate_policy(mdp, policy)[0, start])
    return best


class TestSolveExact:
    """Test backward induction."""

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_policy_enumeration(self, seed):
        """Test optimal values equal the brute-force maximum over policies."""
        mdp = gen_random_tabular(2, 2, 3, seed=seed, zero_reward_prob=0.3)
        result = solve_exact(mdp)
        for start in range(mdp.n_states):
            assert result.v_star[0, start] == pytest.approx(brute_force_optimum(mdp, start), abs=1e-9)

    def test_value_table_shape_and_terminal_row(self):
        """Test value tables carry an all-zero row after the last step."""
        mdp = gen_random_tabular(4, 3, 5, seed=1)
        result = solve_exact(mdp)
        assert result.v_star.shape == (6, 4)
        assert result.q_star.shape == (5, 4, 3)
        assert np.all(result.v_star[-1] == 0.0)

    def test_values_bounded_by_remaining_steps(self):
        """Test 0 <= V*(t) <= H - t."""
        mdp = gen_random_tabular(5, 3, 6, seed=2, zero_reward_prob=0.0)
        result = solve_exact(mdp)
        for t in range(mdp.horizon):
            assert np.all(result.v_star[t] >= 0.0)
            assert np.all(result.v_star[t] <= mdp.max_value(t) + 1e-12)

    def test_ties_break_to_lowest_action(self):
        """Test equal action values select the lowest index."""
        mdp = TabularMdp(
            transitions=np.ones((1, 3, 1)), rewards=np.array([[0.5, 0.5, 0.5]]), horizon=2
        )
        assert np.all(solve_exact(mdp).policy == 0)

    def test_optimal_policy_achieves_optimal_value(self):
        """Test the greedy policy's exact return equals V*."""
        mdp = gen_random_tabular(4, 3, 4, seed=3)
        result = solve_exact(mdp)
        assert policy_return(mdp, result.policy) == pytest.approx(result.optimal_return(0))

    def test_rejects_invalid_mdp(self):
        """Test invalid models raise InvalidMDPError with violations."""
        mdp = TabularMdp(transitions=np.full((1, 1, 1), 0.5), rewards=np.zeros((1, 1)), horizon=1)
        with pytest.raises(InvalidMDPError) as exc_info:
            solve_exact(mdp)
        assert exc_info.value.violations[0].rule_name == "transition_normalized"


class TestPolicyEvaluation:
    """Test policy evaluation and policy checks."""

    def test_two_step_chain(self):
        """Test a hand-computed return."""
        transitions = np.zeros((2, 2, 2))
        transitions[0, 0, 1] = 1.0
        transitions[0, 1, 0] = 1.0
        transitions[1, :, 1] = 1.0
        rewards = np.array([[0.2, 0.6], [1.0, 0.0]])
        mdp = TabularMdp(transitions=transitions, rewards=rewards, horizon=2)

        assert policy_return(mdp, np.array([[0, 0], [0, 0]])) == pytest.approx(1.2)
        assert policy_return(mdp, np.array([[1, 0], [1, 0]])) == pytest.approx(1.2)
        assert policy_return(mdp, np.array([[1, 0], [0, 0]])) == pytest.approx(0.8)

    def test_initial_distribution_averages(self):
        """Test returns are averaged over a start distribution."""
        mdp = gen_random_tabular(3, 2, 3, seed=5)
        policy = solve_exact(mdp).policy
        values = evaluate_policy(mdp, policy)[0]
        dist = np.array([0.2, 0.3, 0.5])
        mixed = TabularMdp(mdp.transitions, mdp.rewards, mdp.horizon, initial_distribution=dist)
        assert policy_return(mixed, policy) == pytest.approx(float(dist @ values))

    def test_incomplete_policy_rejected(self):
        """Test wrong policy shapes raise InvalidPolicyError."""
        mdp = gen_random_tabular(3, 2, 4, seed=0)
        with pytest.raises(InvalidPolicyError) as exc_info:
            policy_return(mdp, np.zeros((3, 3), dtype=int))
        assert exc_info.value.expected_shape == (4, 3)

    def test_unknown_action_rejected(self):
        """Test out-of-range actions raise InvalidPolicyError."""
        mdp = gen_random_tabular(3, 2, 4, seed=0)
        with pytest.raises(InvalidPolicyError):
            check_policy(mdp, np.full((4, 3), 2))

    def test_integral_float_policy_accepted(self):
        """Test float tables with integral entries are converted."""
        mdp = gen_random_tabular(2, 2, 2, seed=0)
        table = check_policy(mdp, np.ones((2, 2)))
        assert table.dtype.kind == "i"


class TestRealizeContext:
    """Test realization of contextual models."""

    def contextual(self):
        theta_r = np.zeros((1, 2, 2))
        theta_r[0, 0] = [1.0, 0.0]
        theta_r[0, 1] = [0.0, 1.0]
        return ContextualLinearMdp(
            theta_r=theta_r,
            theta_p=np.ones((1, 2, 1, 1)),
            horizon=1,
            context_r=ConstantContextSampler([0.25, 0.75]),
            context_p=ConstantContextSampler([1.0]),
        )

    def test_linear_rewards(self):
        """Test R = theta_r x_r."""
        mdp = realize_context(self.contextual(), np.array([0.25, 0.75]), np.array([1.0]))
        assert mdp.rewards[0].tolist() == pytest.approx([0.25, 0.75])
        assert validate_rows(mdp)

    def test_dimension_mismatch(self):
        """Test wrong context length raises DimensionError."""
        with pytest.raises(DimensionError) as exc_info:
            realize_context(self.contextual(), np.array([1.0]), np.array([1.0]))
        assert exc_info.value.expected == 2

    def test_invalid_realization(self):
        """Test contexts that leave the simplex produce InvalidMDPError."""
        with pytest.raises(InvalidMDPError):
            realize_context(self.contextual(), np.array([2.0, 0.0]), np.array([1.0]))


def validate_rows(mdp):
    return np.allclose(mdp.transitions.sum(axis=-1), 1.0)


class TestSampling:
    """Test episode sampling."""

    def test_trace_shapes(self):
        """Test trace arrays have length H and successors chain."""
        mdp = gen_random_tabular(4, 2, 6, seed=0)
        trace = sample_episode(mdp, np.zeros((6, 4), dtype=int), np.random.default_rng(0), episode=7)
        assert trace.episode == 7
        assert trace.horizon == 6
        assert np.all(trace.states[1:] == trace.next_states[:-1])
        assert trace.states[0] == 0
        assert len(trace.steps) == 6

    def test_monte_carlo_return(self):
        """Test mean sampled return approaches the exact return."""
        mdp = gen_random_tabular(3, 2, 3, seed=4, zero_reward_prob=0.2)
        policy = solve_exact(mdp).policy
        rng = np.random.default_rng(11)
        returns = [sample_episode(mdp, policy, rng).total_reward for _ in range(20_000)]
        assert np.mean(returns) == pytest.approx(policy_return(mdp, policy), abs=0.05)

    def test_bernoulli_rewards_are_binary(self):
        """Test Bernoulli noise produces rewards in {0, 1}."""
        mdp = gen_random_tabular(3, 2, 4, seed=4, zero_reward_prob=0.0)
        trace = sample_episode(mdp, np.zeros((4, 3), dtype=int), np.random.default_rng(1))
        assert set(trace.rewards.tolist()) <= {0.0, 1.0}

    def test_deterministic_rewards_equal_means(self):
        """Test deterministic noise returns the mean reward."""
        mdp = gen_random_tabular(3, 2, 4, seed=4, reward_noise=RewardNoise.DETERMINISTIC)
        trace = sample_episode(mdp, np.zeros((4, 3), dtype=int), np.random.default_rng(1))
        for step in trace:
            assert step.reward == mdp.rewards[step.state, step.action]

    def test_same_seed_same_trace(self):
        """Test sampling is reproducible."""
        mdp = gen_random_tabular(4, 2, 5, seed=0)
        policy = np.ones((5, 4), dtype=int)
        first = sample_episode(mdp, policy, np.random.default_rng(3))
        second = sample_episode(mdp, policy, np.random.default_rng(3))
        assert np.array_equal(first.next_states, second.next_states)
        assert np.array_equal(first.rewards, second.rewards)

    def test_fixed_start_consumes_no_randomness(self):
        """Test a fixed start state leaves the generator untouched."""
        mdp = gen_random_tabular(3, 2, 2, seed=0)
        rng = np.random.default_rng(5)
        assert sample_initial_state(mdp, rng) == 0
        assert rng.random() == np.random.default_rng(5).random()

    def test_initial_distribution_sampling(self):
        """Test start states follow the initial distribution."""
        base = gen_random_tabular(3, 2, 2, seed=0)
        dist = np.array([0.1, 0.0, 0.9])
        mdp = TabularMdp(base.transitions, base.rewards, 2, initial_distribution=dist)
        rng = np.random.default_rng(0)
        starts = np.array([sample_initial_state(mdp, rng) for _ in range(5000)])
        assert not np.any(starts == 1)
        assert np.mean(starts == 2) == pytest.approx(0.9, abs=0.02)

    def test_with_start_state(self):
        """Test fixing the start state drops the distribution."""
        base = gen_random_tabular(3, 2, 2, seed=0)
        mdp = TabularMdp(base.transitions, base.rewards, 2, initial_distribution=np.ones(3) / 3)
        fixed = with_start_state(mdp, 2)
        assert fixed.initial_state == 2
        assert fixed.initial_distribution is None
        assert with_start_state(base, 0) is base
