"""
Unit tests for MdpValidator.
"""

import numpy as np
import pytest

from policy_certificates.types import TabularMdp
from policy_certificates.validation import MdpValidator, validate_mdp


def two_state_mdp(**overrides):
    values = dict(
        transitions=np.array([[[0.5, 0.5], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]]),
        rewards=np.array([[0.0, 1.0], [0.5, 0.2]]),
        horizon=3,
    )
    values.update(overrides)
    return TabularMdp(**values)


class TestMdpValidator:
    """Test suite for MdpValidator."""

    def test_valid_mdp(self):
        """Test a valid MDP has no violations."""
        assert validate_mdp(two_state_mdp()) == []

    def test_unnormalized_row(self):
        """Test transition_normalized names the offending pair."""
        transitions = np.array([[[0.5, 0.4], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]])
        violations = validate_mdp(two_state_mdp(transitions=transitions))

        assert len(violations) == 1
        assert violations[0].rule_name == "transition_normalized"
        assert (violations[0].state, violations[0].action) == (0, 0)
        assert violations[0].metadata["row_sum"] == pytest.approx(0.9)

    def test_negative_transition(self):
        """Test transition_nonnegative detects negative entries."""
        transitions = np.array([[[1.2, -0.2], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]])
        rules = {v.rule_name for v in validate_mdp(two_state_mdp(transitions=transitions))}
        assert "transition_nonnegative" in rules

    def test_nan_row_is_reported(self):
        """Test non-finite rows are not silently accepted."""
        transitions = np.array([[[np.nan, 0.5], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]])
        rules = {v.rule_name for v in validate_mdp(two_state_mdp(transitions=transitions))}
        assert "transition_normalized" in rules

    def test_reward_out_of_range(self):
        """Test reward_range detects rewards above 1."""
        violations = validate_mdp(two_state_mdp(rewards=np.array([[0.0, 1.5], [0.5, 0.2]])))
        assert [v.rule_name for v in violations] == ["reward_range"]
        assert (violations[0].state, violations[0].action) == (0, 1)

    def test_tolerance(self):
        """Test deviations within the tolerance are accepted."""
        transitions = np.array([[[0.5, 0.5 + 1e-12], [1.0, 0.0]], [[0.0, 1.0], [0.3, 0.7]]])
        assert validate_mdp(two_state_mdp(transitions=transitions)) == []

    def test_shape_mismatch_short_circuits(self):
        """Test wrong reward shape is reported without per-entry checks."""
        violations = validate_mdp(two_state_mdp(rewards=np.zeros((3, 2))))
        assert violations
        assert all(v.rule_name == "shape" for v in violations)

    def test_initial_state_out_of_range(self):
        """Test initial_state_range."""
        violations = validate_mdp(two_state_mdp(initial_state=2))
        assert [v.rule_name for v in violations] == ["initial_state_range"]

    def test_initial_distribution(self):
        """Test initial distributions must be probability vectors."""
        assert validate_mdp(two_state_mdp(initial_distribution=np.array([0.25, 0.75]))) == []
        violations = validate_mdp(two_state_mdp(initial_distribution=np.array([0.5, 0.6])))
        assert [v.rule_name for v in violations] == ["initial_distribution"]

    def test_rejects_non_mdp(self):
        """Test the validator only accepts TabularMdp instances."""
        with pytest.raises(TypeError):
            MdpValidator({"transitions": []})

    def test_violation_to_dict(self):
        """Test violation serialization."""
        violations = validate_mdp(two_state_mdp(rewards=np.array([[0.0, 1.5], [0.5, 0.2]])))
        data = violations[0].to_dict()
        assert data["rule"] == "reward_range"
        assert data["state"] == 0
        assert data["action"] == 1
