"""
Structural validation of tabular MDPs.

Validation is report-style: every check appends MdpViolation objects and
nothing is raised, so callers decide whether a violation is fatal.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .types import TabularMdp

PROBABILITY_TOLERANCE = 1e-9


@dataclass
class MdpViolation:
    """
    A violated TabularMdp invariant.

    Includes the offending (state, action) pair when the rule is per-entry.
    """
    rule_name: str
    message: str
    state: Optional[int] = None
    action: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert violation to dictionary for JSON serialization."""
        result: Dict[str, Any] = {"rule": self.rule_name, "message": self.message}
        if self.state is not None:
            result["state"] = self.state
        if self.action is not None:
            result["action"] = self.action
        if self.metadata:
            result["metadata"] = self.metadata
        return result


class MdpValidator:
    """
    Checks a TabularMdp against its invariants.

    Rules: shapes, nonnegative and normalized transition rows, rewards in [0, 1],
    a valid start state and (if given) a valid start distribution.
    """

    def __init__(self, mdp: TabularMdp, tolerance: float = PROBABILITY_TOLERANCE) -> None:
        """
        Initialize validator with an MDP.

        Args:
            mdp: TabularMdp to validate
            tolerance: Absolute slack for normalization and range checks

        Raises:
            TypeError: If mdp is not a TabularMdp instance
        """
        if not isinstance(mdp, TabularMdp):
            raise TypeError(f"mdp must be a TabularMdp instance, got {type(mdp).__name__}")
        self.mdp = mdp
        self.tolerance = tolerance
        self.violations: List[MdpViolation] = []

    def validate_all(self) -> List[MdpViolation]:
        """
        Run every rule.

        Shape problems short-circuit the per-entry rules, which would otherwise
        index out of range.

        Returns:
            List of MdpViolation objects (empty when the MDP is valid)
        """
        self.violations = []
        self.check_shapes()
        if self.violations:
            return self.violations
        self.check_transition_rows()
        self.check_reward_range()
        self.check_initial_state()
        return self.violations

    def check_shapes(self) -> None:
        mdp = self.mdp
        transitions, rewards = mdp.transitions, mdp.rewards
        if transitions.ndim != 3 or transitions.shape[0] != transitions.shape[2]:
            self.violations.append(MdpViolation(
                rule_name="shape",
                message=f"transitions must have shape (S, A, S), got {transitions.shape}",
            ))
            return
        if rewards.shape != transitions.shape[:2]:
            self.violations.append(MdpViolation(
                rule_name="shape",
                message=f"rewards must have shape {transitions.shape[:2]}, got {rewards.shape}",
            ))
        if transitions.shape[0] < 1 or transitions.shape[1] < 1:
            self.violations.append(MdpViolation(
                rule_name="shape",
                message="state and action counts must be positive",
            ))
        if mdp.horizon < 1:
            self.violations.append(MdpViolation(
                rule_name="shape",
                message=f"horizon must be positive, got {mdp.horizon}",
            ))

    def check_transition_rows(self) -> None:
        transitions = self.mdp.transitions
        negative = np.argwhere(transitions < -self.tolerance)
        for s, a, s_next in negative:
            self.violations.append(MdpViolation(
                rule_name="transition_nonnegative",
                message=f"P({s_next} | {s}, {a}) = {transitions[s, a, s_next]} is negative",
                state=int(s),
                action=int(a),
            ))
        row_sums = transitions.sum(axis=-1)
        bad_rows = ~np.isfinite(row_sums) | (np.abs(row_sums - 1.0) > self.tolerance)
        for s, a in np.argwhere(bad_rows):
            self.violations.append(MdpViolation(
                rule_name="transition_normalized",
                message=f"P(. | {s}, {a}) sums to {row_sums[s, a]!r}, expected 1",
                state=int(s),
                action=int(a),
                metadata={"row_sum": float(row_sums[s, a])},
            ))

    def check_reward_range(self) -> None:
        rewards = self.mdp.rewards
        out_of_range = (rewards < -self.tolerance) | (rewards > 1.0 + self.tolerance)
        out_of_range |= ~np.isfinite(rewards)
        for s, a in np.argwhere(out_of_range):
            self.violations.append(MdpViolation(
                rule_name="reward_range",
                message=f"R({s}, {a}) = {rewards[s, a]!r} is outside [0, 1]",
                state=int(s),
                action=int(a),
            ))

    def check_initial_state(self) -> None:
        mdp = self.mdp
        if not 0 <= mdp.initial_state < mdp.n_states:
            self.violations.append(MdpViolation(
                rule_name="initial_state_range",
                message=f"initial state {mdp.initial_state} is outside [0, {mdp.n_states})",
            ))
        dist = mdp.initial_distribution
        if dist is None:
            return
        if dist.shape != (mdp.n_states,):
            self.violations.append(MdpViolation(
                rule_name="initial_distribution",
                message=f"initial distribution must have shape ({mdp.n_states},), got {dist.shape}",
            ))
        elif np.any(dist < -self.tolerance) or abs(dist.sum() - 1.0) > self.tolerance:
            self.violations.append(MdpViolation(
                rule_name="initial_distribution",
                message="initial distribution is not a probability vector",
            ))


def validate_mdp(mdp: TabularMdp, tolerance: float = PROBABILITY_TOLERANCE) -> List[MdpViolation]:
    """
    Return the list of violated TabularMdp invariants (empty when valid).

    Args:
        mdp: MDP to check
        tolerance: Absolute slack for normalization and range checks
    """
    return MdpValidator(mdp, tolerance=tolerance).validate_all()
