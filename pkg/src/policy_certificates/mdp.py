"""
Exact planning, policy evaluation, context realization and episode sampling.

These routines see the true model. The learning algorithms never call
``solve_exact`` or ``policy_return``; the audit harness does.
"""

import logging
from dataclasses import replace
from typing import Optional

import numpy as np

from .exceptions import DimensionError, InvalidMDPError, InvalidPolicyError
from .types import (
    ContextualLinearMdp,
    EpisodeTrace,
    PlanningResult,
    RewardNoise,
    TabularMdp,
)
from .validation import validate_mdp

logger = logging.getLogger(__name__)


def _require_valid(mdp: TabularMdp) -> None:
    violations = validate_mdp(mdp)
    if violations:
        raise InvalidMDPError(
            f"MDP failed validation with {len(violations)} violation(s): "
            f"{violations[0].message}",
            violations=violations,
        )


def check_policy(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """
    Return ``policy`` as an (H, S) integer array, rejecting incomplete tables.

    Raises:
        InvalidPolicyError: If the shape is wrong or an entry is not a valid action
    """
    expected = (mdp.horizon, mdp.n_states)
    table = np.asarray(policy)
    if table.shape != expected:
        raise InvalidPolicyError(
            f"policy must have shape {expected}, got {table.shape}", expected_shape=expected
        )
    if not np.issubdtype(table.dtype, np.integer):
        if not np.all(np.isfinite(table)) or np.any(table != np.round(table)):
            raise InvalidPolicyError(
                "policy entries must be integer action indices", expected_shape=expected
            )
        table = table.astype(np.int64)
    if np.any(table < 0) or np.any(table >= mdp.n_actions):
        raise InvalidPolicyError(
            f"policy entries must lie in [0, {mdp.n_actions})", expected_shape=expected
        )
    return table


def solve_exact(mdp: TabularMdp, validate: bool = True) -> PlanningResult:
    """
    Solve the MDP by finite-horizon backward induction.

    Args:
        mdp: The true model
        validate: Reject invalid models first (skip only for already-validated models)

    Returns:
        PlanningResult with optimal values and the greedy policy (lowest index on ties)

    Raises:
        InvalidMDPError: If the MDP fails validation
    """
    if validate:
        _require_valid(mdp)
    H, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
    v_star = np.zeros((H + 1, S))
    q_star = np.zeros((H, S, A))
    policy = np.zeros((H, S), dtype=np.int64)
    for t in range(H - 1, -1, -1):
        q = mdp.rewards + mdp.transitions @ v_star[t + 1]
        q_star[t] = q
        policy[t] = np.argmax(q, axis=1)
        v_star[t] = q[np.arange(S), policy[t]]
    return PlanningResult(v_star=v_star, q_star=q_star, policy=policy)


def evaluate_policy(mdp: TabularMdp, policy: np.ndarray) -> np.ndarray:
    """Return the (H + 1, S) value table of a deterministic time-dependent policy."""
    table = check_policy(mdp, policy)
    H, S = mdp.horizon, mdp.n_states
    states = np.arange(S)
    values = np.zeros((H + 1, S))
    for t in range(H - 1, -1, -1):
        actions = table[t]
        values[t] = (
            mdp.rewards[states, actions] + mdp.transitions[states, actions] @ values[t + 1]
        )
    return values


def policy_return(mdp: TabularMdp, policy: np.ndarray) -> float:
    """
    Exact expected return of ``policy`` from the start of an episode.

    The start state is ``mdp.initial_state`` or, when the MDP has an initial
    distribution, the return is averaged over it.

    Raises:
        InvalidPolicyError: If the policy is incomplete
    """
    values = evaluate_policy(mdp, policy)
    if mdp.initial_distribution is not None:
        return float(mdp.initial_distribution @ values[0])
    return float(values[0, mdp.initial_state])


def realize_context(
    cmdp: ContextualLinearMdp,
    context_r: np.ndarray,
    context_p: np.ndarray,
) -> TabularMdp:
    """
    Build the tabular MDP an episode with the given contexts interacts with.

    Args:
        cmdp: Contextual model
        context_r: Reward context of length dR
        context_p: Transition context of length dP

    Returns:
        TabularMdp with ``R = theta_r x_r`` and ``P = theta_p x_p``

    Raises:
        DimensionError: If a context has the wrong length
        InvalidMDPError: If the realized model is not a valid MDP (generator bug)
    """
    x_r = np.asarray(context_r, dtype=float)
    x_p = np.asarray(context_p, dtype=float)
    if x_r.shape != (cmdp.dim_r,):
        raise DimensionError(
            f"reward context must have length {cmdp.dim_r}, got shape {x_r.shape}",
            expected=cmdp.dim_r,
            actual=x_r.size,
        )
    if x_p.shape != (cmdp.dim_p,):
        raise DimensionError(
            f"transition context must have length {cmdp.dim_p}, got shape {x_p.shape}",
            expected=cmdp.dim_p,
            actual=x_p.size,
        )
    realized = TabularMdp(
        transitions=cmdp.theta_p @ x_p,
        rewards=cmdp.theta_r @ x_r,
        horizon=cmdp.horizon,
        reward_noise=cmdp.reward_noise,
        initial_state=cmdp.initial_state,
        initial_distribution=cmdp.initial_distribution,
        metadata={"realized_from": cmdp.metadata.get("generator", "contextual")},
    )
    violations = validate_mdp(realized)
    if violations:
        raise InvalidMDPError(
            f"context realization produced an invalid MDP: {violations[0].message}",
            violations=violations,
        )
    # strip floating-point dust below the validation tolerance
    return replace(
        realized,
        transitions=np.clip(realized.transitions, 0.0, 1.0),
        rewards=np.clip(realized.rewards, 0.0, 1.0),
    )


def sample_initial_state(mdp: TabularMdp, rng: np.random.Generator) -> int:
    """Draw the first state of an episode (no randomness consumed for a fixed start)."""
    if mdp.initial_distribution is None:
        return mdp.initial_state
    cdf = np.cumsum(mdp.initial_distribution)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(index, mdp.n_states - 1)


def with_start_state(mdp: TabularMdp, state: int) -> TabularMdp:
    """Return the same MDP with a deterministic start at ``state``."""
    if mdp.initial_distribution is None and mdp.initial_state == state:
        return mdp
    return replace(mdp, initial_state=int(state), initial_distribution=None)


def sample_episode(
    mdp: TabularMdp,
    policy: np.ndarray,
    rng: np.random.Generator,
    reward_rng: Optional[np.random.Generator] = None,
    episode: int = 1,
    start_state: Optional[int] = None,
    context_r: Optional[np.ndarray] = None,
    context_p: Optional[np.ndarray] = None,
) -> EpisodeTrace:
    """
    Execute ``policy`` for one episode.

    Args:
        mdp: The true (or realized) model
        policy: (H, S) action table
        rng: Generator for successor states (and the start state if random)
        reward_rng: Generator for reward noise; defaults to ``rng``
        episode: 1-based episode index recorded in the trace
        start_state: Overrides the MDP's start state
        context_r: Reward context to attach to the trace
        context_p: Transition context to attach to the trace

    Returns:
        EpisodeTrace of length H
    """
    reward_rng = rng if reward_rng is None else reward_rng
    H = mdp.horizon
    cdf = mdp.cumulative_transitions
    last_state = mdp.n_states - 1
    states = np.empty(H, dtype=np.int64)
    actions = np.empty(H, dtype=np.int64)
    rewards = np.empty(H)
    next_states = np.empty(H, dtype=np.int64)

    s = sample_initial_state(mdp, rng) if start_state is None else int(start_state)
    for t in range(H):
        a = int(policy[t, s])
        mean = mdp.rewards[s, a]
        if mdp.reward_noise is RewardNoise.BERNOULLI:
            r = 1.0 if reward_rng.random() < mean else 0.0
        else:
            r = float(mean)
        s_next = min(int(np.searchsorted(cdf[s, a], rng.random(), side="right")), last_state)
        states[t], actions[t], rewards[t], next_states[t] = s, a, r, s_next
        s = s_next

    return EpisodeTrace(
        episode=episode,
        states=states,
        actions=actions,
        rewards=rewards,
        next_states=next_states,
        context_r=context_r,
        context_p=context_p,
    )
