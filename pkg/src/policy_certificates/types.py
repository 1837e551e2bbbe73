"""
Core data types for episodic MDPs, value bounds and certificates.

Time steps are 0-based throughout the package: step ``t`` in ``0..H-1``
corresponds to ``h = t + 1`` in the usual 1-based notation, and tables of
state values have ``H + 1`` rows with the last row identically zero. The
largest achievable value from step ``t`` on is ``H - t``.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterator, Optional, Protocol, Tuple

import numpy as np


class RewardNoise(Enum):
    """Sampling family for immediate rewards with a given mean in [0, 1]."""
    BERNOULLI = "bernoulli"
    DETERMINISTIC = "deterministic"


class ConfidenceVariant(Enum):
    """Which set of constants enters the tabular confidence scalar."""
    MAIN_TEXT = "main_text"  # folded ln(26 S A (H + 1 + S) / delta) form
    APPENDIX = "appendix"  # delta' and llnp(2n) form


class BonusKind(Enum):
    """Tabular confidence width used during optimistic planning."""
    SIMPLE = "simple"  # one width for upper and lower bounds
    REFINED = "refined"  # separate minimum-of-expressions widths


class PlannerKind(Enum):
    """Planner used with linear side information."""
    PLAIN = "plain"
    MASS_CONSTRAINED = "mass_constrained"


def _frozen_array(values: Any, dtype: Any = float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """
    A finite episodic MDP with time-independent dynamics.

    Attributes:
        transitions: (S, A, S) array, ``transitions[s, a]`` is the successor distribution
        rewards: (S, A) array of mean rewards in [0, 1]
        horizon: Episode length H
        reward_noise: Family used when sampling rewards around their means
        initial_state: Start state when no initial distribution is given
        initial_distribution: Optional length-S start distribution
        metadata: Generator name, seed and other provenance
    """
    transitions: np.ndarray
    rewards: np.ndarray
    horizon: int
    reward_noise: RewardNoise = RewardNoise.BERNOULLI
    initial_state: int = 0
    initial_distribution: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "transitions", _frozen_array(self.transitions))
        object.__setattr__(self, "rewards", _frozen_array(self.rewards))
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "initial_state", int(self.initial_state))
        if self.initial_distribution is not None:
            object.__setattr__(
                self, "initial_distribution", _frozen_array(self.initial_distribution)
            )

    @property
    def n_states(self) -> int:
        return int(self.transitions.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.transitions.shape[1])

    @cached_property
    def cumulative_transitions(self) -> np.ndarray:
        """Row-wise CDFs used for inverse-transform sampling of successors."""
        cdf = np.cumsum(self.transitions, axis=-1)
        cdf[..., -1] = 1.0
        cdf.flags.writeable = False
        return cdf

    def max_value(self, step: int) -> float:
        """Largest possible value from 0-based ``step`` to the end of the episode."""
        return float(self.horizon - step)


class ContextSampler(Protocol):
    """Draws the context vector observed at the start of an episode."""

    dimension: int

    def sample(self, episode: int, rng: np.random.Generator) -> np.ndarray:
        ...

    def describe(self) -> Dict[str, Any]:
        ...


@dataclass(frozen=True, eq=False)
class ContextualLinearMdp:
    """
    A finite episodic MDP whose rewards and dynamics are linear in observed contexts.

    Attributes:
        theta_r: (S, A, dR) reward parameters; ``R(s, a) = x_r . theta_r[s, a]``
        theta_p: (S, A, S, dP) transition parameters;
            ``P(s' | s, a) = x_p . theta_p[s, a, s']``
        horizon: Episode length H
        context_r: Sampler for reward contexts (dimension dR)
        context_p: Sampler for transition contexts (dimension dP)
        xi_theta_r: Norm bound on every ``theta_r[s, a]``
        xi_theta_p: Norm bound on every ``theta_p[s, a, s']``
        xi_x_r: Norm bound on reward contexts
        xi_x_p: Norm bound on transition contexts
    """
    theta_r: np.ndarray
    theta_p: np.ndarray
    horizon: int
    context_r: ContextSampler
    context_p: ContextSampler
    xi_theta_r: float = 1.0
    xi_theta_p: float = 1.0
    xi_x_r: float = 1.0
    xi_x_p: float = 1.0
    reward_noise: RewardNoise = RewardNoise.BERNOULLI
    initial_state: int = 0
    initial_distribution: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_r", _frozen_array(self.theta_r))
        object.__setattr__(self, "theta_p", _frozen_array(self.theta_p))
        object.__setattr__(self, "horizon", int(self.horizon))
        if self.initial_distribution is not None:
            object.__setattr__(
                self, "initial_distribution", _frozen_array(self.initial_distribution)
            )

    @property
    def n_states(self) -> int:
        return int(self.theta_r.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.theta_r.shape[1])

    @property
    def dim_r(self) -> int:
        return int(self.theta_r.shape[2])

    @property
    def dim_p(self) -> int:
        return int(self.theta_p.shape[3])


class Step(tuple):
    """One transition ``(state, action, reward, next_state)``."""

    __slots__ = ()

    def __new__(cls, state: int, action: int, reward: float, next_state: int) -> "Step":
        return super().__new__(cls, (state, action, reward, next_state))

    @property
    def state(self) -> int:
        return self[0]

    @property
    def action(self) -> int:
        return self[1]

    @property
    def reward(self) -> float:
        return self[2]

    @property
    def next_state(self) -> int:
        return self[3]


@dataclass(frozen=True, eq=False)
class EpisodeTrace:
    """
    The observed sequence of one episode.

    Attributes:
        episode: 1-based episode index k
        states: (H,) visited states s_{k,1..H}
        actions: (H,) actions taken
        rewards: (H,) sampled rewards in [0, 1]
        next_states: (H,) successor states s_{k,2..H+1}
        context_r: Reward context of the episode (contextual runs only)
        context_p: Transition context of the episode (contextual runs only)
    """
    episode: int
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    context_r: Optional[np.ndarray] = None
    context_p: Optional[np.ndarray] = None

    @property
    def horizon(self) -> int:
        return int(self.states.shape[0])

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())

    @property
    def steps(self) -> Tuple[Step, ...]:
        return tuple(
            Step(int(s), int(a), float(r), int(s_next))
            for s, a, r, s_next in zip(self.states, self.actions, self.rewards, self.next_states)
        )

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)


@dataclass(frozen=True, eq=False)
class PlanningResult:
    """
    Exact solution of a TabularMdp.

    Attributes:
        v_star: (H + 1, S) optimal values, last row zero
        q_star: (H, S, A) optimal action values
        policy: (H, S) greedy optimal actions, lowest index on ties
    """
    v_star: np.ndarray
    q_star: np.ndarray
    policy: np.ndarray

    def optimal_return(self, state: int) -> float:
        return float(self.v_star[0, state])


@dataclass(frozen=True)
class Certificate:
    """
    Policy certificate emitted before an episode.

    ``[lower, upper]`` is a confidence interval on the return of the played policy
    and ``epsilon = upper - lower`` bounds its optimality gap.
    """
    lower: float
    upper: float

    @property
    def epsilon(self) -> float:
        return self.upper - self.lower

    @property
    def interval(self) -> Tuple[float, float]:
        return (self.lower, self.upper)

    def contains(self, value: float, tolerance: float = 0.0) -> bool:
        return self.lower - tolerance <= value <= self.upper + tolerance


@dataclass(frozen=True, eq=False)
class ValueBounds:
    """
    Optimistic and pessimistic value tables with the greedy policy.

    Attributes:
        q_upper: (H, S, A) upper bounds on optimal action values
        q_lower: (H, S, A) lower bounds on the action values of ``policy``
        v_upper: (H + 1, S) upper state values under ``policy``
        v_lower: (H + 1, S) lower state values under ``policy``
        policy: (H, S) argmax of ``q_upper``, lowest index on ties
    """
    q_upper: np.ndarray
    q_lower: np.ndarray
    v_upper: np.ndarray
    v_lower: np.ndarray
    policy: np.ndarray

    def certificate(self, state: int) -> Certificate:
        """Return interval ``[V_lower(state), V_upper(state)]`` at the first step."""
        return Certificate(lower=float(self.v_lower[0, state]), upper=float(self.v_upper[0, state]))


@dataclass(frozen=True, eq=False)
class EpisodeOutcome:
    """
    Everything a learning run emits for one episode.

    ``environment`` is the MDP the episode actually faced (realized contexts,
    sampled start state). It is handed out for auditing only; the algorithm
    never reads it.
    """
    episode: int
    certificate: Certificate
    policy: np.ndarray
    trace: EpisodeTrace
    environment: TabularMdp
    context_tag: Optional[str] = None
