"""
Confidence scalars and bonus widths for the tabular algorithm.

The vectorized ``*_widths`` functions operate on whole (S, A) tables and are
what the planner uses; ``bonus_simple``, ``bonus_refined_upper`` and
``bonus_refined_lower`` evaluate a single (s, a, step) entry from statistics.

Step indices are 0-based: at step ``t`` the successor values belong to step
``t + 1`` whose largest value is ``H - t - 1``.
"""

import math
from typing import Union

import numpy as np

from .stats import VisitStats
from .types import ConfidenceVariant

ArrayLike = Union[float, int, np.ndarray]

SQRT12 = math.sqrt(12.0)
SIMPLE_SECOND_ORDER = 45.0


def delta_prime(
    n_states: int,
    n_actions: int,
    horizon: int,
    delta: float,
    variant: ConfidenceVariant = ConfidenceVariant.APPENDIX,
) -> float:
    """
    Per-event failure probability after the union bound.

    The appendix variant returns ``delta / (5 S A H + 4 S A + 4 S^2 A)``. The
    main-text variant returns the value ``d`` with ``ln(5.2 / d) = ln(26 S A (H + 1 + S) / delta)``,
    so both variants enter ``phi`` through the same ``ln(5.2 / delta')`` term.
    """
    S, A, H = n_states, n_actions, horizon
    if variant is ConfidenceVariant.APPENDIX:
        return delta / (5 * S * A * H + 4 * S * A + 4 * S * S * A)
    return 5.2 * delta / (26.0 * S * A * (H + 1 + S))


def llnp(x: ArrayLike) -> ArrayLike:
    """``ln(ln(max(x, e)))``, zero for ``x <= e``."""
    return np.log(np.log(np.maximum(x, math.e)))


def phi(
    n: ArrayLike,
    n_states: int,
    n_actions: int,
    horizon: int,
    delta: float,
    variant: ConfidenceVariant = ConfidenceVariant.APPENDIX,
) -> ArrayLike:
    """
    Confidence scalar for ``n`` observations, in [0, 1].

    ``phi(0) = 1``; otherwise
    ``min(1, sqrt(0.52 / n * (1.4 llnp(m) + ln(5.2 / delta'))))`` with ``m = 2n``
    (appendix) or ``m = n`` (main text). Accepts scalars or arrays of counts.
    """
    counts = np.asarray(n, dtype=float)
    log_term = math.log(5.2 / delta_prime(n_states, n_actions, horizon, delta, variant))
    iterated = llnp(2.0 * counts if variant is ConfidenceVariant.APPENDIX else counts)
    with np.errstate(divide="ignore"):
        raw = np.sqrt(0.52 / np.maximum(counts, 1.0) * (1.4 * iterated + log_term))
    value = np.where(counts > 0, np.minimum(1.0, raw), 1.0)
    if value.ndim == 0:
        return float(value)
    return value


def sigma_hat(p_row: np.ndarray, values: np.ndarray) -> ArrayLike:
    """
    Standard deviation of ``values`` under the distribution(s) ``p_row``.

    ``p_row`` may be a single row or a stack of rows (last axis = states).
    """
    p = np.asarray(p_row, dtype=float)
    v = np.asarray(values, dtype=float)
    mean = p @ v
    variance = np.sum(p * (v - np.expand_dims(mean, -1)) ** 2, axis=-1)
    result = np.sqrt(np.maximum(variance, 0.0))
    if np.ndim(result) == 0:
        return float(result)
    return result


class _WidthTerms:
    """Quantities shared by all width formulas for one planning step."""

    def __init__(self, p_hat: np.ndarray, v_upper_next: np.ndarray, v_lower_next: np.ndarray):
        gap = v_upper_next - v_lower_next
        self.sigma = np.asarray(sigma_hat(p_hat, v_upper_next))
        self.coupling = p_hat @ gap
        self.coupling_sq = p_hat @ (gap * gap)
        self.l1_gap = float(np.abs(gap).sum())
        self.sqrt_weighted_gap = np.sqrt(np.maximum(p_hat, 0.0)) @ gap
        self.variance_sd = np.sqrt(self.sigma ** 2 + self.coupling_sq)


def simple_widths(
    p_hat: np.ndarray,
    v_upper_next: np.ndarray,
    v_lower_next: np.ndarray,
    phi_values: np.ndarray,
    n_states: int,
    horizon: int,
) -> np.ndarray:
    """
    ``(1 + sqrt(12) sigma(V_up)) phi + 45 S H^2 phi^2 + P(V_up - V_low) / H``.

    Used for both the upper and the lower bound.
    """
    terms = _WidthTerms(p_hat, v_upper_next, v_lower_next)
    return (
        (1.0 + SQRT12 * terms.sigma) * phi_values
        + SIMPLE_SECOND_ORDER * n_states * horizon ** 2 * phi_values ** 2
        + terms.coupling / horizon
    )


def refined_upper_candidates(
    p_hat: np.ndarray,
    v_upper_next: np.ndarray,
    v_lower_next: np.ndarray,
    phi_values: np.ndarray,
    max_value_next: float,
    horizon: int,
) -> np.ndarray:
    """The three expressions whose minimum is the refined upper width; last axis = branch."""
    terms = _WidthTerms(p_hat, v_upper_next, v_lower_next)
    f, f2 = phi_values, phi_values ** 2
    hoeffding = (max_value_next + 1.0) * f
    bernstein = (1.0 + SQRT12 * terms.variance_sd) * f + 8.13 * max_value_next * f2
    coupled = (
        (1.0 + SQRT12 * terms.sigma) * f
        + terms.coupling / horizon
        + 20.13 * horizon * terms.l1_gap * f2
    )
    return np.stack(np.broadcast_arrays(hoeffding, bernstein, coupled), axis=-1)


def refined_lower_candidates(
    p_hat: np.ndarray,
    v_upper_next: np.ndarray,
    v_lower_next: np.ndarray,
    phi_values: np.ndarray,
    max_value_next: float,
    n_states: int,
    horizon: int,
) -> np.ndarray:
    """The four expressions whose minimum is the refined lower width; last axis = branch."""
    terms = _WidthTerms(p_hat, v_upper_next, v_lower_next)
    f, f2 = phi_values, phi_values ** 2
    l1_penalty = 4.66 * terms.l1_gap
    l1_bound = (2.0 * math.sqrt(n_states) * max_value_next + 1.0) * f
    hoeffding = (max_value_next + 1.0 + 2.0 * terms.sqrt_weighted_gap) * f + l1_penalty * f2
    bernstein = (
        (SQRT12 * terms.variance_sd + 1.0 + 2.0 * terms.sqrt_weighted_gap) * f
        + (8.13 * max_value_next + l1_penalty) * f2
    )
    coupled = (
        (1.0 + SQRT12 * terms.sigma) * f
        + terms.coupling / horizon
        + (8.13 * max_value_next + (32.0 * horizon + 4.66) * terms.l1_gap) * f2
    )
    return np.stack(np.broadcast_arrays(l1_bound, hoeffding, bernstein, coupled), axis=-1)


def refined_upper_widths(p_hat, v_upper_next, v_lower_next, phi_values, max_value_next, horizon):
    return refined_upper_candidates(
        p_hat, v_upper_next, v_lower_next, phi_values, max_value_next, horizon
    ).min(axis=-1)


def refined_lower_widths(
    p_hat, v_upper_next, v_lower_next, phi_values, max_value_next, n_states, horizon
):
    return refined_lower_candidates(
        p_hat, v_upper_next, v_lower_next, phi_values, max_value_next, n_states, horizon
    ).min(axis=-1)


def bonus_simple(
    stats: VisitStats,
    s: int,
    a: int,
    step: int,
    v_upper_next: np.ndarray,
    v_lower_next: np.ndarray,
    phi_value: float,
) -> float:
    """Simple width for one (s, a) at 0-based ``step``."""
    del step  # the simple width does not depend on the step
    return float(simple_widths(
        stats.transition_mean[s, a], v_upper_next, v_lower_next, phi_value,
        stats.n_states, stats.horizon,
    ))


def bonus_refined_upper(
    stats: VisitStats,
    s: int,
    a: int,
    step: int,
    v_upper_next: np.ndarray,
    v_lower_next: np.ndarray,
    phi_value: float,
) -> float:
    """Refined upper width for one (s, a) at 0-based ``step``."""
    return float(refined_upper_widths(
        stats.transition_mean[s, a], v_upper_next, v_lower_next, phi_value,
        float(stats.horizon - step - 1), stats.horizon,
    ))


def bonus_refined_lower(
    stats: VisitStats,
    s: int,
    a: int,
    step: int,
    v_upper_next: np.ndarray,
    v_lower_next: np.ndarray,
    phi_value: float,
) -> float:
    """Refined lower width for one (s, a) at 0-based ``step``."""
    return float(refined_lower_widths(
        stats.transition_mean[s, a], v_upper_next, v_lower_next, phi_value,
        float(stats.horizon - step - 1), stats.n_states, stats.horizon,
    ))
