"""
Extreme expectations over a box-constrained probability simplex.

The feasible set for an estimate ``p_hat`` and radius ``psi`` is
``{p : max(p_hat - psi, 0) <= p <= min(p_hat + psi, 1), sum(p) = 1}``. Its
maximum of ``p . v`` is a fractional knapsack: start every coordinate at its
lower bound and pour the remaining mass ``1 - sum(lower)`` into coordinates in
decreasing order of ``v``, each up to its cap. Ties are broken by coordinate
index.
"""

import logging
from typing import Tuple

import numpy as np

from .exceptions import InfeasibleSetError

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-9


def box_bounds(p_hat: np.ndarray, psi) -> Tuple[np.ndarray, np.ndarray]:
    """Per-coordinate lower and upper bounds; ``psi`` broadcasts against all but the last axis."""
    radius = np.expand_dims(np.asarray(psi, dtype=float), -1)
    return np.maximum(p_hat - radius, 0.0), np.minimum(p_hat + radius, 1.0)


def prob_est_norm_batch(
    p_hat: np.ndarray, psi, v: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maximize ``p . v`` for a stack of rows sharing one value vector.

    Args:
        p_hat: (..., S) estimated rows in [0, 1]
        psi: Radii broadcastable to ``p_hat.shape[:-1]``
        v: (S,) value vector

    Returns:
        ``(values, feasible)``; entries of ``values`` where ``feasible`` is
        False are meaningless and must be replaced by the caller
    """
    p_hat = np.asarray(p_hat, dtype=float)
    v = np.asarray(v, dtype=float)
    lower, upper = box_bounds(p_hat, psi)
    lower_mass = lower.sum(axis=-1)
    upper_mass = upper.sum(axis=-1)
    feasible = (lower_mass <= 1.0 + MASS_TOLERANCE) & (upper_mass >= 1.0 - MASS_TOLERANCE)

    order = np.argsort(-v, kind="stable")
    room = (upper - lower)[..., order]
    remaining = np.maximum(1.0 - lower_mass, 0.0)[..., None]
    filled_before = np.cumsum(room, axis=-1) - room
    poured = np.clip(remaining - filled_before, 0.0, room)
    values = lower @ v + poured @ v[order]
    return values, feasible


def prob_est_norm(p_hat: np.ndarray, psi: float, v: np.ndarray) -> float:
    """
    Return ``max p . v`` over the box-constrained simplex around ``p_hat``.

    The minimum is ``-prob_est_norm(p_hat, psi, -v)``.

    Args:
        p_hat: (S,) estimated probabilities in [0, 1], not necessarily normalized
        psi: Box radius >= 0
        v: (S,) values

    Returns:
        The exact maximum, which lies in ``[min(v), max(v)]``

    Raises:
        InfeasibleSetError: If no distribution fits inside the box
    """
    p_hat = np.asarray(p_hat, dtype=float)
    values, feasible = prob_est_norm_batch(p_hat, psi, v)
    if not bool(feasible):
        lower, upper = box_bounds(p_hat, psi)
        lower_mass, upper_mass = float(lower.sum()), float(upper.sum())
        raise InfeasibleSetError(
            f"box around estimate holds no distribution "
            f"(lower mass {lower_mass:.6g}, upper mass {upper_mass:.6g})",
            lower_mass=lower_mass,
            upper_mass=upper_mass,
        )
    return float(values)
