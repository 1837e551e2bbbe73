"""
Regularized least-squares model for MDPs with linear side information.

For every (s, a) the statistics hold the Gram matrices ``N = lambda I + sum x x^T``
of reward and transition contexts together with the context-weighted targets.
Each matrix is Cholesky-factorized once after it changes; the factor gives the
parameter estimate, the inverse used for ``||x||_{N^-1}`` and the log-determinant.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import linalg

from .exceptions import ConfigurationError, DimensionError, NumericalError
from .types import EpisodeTrace

logger = logging.getLogger(__name__)


def union_bound_count(n_states: int, n_actions: int, horizon: int) -> int:
    """Number of confidence events covered by the ellipsoid widths, ``S (S A + A + H)``."""
    return n_states * (n_states * n_actions + n_actions + horizon)


@dataclass(eq=False)
class LsqStats:
    """
    Least-squares sufficient statistics per (state, action).

    Attributes:
        gram_r: (S, A, dR, dR) reward Gram matrices N^(r)
        gram_p: (S, A, dP, dP) transition Gram matrices N^(p)
        target_r: (S, A, dR) sums of reward-weighted reward contexts
        target_p: (S, A, S, dP) sums of transition contexts per observed successor
        lam: Regularizer lambda > 0
    """
    gram_r: np.ndarray
    gram_p: np.ndarray
    target_r: np.ndarray
    target_p: np.ndarray
    lam: float
    _dirty: np.ndarray = field(init=False, repr=False)
    _inv_r: np.ndarray = field(init=False, repr=False)
    _inv_p: np.ndarray = field(init=False, repr=False)
    _logdet_r: np.ndarray = field(init=False, repr=False)
    _logdet_p: np.ndarray = field(init=False, repr=False)
    _theta_r: np.ndarray = field(init=False, repr=False)
    _theta_p: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        S, A, d_r = self.target_r.shape
        d_p = self.target_p.shape[-1]
        self._dirty = np.ones((S, A), dtype=bool)
        self._inv_r = np.zeros((S, A, d_r, d_r))
        self._inv_p = np.zeros((S, A, d_p, d_p))
        self._logdet_r = np.zeros((S, A))
        self._logdet_p = np.zeros((S, A))
        self._theta_r = np.zeros((S, A, d_r))
        self._theta_p = np.zeros((S, A, S, d_p))

    @classmethod
    def empty(cls, n_states: int, n_actions: int, dim_r: int, dim_p: int, lam: float) -> "LsqStats":
        if lam <= 0:
            raise ConfigurationError(f"regularizer must be positive, got {lam}", key="lam")
        eye_r = np.broadcast_to(lam * np.eye(dim_r), (n_states, n_actions, dim_r, dim_r))
        eye_p = np.broadcast_to(lam * np.eye(dim_p), (n_states, n_actions, dim_p, dim_p))
        return cls(
            gram_r=eye_r.copy(),
            gram_p=eye_p.copy(),
            target_r=np.zeros((n_states, n_actions, dim_r)),
            target_p=np.zeros((n_states, n_actions, n_states, dim_p)),
            lam=float(lam),
        )

    @property
    def n_states(self) -> int:
        return int(self.target_r.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.target_r.shape[1])

    @property
    def dim_r(self) -> int:
        return int(self.target_r.shape[2])

    @property
    def dim_p(self) -> int:
        return int(self.target_p.shape[3])

    def mark_dirty(self, s: int, a: int) -> None:
        self._dirty[s, a] = True

    def refresh(self) -> None:
        """Refactorize every Gram matrix that changed since the last refresh."""
        eye_r, eye_p = np.eye(self.dim_r), np.eye(self.dim_p)
        for s, a in np.argwhere(self._dirty):
            factor_r = _factorize(self.gram_r[s, a], s, a)
            factor_p = _factorize(self.gram_p[s, a], s, a)
            self._inv_r[s, a] = linalg.cho_solve(factor_r, eye_r)
            self._inv_p[s, a] = linalg.cho_solve(factor_p, eye_p)
            self._logdet_r[s, a] = _logdet(factor_r)
            self._logdet_p[s, a] = _logdet(factor_p)
            self._theta_r[s, a] = linalg.cho_solve(factor_r, self.target_r[s, a])
            self._theta_p[s, a] = linalg.cho_solve(factor_p, self.target_p[s, a].T).T
        self._dirty[:] = False

    def estimates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(theta_r_hat, theta_p_hat)`` with shapes (S, A, dR) and (S, A, S, dP)."""
        self.refresh()
        return self._theta_r, self._theta_p

    def inverse_grams(self) -> Tuple[np.ndarray, np.ndarray]:
        self.refresh()
        return self._inv_r, self._inv_p

    def log_determinants(self) -> Tuple[np.ndarray, np.ndarray]:
        self.refresh()
        return self._logdet_r, self._logdet_p


def _factorize(matrix: np.ndarray, s: int, a: int):
    try:
        return linalg.cho_factor(matrix, lower=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(
            f"Gram matrix of ({s}, {a}) is not positive definite: {e}",
            state=int(s),
            action=int(a),
            original_error=e,
        ) from e


def _logdet(factor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(factor[0]))))


def update_lsq(stats: LsqStats, trace: EpisodeTrace) -> LsqStats:
    """
    Fold one episode into the least-squares statistics, in place.

    Every (s, a, h) visit adds ``x_r x_r^T`` and ``x_p x_p^T`` to the Gram
    matrices, ``x_r r`` to the reward target and ``x_p`` to the target of the
    observed successor.

    Raises:
        DimensionError: If the trace carries no contexts or contexts of the wrong length
    """
    if trace.context_r is None or trace.context_p is None:
        raise DimensionError(f"trace of episode {trace.episode} carries no contexts")
    x_r = np.asarray(trace.context_r, dtype=float)
    x_p = np.asarray(trace.context_p, dtype=float)
    if x_r.shape != (stats.dim_r,):
        raise DimensionError(
            f"reward context has shape {x_r.shape}, expected ({stats.dim_r},)",
            expected=stats.dim_r,
            actual=x_r.size,
        )
    if x_p.shape != (stats.dim_p,):
        raise DimensionError(
            f"transition context has shape {x_p.shape}, expected ({stats.dim_p},)",
            expected=stats.dim_p,
            actual=x_p.size,
        )
    outer_r = np.outer(x_r, x_r)
    outer_p = np.outer(x_p, x_p)
    for s, a, r, s_next in zip(trace.states, trace.actions, trace.rewards, trace.next_states):
        stats.gram_r[s, a] += outer_r
        stats.gram_p[s, a] += outer_p
        stats.target_r[s, a] += x_r * r
        stats.target_p[s, a, s_next] += x_p
        stats.mark_dirty(s, a)
    return stats


def model_point_estimates(
    stats: LsqStats,
    s: int,
    a: int,
    context_r: np.ndarray,
    context_p: np.ndarray,
) -> Tuple[float, np.ndarray]:
    """
    Clipped predictions of the reward and successor probabilities of (s, a).

    Rows are clipped to [0, 1] per coordinate and not renormalized.

    Returns:
        ``(r_hat, p_hat)`` with ``p_hat`` of length S
    """
    theta_r, theta_p = stats.estimates()
    r_hat = float(np.clip(theta_r[s, a] @ context_r, 0.0, 1.0))
    p_hat = np.clip(theta_p[s, a] @ context_p, 0.0, 1.0)
    return r_hat, p_hat


def confidence_radius(
    logdet: np.ndarray, dim: int, xi: float, delta: float, lam: float, count_sah: int
) -> np.ndarray:
    """``sqrt(lam) xi + sqrt(ln(count / delta) / 2 + (logdet N - d ln lam) / 4)``."""
    log_ratio = np.maximum(logdet - dim * math.log(lam), 0.0)
    return math.sqrt(lam) * xi + np.sqrt(0.5 * math.log(count_sah / delta) + 0.25 * log_ratio)


def ellipsoid_widths(
    inverse: np.ndarray,
    logdet: np.ndarray,
    x: np.ndarray,
    xi: float,
    delta: float,
    lam: float,
    count_sah: int,
) -> np.ndarray:
    """Batched ellipsoid widths from precomputed inverses and log-determinants."""
    norm_sq = np.einsum("...ij,i,j->...", inverse, x, x)
    radius = confidence_radius(logdet, x.shape[0], xi, delta, lam, count_sah)
    return radius * np.sqrt(np.maximum(norm_sq, 0.0))


def ellipsoid_width(
    gram: np.ndarray,
    x: np.ndarray,
    xi: float,
    delta: float,
    lam: float,
    count_sah: int,
) -> float:
    """
    Confidence width of the linear prediction ``x^T theta_hat`` for Gram matrix ``gram``.

    ``[sqrt(lam) xi + sqrt(ln(count/delta)/2 + ln(det N / det(lam I))/4)] ||x||_{N^-1}``,
    with the norm and the determinant taken from one Cholesky factorization.

    Raises:
        NumericalError: If ``gram`` is not positive definite
    """
    x = np.asarray(x, dtype=float)
    factor = _factorize(np.asarray(gram, dtype=float), -1, -1)
    norm_sq = float(x @ linalg.cho_solve(factor, x))
    radius = confidence_radius(np.asarray(_logdet(factor)), x.shape[0], xi, delta, lam, count_sah)
    return float(radius) * math.sqrt(max(norm_sq, 0.0))
