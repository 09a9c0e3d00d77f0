"""Kalman filter and Rauch-Tung-Striebel smoother for the prior-mean trajectory.

State: mu^(t) on the free K-1 coordinates. Transition mu^(t+1) = A mu^(t) + w,
w ~ N(0, Phi); emission Y^(t) = mu^(t) + v, v ~ N(0, Sigma^(t) / N), where
Y^(t) is the average posterior role vector at time t. Every array in a
``KalmanTrace`` lives on the active block.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError
from .gaussian import active_matrix, active_vector, embed_vector, spd_inverse, symmetrize

logger = logging.getLogger(__name__)


@dataclass
class KalmanTrace:
    x_pred: np.ndarray  # x_{t|t-1}, (T, d)
    p_pred: np.ndarray  # P_{t|t-1}, (T, d, d)
    x_filt: np.ndarray  # x_{t|t}
    p_filt: np.ndarray  # P_{t|t}
    gains: np.ndarray  # K_t
    x_smooth: np.ndarray = None  # x_{t|T}
    p_smooth: np.ndarray = None  # P_{t|T}
    l_mats: np.ndarray = None  # L_t, (T-1, d, d)

    @property
    def n_times(self):
        return self.x_filt.shape[0]

    @property
    def smoothed(self):
        return self.x_smooth is not None

    def mu_trajectory(self):
        """Smoothed means as full K-vectors (last coordinate 0)."""
        if not self.smoothed:
            raise InvalidArgumentError("trace has not been smoothed")
        return embed_vector(self.x_smooth)


def pseudo_observations(gamma_tildes):
    """Y^(t) = (1/N) sum_i gamma~_i^(t) for a (T, N, K) stack of posterior means."""
    return np.asarray(gamma_tildes, dtype=float).mean(axis=1)


def _transition(a, dim):
    return np.eye(dim) if a is None else active_matrix(a)


def kalman_filter(y, nu, phi, sigmas, n_nodes, a=None, jitter=1e-8):
    """Forward pass starting from x_{1|0} = nu, P_{1|0} = Phi.

    ``y`` (T, K), ``nu`` (K,), ``phi`` (K, K) and ``sigmas`` (T, K, K) use the
    package's K-dimensional storage; ``a`` is an optional fixed K x K
    transition (identity when omitted).
    """
    y = active_vector(y)
    if y.ndim != 2:
        raise InvalidArgumentError(f"observations must be (T, K), got {y.shape}")
    n_times, dim = y.shape
    phi_a = active_matrix(phi)
    r = active_matrix(sigmas) / n_nodes
    if r.shape != (n_times, dim, dim):
        raise InvalidArgumentError("need one emission covariance per time point")
    a_mat = _transition(a, dim)

    x_pred = np.empty((n_times, dim))
    p_pred = np.empty((n_times, dim, dim))
    x_filt = np.empty((n_times, dim))
    p_filt = np.empty((n_times, dim, dim))
    gains = np.empty((n_times, dim, dim))

    x, p = active_vector(nu), phi_a
    for t in range(n_times):
        if t > 0:
            x = a_mat @ x_filt[t - 1]
            p = a_mat @ p_filt[t - 1] @ a_mat.T + phi_a
        x_pred[t], p_pred[t] = x, symmetrize(p)
        s_inv = spd_inverse(p_pred[t] + r[t], jitter, f"innovation covariance at t={t + 1}")
        gain = p_pred[t] @ s_inv
        gains[t] = gain
        x_filt[t] = x_pred[t] + gain @ (y[t] - x_pred[t])
        p_filt[t] = symmetrize(p_pred[t] - gain @ p_pred[t])
    return KalmanTrace(x_pred, p_pred, x_filt, p_filt, gains)


def rts_smooth(trace, phi, a=None, jitter=1e-8):
    """Backward pass from t = T-1 down to 1; returns a completed trace."""
    phi_a = active_matrix(phi)
    n_times, dim = trace.x_filt.shape
    a_mat = _transition(a, dim)

    x_smooth = trace.x_filt.copy()
    p_smooth = trace.p_filt.copy()
    l_mats = np.empty((max(n_times - 1, 0), dim, dim))
    for t in range(n_times - 2, -1, -1):
        x_next = a_mat @ trace.x_filt[t]
        p_next = symmetrize(a_mat @ trace.p_filt[t] @ a_mat.T + phi_a)
        gain = trace.p_filt[t] @ a_mat.T @ spd_inverse(p_next, jitter, f"predicted covariance at t={t + 2}")
        l_mats[t] = gain
        x_smooth[t] = trace.x_filt[t] + gain @ (x_smooth[t + 1] - x_next)
        p_smooth[t] = symmetrize(trace.p_filt[t] + gain @ (p_smooth[t + 1] - p_next) @ gain.T)

    return KalmanTrace(
        trace.x_pred, trace.p_pred, trace.x_filt, trace.p_filt, trace.gains,
        x_smooth=x_smooth, p_smooth=p_smooth, l_mats=l_mats,
    )


def smooth_trajectory(y, nu, phi, sigmas, n_nodes, a=None, jitter=1e-8):
    trace = kalman_filter(y, nu, phi, sigmas, n_nodes, a=a, jitter=jitter)
    return rts_smooth(trace, phi, a=a, jitter=jitter)
