"""Domain types and the logistic-normal transform.

Conventions used throughout the package:

* role vectors (``gamma``) have length K and their last component is pinned
  to 0, so only the leading K-1 coordinates are free;
* covariances are stored K x K with a zero last row and column;
* networks are boolean tensors of shape (T, N, N) with an empty diagonal.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, softmax

from .exceptions import InvalidArgumentError
from .gaussian import active_matrix, active_vector, embed_matrix, embed_vector, is_spd, symmetrize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dims:
    n_nodes: int
    n_roles: int
    n_times: int = 1

    def __post_init__(self):
        if self.n_nodes < 2:
            raise InvalidArgumentError(f"need at least 2 nodes, got {self.n_nodes}")
        if self.n_roles < 1:
            raise InvalidArgumentError(f"need at least 1 role, got {self.n_roles}")
        if self.n_times < 1:
            raise InvalidArgumentError(f"need at least 1 time point, got {self.n_times}")

    @property
    def k_active(self):
        return self.n_roles - 1


def pair_mask(n_nodes, directed=True):
    """Boolean N x N mask of the pairs that carry one observation each.

    Directed networks observe every ordered pair i != j; undirected networks
    observe each unordered pair once, stored as i < j.
    """
    if directed:
        return ~np.eye(n_nodes, dtype=bool)
    return np.triu(np.ones((n_nodes, n_nodes), dtype=bool), k=1)


@dataclass
class NetSeq:
    """T snapshots of a binary network over a fixed vertex set."""

    snapshots: np.ndarray
    directed: bool = True

    def __post_init__(self):
        snapshots = np.asarray(self.snapshots)
        if snapshots.ndim == 2:
            snapshots = snapshots[None]
        if snapshots.ndim != 3 or snapshots.shape[1] != snapshots.shape[2]:
            raise InvalidArgumentError(f"snapshots must have shape (T, N, N), got {snapshots.shape}")
        if snapshots.shape[1] < 2:
            raise InvalidArgumentError("a network needs at least 2 nodes")
        snapshots = snapshots.astype(bool)
        if np.any(np.diagonal(snapshots, axis1=1, axis2=2)):
            raise InvalidArgumentError("self-edges are not allowed")
        if not self.directed and np.any(snapshots != np.swapaxes(snapshots, 1, 2)):
            raise InvalidArgumentError("undirected network snapshots must be symmetric")
        self.snapshots = snapshots

    @property
    def n_times(self):
        return self.snapshots.shape[0]

    @property
    def n_nodes(self):
        return self.snapshots.shape[1]

    def dims(self, n_roles):
        return Dims(n_nodes=self.n_nodes, n_roles=n_roles, n_times=self.n_times)

    def mask(self):
        return pair_mask(self.n_nodes, self.directed)

    def at(self, t):
        """The single-snapshot network at (0-based) time ``t``."""
        return NetSeq(self.snapshots[t : t + 1], directed=self.directed)

    def n_dyads(self):
        return int(self.mask().sum()) * self.n_times


def make_gamma(free_values):
    """Build a role vector from its K-1 free coordinates."""
    free_values = np.asarray(free_values, dtype=float)
    if not np.all(np.isfinite(free_values)):
        raise InvalidArgumentError("gamma must be finite")
    return embed_vector(free_values)


def check_compat(b):
    """Validate a role-compatibility matrix and return it as a float array."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InvalidArgumentError(f"B must be square, got shape {b.shape}")
    if not np.all(np.isfinite(b)) or np.any(b < 0) or np.any(b > 1):
        raise InvalidArgumentError("B entries must lie in [0, 1]")
    return b


def _check_finite(gamma):
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim == 0 or gamma.shape[-1] == 0:
        raise InvalidArgumentError("gamma must have at least one component")
    if not np.all(np.isfinite(gamma)):
        raise InvalidArgumentError("gamma must be finite")
    return gamma


def log_partition(gamma):
    """C(gamma) = log sum_k exp(gamma_k), along the last axis."""
    gamma = _check_finite(gamma)
    return logsumexp(gamma, axis=-1)


def logistic_transform(gamma):
    """Map role vectors (last axis) onto the simplex."""
    gamma = _check_finite(gamma)
    pi = softmax(gamma, axis=-1)
    return pi / pi.sum(axis=-1, keepdims=True)


def grad_hess_log_partition(gamma_hat):
    """Gradient g and Hessian H = diag(g) - g g^T of C at ``gamma_hat``.

    Works on a single vector or a stack of vectors (last axis = roles).
    """
    g = logistic_transform(gamma_hat)
    eye = np.eye(g.shape[-1])
    h = g[..., :, None] * eye - g[..., :, None] * g[..., None, :]
    return g, symmetrize(h)


def dominant_roles(pi):
    """Hard role assignment (argmax) per node."""
    return np.argmax(np.asarray(pi), axis=-1)


@dataclass
class StaticParams:
    mu: np.ndarray
    sigma: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.b = check_compat(self.b)

    @property
    def n_roles(self):
        return self.b.shape[0]

    @classmethod
    def from_active(cls, mu_active, sigma_active, b):
        return cls(mu=embed_vector(mu_active), sigma=embed_matrix(sigma_active), b=b)

    def validate(self, allow_degenerate=False):
        k = self.n_roles
        if self.mu.shape != (k,) or self.sigma.shape != (k, k):
            raise InvalidArgumentError(
                f"mu/sigma shapes {self.mu.shape}/{self.sigma.shape} do not match K={k}"
            )
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.sigma)):
            raise InvalidArgumentError("mu and sigma must be finite")
        if self.mu[-1] != 0:
            raise InvalidArgumentError("the last component of mu must be 0")
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-10):
            raise InvalidArgumentError("sigma must be symmetric")
        if not allow_degenerate and not is_spd(active_matrix(self.sigma)):
            raise InvalidArgumentError("sigma must be positive definite on its active block")
        return self


@dataclass
class DynParams:
    nu: np.ndarray
    phi: np.ndarray
    sigmas: np.ndarray
    b: np.ndarray
    a: np.ndarray = None
    mu_traj: np.ndarray = None

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        self.b = check_compat(self.b)
        k = self.b.shape[0]
        if self.a is None:
            self.a = np.eye(k)
        self.a = np.asarray(self.a, dtype=float)
        if self.mu_traj is None:
            self.mu_traj = np.tile(self.nu, (self.sigmas.shape[0], 1))
        self.mu_traj = np.asarray(self.mu_traj, dtype=float)

    @property
    def n_roles(self):
        return self.b.shape[0]

    @property
    def n_times(self):
        return self.sigmas.shape[0]

    def a_active(self):
        return active_matrix(self.a)

    def at(self, t):
        """Static parameters seen by time point ``t`` (prior mean = mu^(t))."""
        return StaticParams(mu=self.mu_traj[t], sigma=self.sigmas[t], b=self.b)

    def validate(self, allow_degenerate=False):
        k = self.n_roles
        t = self.n_times
        if self.nu.shape != (k,) or self.phi.shape != (k, k) or self.a.shape != (k, k):
            raise InvalidArgumentError("nu/phi/A shapes do not match K")
        if self.sigmas.shape != (t, k, k) or self.mu_traj.shape != (t, k):
            raise InvalidArgumentError("sigmas/mu_traj shapes do not match (T, K)")
        for name in ("nu", "phi", "sigmas", "a", "mu_traj"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidArgumentError(f"{name} must be finite")
        if self.nu[-1] != 0:
            raise InvalidArgumentError("the last component of nu must be 0")
        for name, cov in [("phi", self.phi)] + [(f"sigma[{i}]", s) for i, s in enumerate(self.sigmas)]:
            if not np.allclose(cov, cov.T, atol=1e-10):
                raise InvalidArgumentError(f"{name} must be symmetric")
            if not allow_degenerate and not is_spd(active_matrix(cov)):
                raise InvalidArgumentError(f"{name} must be positive definite on its active block")
        return self


@dataclass
class MembershipPosterior:
    """Gaussian q(gamma) = N(gamma_tilde, sigma_tilde).

    Holds one node ((K,), (K, K)) or a batch of nodes ((N, K), (N, K, K)).
    """

    gamma_tilde: np.ndarray
    sigma_tilde: np.ndarray

    @property
    def pi(self):
        return logistic_transform(self.gamma_tilde)

    def gamma_active(self):
        return active_vector(self.gamma_tilde)

    def sigma_active(self):
        return active_matrix(self.sigma_tilde)

    def node(self, i):
        return MembershipPosterior(self.gamma_tilde[i], self.sigma_tilde[i])


@dataclass
class FitReport:
    """Convergence record of one fit.

    ``objective_trace`` holds the generalized-mean-field surrogate (expected
    complete-data log-likelihood plus the closed-form entropies of q, with the
    log partition replaced by its Laplace expansion), one value per iteration
    of the loop that decides convergence.
    """

    converged: bool = False
    n_outer: int = 0
    n_inner: int = 0
    objective_trace: list = field(default_factory=list)
    restart_index: int = 0
    restart_objectives: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1] if self.objective_trace else float("-inf")

    def as_dict(self):
        return {
            "converged": self.converged,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
            "objective_trace": [float(v) for v in self.objective_trace],
            "restart_index": self.restart_index,
            "restart_objectives": [float(v) for v in self.restart_objectives],
        }
