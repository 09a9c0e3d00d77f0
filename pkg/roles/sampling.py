"""Generative samplers for static and dynamic networks.

Draw order is fixed: node role vectors first (node order), then one block of
three uniforms per observed pair in row-major (i, j) order, used for the
sender role, the receiver role and the edge in that order.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError
from .gaussian import active_matrix, active_vector, embed_matrix, embed_vector, sample_gaussian
from .model import DynParams, NetSeq, StaticParams, check_compat, logistic_transform, pair_mask
from .rng import make_rng

logger = logging.getLogger(__name__)


@dataclass
class NetworkTruth:
    """Ground truth kept by the samplers for evaluation."""

    gammas: np.ndarray  # (T, N, K)
    pis: np.ndarray  # (T, N, K)
    z_to: np.ndarray  # (T, N, N), -1 off the observed pairs
    z_from: np.ndarray  # (T, N, N)
    mu_traj: np.ndarray = None  # (T, K)


@dataclass(frozen=True)
class Scenario:
    b: np.ndarray
    strength: float
    spread: float


def scenario_params(name, k=3):
    """Role-compatibility matrix and membership shape of a synthetic setting.

    ``I``: near-pure memberships, diagonal B.
    ``II``: near-pure memberships, B with strong off-diagonal links.
    ``III``: strongly mixed memberships, weak within-role affinity.
    """
    if k < 2:
        raise InvalidArgumentError("scenarios need at least 2 roles")
    eye = np.eye(k)
    if name == "I":
        return Scenario(b=0.02 + 0.78 * eye, strength=5.0, spread=1.0)
    if name == "II":
        shift = np.roll(eye, 1, axis=1)
        return Scenario(b=0.02 + 0.78 * eye + 0.28 * shift, strength=5.0, spread=1.0)
    if name == "III":
        return Scenario(b=0.1 + 0.3 * eye, strength=1.5, spread=1.0)
    raise InvalidArgumentError(f"unknown scenario {name!r}; expected I, II or III")


def _draw_roles(cdf_rows, u):
    return (u[:, None] >= cdf_rows[:, :-1]).sum(axis=1)


def sample_from_memberships(pi, b, seed=None, directed=True):
    """Sample one network given per-node memberships ``pi`` (N, K).

    Returns ``(adjacency, z_to, z_from)``; z arrays hold -1 on pairs that are
    not observed (the diagonal, and i > j for undirected networks).
    """
    rng = make_rng(seed)
    pi = np.asarray(pi, dtype=float)
    b = check_compat(b)
    n = pi.shape[0]
    if pi.ndim != 2 or pi.shape[1] != b.shape[0]:
        raise InvalidArgumentError(f"pi shape {pi.shape} does not match B {b.shape}")
    rows, cols = np.nonzero(pair_mask(n, directed))
    u = rng.random((rows.size, 3))
    cdf = np.cumsum(pi, axis=1)
    z_to_pairs = _draw_roles(cdf[rows], u[:, 0])
    z_from_pairs = _draw_roles(cdf[cols], u[:, 1])
    edges = u[:, 2] < b[z_to_pairs, z_from_pairs]

    adjacency = np.zeros((n, n), dtype=bool)
    z_to = np.full((n, n), -1, dtype=int)
    z_from = np.full((n, n), -1, dtype=int)
    adjacency[rows, cols] = edges
    z_to[rows, cols] = z_to_pairs
    z_from[rows, cols] = z_from_pairs
    if not directed:
        adjacency |= adjacency.T
    return adjacency, z_to, z_from


def _sample_gammas(rng, mu, sigma, n_nodes):
    free = sample_gaussian(rng, active_vector(mu), active_matrix(sigma), n_nodes)
    return embed_vector(free)


def sample_static_network(params, dims, seed=None, directed=True):
    """gamma_i ~ N(mu, Sigma), pi_i = softmax(gamma_i), then pairwise edges."""
    params.validate(allow_degenerate=True)
    if params.n_roles != dims.n_roles:
        raise InvalidArgumentError("params and dims disagree on the number of roles")
    rng = make_rng(seed)
    gammas = _sample_gammas(rng, params.mu, params.sigma, dims.n_nodes)
    pis = logistic_transform(gammas)
    adjacency, z_to, z_from = sample_from_memberships(pis, params.b, rng, directed)
    truth = NetworkTruth(
        gammas=gammas[None],
        pis=pis[None],
        z_to=z_to[None],
        z_from=z_from[None],
        mu_traj=params.mu[None].copy(),
    )
    return NetSeq(adjacency[None], directed=directed), truth


def sample_mean_trajectory(params, n_times, rng):
    """mu^(1) ~ N(nu, Phi), mu^(t) ~ N(A mu^(t-1), Phi) on the active block."""
    a = params.a_active()
    phi = active_matrix(params.phi)
    traj = np.empty((n_times, params.n_roles - 1))
    traj[0] = sample_gaussian(rng, active_vector(params.nu), phi, 1)[0]
    for t in range(1, n_times):
        traj[t] = sample_gaussian(rng, a @ traj[t - 1], phi, 1)[0]
    return embed_vector(traj)


def sample_dynamic_network(params, dims, seed=None, directed=True):
    """Sample a network sequence; ``params.mu_traj`` is ignored (means are drawn)."""
    if not isinstance(params, DynParams):
        raise InvalidArgumentError(f"a network sequence needs DynParams, got {type(params).__name__}")
    params.validate(allow_degenerate=True)
    if params.n_roles != dims.n_roles or params.n_times != dims.n_times:
        raise InvalidArgumentError("params and dims disagree on roles or time points")
    rng = make_rng(seed)
    mu_traj = sample_mean_trajectory(params, dims.n_times, rng)

    snapshots, gammas, pis, z_to, z_from = [], [], [], [], []
    for t in range(dims.n_times):
        gamma_t = _sample_gammas(rng, mu_traj[t], params.sigmas[t], dims.n_nodes)
        pi_t = logistic_transform(gamma_t)
        adjacency, zt, zf = sample_from_memberships(pi_t, params.b, rng, directed)
        snapshots.append(adjacency)
        gammas.append(gamma_t)
        pis.append(pi_t)
        z_to.append(zt)
        z_from.append(zf)
    logger.debug("sampled %d snapshots of %d nodes", dims.n_times, dims.n_nodes)
    truth = NetworkTruth(
        gammas=np.stack(gammas),
        pis=np.stack(pis),
        z_to=np.stack(z_to),
        z_from=np.stack(z_from),
        mu_traj=mu_traj,
    )
    return NetSeq(np.stack(snapshots), directed=directed), truth


def scenario_memberships(scenario, n_nodes, k, rng):
    """Group-structured role vectors: node i leans towards role i mod K."""
    groups = np.arange(n_nodes) % k
    raw = scenario.strength * np.eye(k)[groups] + scenario.spread * rng.standard_normal((n_nodes, k))
    gammas = raw - raw[:, -1:]
    return gammas, groups


def sample_scenario_network(name, n_nodes, seed=None, k=3, directed=True):
    scenario = scenario_params(name, k)
    rng = make_rng(seed)
    gammas, _ = scenario_memberships(scenario, n_nodes, k, rng)
    pis = logistic_transform(gammas)
    adjacency, z_to, z_from = sample_from_memberships(pis, scenario.b, rng, directed)
    truth = NetworkTruth(
        gammas=gammas[None],
        pis=pis[None],
        z_to=z_to[None],
        z_from=z_from[None],
        mu_traj=gammas.mean(axis=0)[None],
    )
    return NetSeq(adjacency[None], directed=directed), truth


def default_params(k, n_times=1):
    """Generation defaults: scenario-I compatibilities, spread-out role vectors.

    One time point gives ``StaticParams``; more give ``DynParams`` whose
    prior mean drifts as a random walk with step covariance 0.5 I.
    """
    if k < 1 or n_times < 1:
        raise InvalidArgumentError(f"need k >= 1 and n_times >= 1, got {k}, {n_times}")
    b = scenario_params("I", k).b if k > 1 else np.array([[0.1]])
    spread = embed_matrix(4.0 * np.eye(k - 1))
    if n_times == 1:
        return StaticParams(mu=np.zeros(k), sigma=spread, b=b)
    return DynParams(
        nu=np.zeros(k),
        phi=embed_matrix(0.5 * np.eye(k - 1)),
        sigmas=np.tile(spread, (n_times, 1, 1)),
        b=b,
    )
