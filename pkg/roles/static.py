"""Variational inference and variational EM for the static logistic-normal model.

The posterior over role indicators and role vectors is approximated by a
product of cluster marginals: one K x K multinomial per observed pair
(``delta``) and one Gaussian per node (``MembershipPosterior``), obtained
from a second-order expansion of the log partition around the previous
iterate.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np
from scipy.special import entr, logsumexp

from .exceptions import InvalidArgumentError
from .gaussian import (
    active_matrix,
    active_vector,
    embed_matrix,
    embed_vector,
    floor_eigenvalues,
    sample_gaussian,
    spd_inverse,
    spd_logdet,
    symmetrize,
)
from .model import FitReport, MembershipPosterior, StaticParams, check_compat, grad_hess_log_partition, log_partition
from .rng import make_rng, spawn

logger = logging.getLogger(__name__)

# Edge probabilities are clamped only inside logarithms.
PROB_CLAMP = 1e-6

INIT_SIGMA_SCALE = 10.0


class InferResult(NamedTuple):
    posterior: MembershipPosterior
    delta: np.ndarray
    report: FitReport


class StaticFit(NamedTuple):
    params: StaticParams
    posterior: MembershipPosterior
    delta: np.ndarray
    report: FitReport


def n_draws(n_nodes, directed=True):
    """Role draws per node: 2(N-1) for directed networks, N-1 for undirected."""
    return 2 * (n_nodes - 1) if directed else n_nodes - 1


def relative_change(new, old):
    return abs(new - old) / max(abs(old), np.finfo(float).tiny)


def _log_bernoulli(edges, b):
    clamped = np.clip(b, PROB_CLAMP, 1.0 - PROB_CLAMP)
    edges = np.asarray(edges, dtype=bool)[..., None, None]
    return np.where(edges, np.log(clamped), np.log1p(-clamped))


def _degenerate_outcomes(b):
    """Edge values whose likelihood is identically zero over all role pairs."""
    return {e for e in (False, True) if not np.any(np.where(e, b, 1.0 - b) > 0)}


def _normalize_log_weights(log_w, edges, b):
    delta = np.exp(log_w - logsumexp(log_w, axis=(-2, -1), keepdims=True))
    bad = _degenerate_outcomes(b)
    if bad:
        edges = np.broadcast_to(np.asarray(edges, dtype=bool), delta.shape[:-2])
        hit = np.isin(edges, list(bad))
        if np.any(hit):
            logger.warning(
                "edge likelihood is zero for every role pair on %d pair(s); using uniform delta",
                int(hit.sum()),
            )
            k = b.shape[0]
            delta[hit] = 1.0 / (k * k)
    return delta / delta.sum(axis=(-2, -1), keepdims=True)


def update_edge_posterior(e_ij, egamma_i, egamma_j, b):
    """delta_(u,v) proportional to exp(<gamma_iu> + <gamma_jv>) B_uv^e (1 - B_uv)^(1-e)."""
    b = check_compat(b)
    egamma_i = np.asarray(egamma_i, dtype=float)
    egamma_j = np.asarray(egamma_j, dtype=float)
    if not (np.all(np.isfinite(egamma_i)) and np.all(np.isfinite(egamma_j))):
        raise InvalidArgumentError("expected role vectors must be finite")
    log_w = egamma_i[..., :, None] + egamma_j[..., None, :] + _log_bernoulli(e_ij, b)
    return _normalize_log_weights(log_w, e_ij, b)


def update_edge_posteriors(adjacency, gamma_tilde, b):
    """Bulk delta update for every ordered pair of one snapshot: (N, N, K, K)."""
    gamma_tilde = np.asarray(gamma_tilde, dtype=float)
    return update_edge_posterior(adjacency, gamma_tilde[:, None, :], gamma_tilde[None, :, :], b)


def edge_role_expectations(delta):
    """Marginals of delta: sender roles <z_i->j> and receiver roles <z_j<-i>."""
    delta = np.asarray(delta, dtype=float)
    return delta.sum(axis=-1), delta.sum(axis=-2)


def expected_counts(delta, mask):
    """<m_ik>: expected number of times node i adopts role k over its pairs."""
    ez_to, ez_from = edge_role_expectations(delta)
    weights = mask[..., None]
    return (ez_to * weights).sum(axis=1) + (ez_from * weights).sum(axis=0)


def update_membership_posterior(
    m_expect, mu, sigma, gamma_hat, n_nodes, directed=True, draws=None, jitter=1e-8
):
    """Laplace update of q(gamma) around ``gamma_hat``.

    With (g, H) the gradient and Hessian of the log partition at gamma_hat
    and c the number of role draws per node:

        Sigma~ = (Sigma^-1 + c H)^-1
        gamma~ = mu + Sigma~ (<m> - c g + c H gamma_hat - c H mu)

    evaluated on the free coordinates; gamma~_K stays 0. ``m_expect`` and
    ``gamma_hat`` may be a single node (K,) or a batch (N, K).
    """
    if n_nodes < 2:
        raise InvalidArgumentError("need at least 2 nodes")
    c = n_draws(n_nodes, directed) if draws is None else draws
    m_expect = np.asarray(m_expect, dtype=float)
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    g, h = grad_hess_log_partition(gamma_hat)
    g_a, h_a = active_vector(g), active_matrix(h)
    mu_a = active_vector(mu)

    sigma_inv = spd_inverse(active_matrix(sigma), jitter, "prior covariance")
    sigma_tilde = symmetrize(spd_inverse(sigma_inv + c * h_a, jitter, "posterior precision"))
    shift = np.einsum("...ij,...j->...i", h_a, active_vector(gamma_hat) - mu_a)
    rhs = active_vector(m_expect) - c * g_a + c * shift
    gamma_tilde = mu_a + np.einsum("...ij,...j->...i", sigma_tilde, rhs)
    return MembershipPosterior(embed_vector(gamma_tilde), embed_matrix(sigma_tilde))


def mstep_b(edges, deltas, previous=None):
    """B_kl = sum e delta_(k,l) / sum delta_(k,l) over every supplied pair.

    ``edges`` has any leading shape and ``deltas`` the same shape plus (K, K).
    Cells that receive no posterior mass keep their ``previous`` value.
    """
    edges = np.asarray(edges, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    k = deltas.shape[-1]
    weights = deltas.reshape(-1, k, k)
    e = edges.reshape(-1)
    numerator = np.einsum("p,pkl->kl", e, weights)
    denominator = weights.sum(axis=0)
    if previous is None:
        previous = np.full((k, k), 0.5)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(denominator > 0, numerator / denominator, previous)
    return np.clip(b, 0.0, 1.0)


def mstep_b_static(adjacency, delta, mask, previous=None):
    return mstep_b(adjacency[mask], delta[mask], previous)


def mstep_mu_sigma_static(posterior, jitter=1e-8):
    """mu = mean gamma~_i; Sigma = mean Sigma~_i + population Cov(gamma~)."""
    gammas = posterior.gamma_active()
    if gammas.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 nodes")
    mu = gammas.mean(axis=0)
    centered = gammas - mu
    scatter = centered.T @ centered / gammas.shape[0]
    sigma = posterior.sigma_active().mean(axis=0) + scatter
    sigma = floor_eigenvalues(sigma, jitter)
    return embed_vector(mu), embed_matrix(sigma)


def surrogate_objective(adjacency, mask, delta, posterior, params, draws, jitter=1e-8):
    """Generalized-mean-field lower-bound proxy used for convergence."""
    k_active = params.n_roles - 1
    edge_term = np.sum(delta[mask] * _log_bernoulli(adjacency[mask], params.b))
    delta_entropy = np.sum(entr(delta[mask]))

    m = expected_counts(delta, mask)
    gammas = posterior.gamma_tilde
    sig_t = posterior.sigma_active()
    _, h = grad_hess_log_partition(gammas)
    expected_c = log_partition(gammas) + 0.5 * np.einsum("nij,nji->n", active_matrix(h), sig_t)
    role_term = np.sum(m * gammas) - draws * np.sum(expected_c)

    if k_active == 0:
        return float(edge_term + delta_entropy + role_term)

    sigma_a = active_matrix(params.sigma)
    sigma_inv = spd_inverse(sigma_a, jitter, "prior covariance")
    diff = posterior.gamma_active() - active_vector(params.mu)
    n = gammas.shape[0]
    log_2pi = np.log(2.0 * np.pi)
    prior_term = -0.5 * (
        n * (k_active * log_2pi + spd_logdet(sigma_a, jitter, "prior covariance"))
        + np.einsum("ij,nji->", sigma_inv, sig_t)
        + np.einsum("ni,ij,nj->", diff, sigma_inv, diff)
    )
    q_entropy = 0.5 * np.sum(k_active * (1.0 + log_2pi) + spd_logdet(sig_t, jitter, "posterior covariance"))
    return float(edge_term + delta_entropy + role_term + prior_term + q_entropy)


def random_gamma_init(rng, mu, sigma, n_nodes):
    """Initial role vectors drawn from the prior N(mu, Sigma)."""
    return embed_vector(sample_gaussian(rng, active_vector(mu), active_matrix(sigma), n_nodes))


class SnapshotState:
    """Mutable E-step state of one snapshot."""

    def __init__(self, adjacency, mask, directed, gamma_tilde, sigma):
        self.adjacency = adjacency
        self.mask = mask
        self.n_nodes = adjacency.shape[0]
        self.draws = n_draws(self.n_nodes, directed)
        self.directed = directed
        self.posterior = MembershipPosterior(
            np.array(gamma_tilde, dtype=float),
            np.broadcast_to(sigma, (self.n_nodes,) + sigma.shape).copy(),
        )
        self.delta = None

    def sweep(self, params, jitter):
        """One bulk-synchronous delta half-step followed by one gamma half-step."""
        self.delta = update_edge_posteriors(self.adjacency, self.posterior.gamma_tilde, params.b)
        m = expected_counts(self.delta, self.mask)
        self.posterior = update_membership_posterior(
            m, params.mu, params.sigma, self.posterior.gamma_tilde, self.n_nodes,
            directed=self.directed, jitter=jitter,
        )

    def objective(self, params, jitter):
        return surrogate_objective(
            self.adjacency, self.mask, self.delta, self.posterior, params, self.draws, jitter
        )


def _snapshot(net):
    if net.n_times != 1:
        raise InvalidArgumentError(f"expected a single snapshot, got T={net.n_times}")
    return net.snapshots[0], net.mask()


def run_restarts(run_one, seeds, threads=1):
    """Run ``run_one(index, seed)`` for every seed; keep the best objective.

    Ties go to the lowest index so the choice does not depend on threading.
    """
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(seeds))) as pool:
            results = list(pool.map(run_one, range(len(seeds)), seeds))
    else:
        results = [run_one(i, seed) for i, seed in enumerate(seeds)]
    objectives = [result.report.objective for result in results]
    best = int(np.argmax(objectives))
    winner = results[best]
    winner.report.restart_index = best
    winner.report.restart_objectives = objectives
    logger.info("restart %d won with objective %.6f", best, objectives[best])
    return winner


def infer_lnmmsb(net, params, cfg, seed=None, gamma_init=None):
    """Fixed-point inference of q(z) and q(gamma) with parameters held fixed.

    Alternates the delta and gamma updates until the relative change of the
    surrogate objective drops below ``cfg.tol`` or ``cfg.max_inner`` sweeps
    have run. Without ``gamma_init``, ``cfg.n_restarts`` random
    initializations are tried and the best objective wins.
    """
    params.validate()
    adjacency, mask = _snapshot(net)
    n = adjacency.shape[0]

    def run_one(index, child):
        rng = make_rng(child)
        start = gamma_init if gamma_init is not None else random_gamma_init(rng, params.mu, params.sigma, n)
        state = SnapshotState(adjacency, mask, net.directed, start, params.sigma)
        report = FitReport()
        for sweep in range(1, cfg.max_inner + 1):
            state.sweep(params, cfg.jitter)
            report.objective_trace.append(state.objective(params, cfg.jitter))
            report.n_inner = sweep
            if sweep > 1 and relative_change(report.objective_trace[-1], report.objective_trace[-2]) < cfg.tol:
                report.converged = True
                break
        report.n_outer = 1
        if not report.converged:
            logger.warning("inference restart %d did not converge in %d sweeps", index, cfg.max_inner)
        return InferResult(state.posterior, state.delta, report)

    n_runs = 1 if gamma_init is not None else cfg.n_restarts
    return run_restarts(run_one, spawn(seed, n_runs), cfg.threads)


def fit_lnmmsb(net, k, cfg, seed=None):
    """Variational EM for (mu, Sigma, B) on one snapshot.

    B ~ U[0, 1], mu ~ N(0, I), Sigma = 10 I to start. The inner loop updates
    delta, gamma and B; the outer loop re-estimates mu and Sigma. q(gamma) is
    drawn from the initial prior before the first outer iteration and
    warm-started after.
    """
    adjacency, mask = _snapshot(net)
    n = adjacency.shape[0]
    if k < 1:
        raise InvalidArgumentError(f"need at least 1 role, got {k}")

    def run_one(index, child):
        rng = make_rng(child)
        params = StaticParams.from_active(
            rng.standard_normal(k - 1), INIT_SIGMA_SCALE * np.eye(k - 1), rng.uniform(size=(k, k))
        )
        start = random_gamma_init(rng, params.mu, params.sigma, n)
        state = SnapshotState(adjacency, mask, net.directed, start, params.sigma)
        report = FitReport()
        for outer in range(1, cfg.max_outer + 1):
            inner_trace = []
            for _ in range(cfg.max_inner):
                state.sweep(params, cfg.jitter)
                params.b = mstep_b_static(adjacency, state.delta, mask, params.b)
                inner_trace.append(state.objective(params, cfg.jitter))
                report.n_inner += 1
                if len(inner_trace) > 1 and relative_change(inner_trace[-1], inner_trace[-2]) < cfg.tol:
                    break
            mu, sigma = mstep_mu_sigma_static(state.posterior, cfg.jitter)
            params = StaticParams(mu=mu, sigma=sigma, b=params.b)
            report.objective_trace.append(state.objective(params, cfg.jitter))
            report.n_outer = outer
            logger.debug("restart %d outer %d objective %.6f", index, outer, report.objective_trace[-1])
            if outer > 1 and relative_change(report.objective_trace[-1], report.objective_trace[-2]) < cfg.tol:
                report.converged = True
                break
        if not report.converged:
            logger.warning("EM restart %d did not converge in %d outer iterations", index, cfg.max_outer)
        return StaticFit(params, state.posterior, state.delta, report)

    logger.info("fitting static model: N=%d K=%d restarts=%d", n, k, cfg.n_restarts)
    return run_restarts(run_one, spawn(seed, cfg.n_restarts), cfg.threads)


def fit_independent_static(net, k, cfg, seed=None):
    """Separate static fits per time point (the baseline for the dynamic model)."""
    return [fit_lnmmsb(net.at(t), k, cfg, child) for t, child in enumerate(spawn(seed, net.n_times))]
