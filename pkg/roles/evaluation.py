"""Recovery metrics, importance-sampling likelihood and BIC model selection."""
import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .dynamic import fit_dmmsb
from .exceptions import InvalidArgumentError, NumericalError, RoleModelError
from .gaussian import active_matrix, active_vector, embed_vector, gaussian_logpdf, sample_gaussian
from .model import logistic_transform
from .rng import make_rng, spawn
from .static import fit_lnmmsb

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_ROLES = 8


@dataclass(frozen=True)
class Alignment:
    perm: tuple  # aligned[:, k] = estimate[:, perm[k]]
    cost: float

    def apply(self, pi_est):
        return np.asarray(pi_est)[..., list(self.perm)]


@dataclass
class ModelScore:
    k: int
    loglik: float
    loglik_se: float
    n_params: int
    bic: float
    error: str = None

    @property
    def failed(self):
        return self.error is not None


def _check_pair(pi_true, pi_est):
    pi_true = np.asarray(pi_true, dtype=float)
    pi_est = np.asarray(pi_est, dtype=float)
    if pi_true.shape != pi_est.shape:
        raise InvalidArgumentError(f"membership shapes differ: {pi_true.shape} vs {pi_est.shape}")
    return pi_true, pi_est


def _total_l2(pi_true, pi_est):
    return float(np.linalg.norm(pi_true - pi_est, axis=-1).sum())


def align_roles(pi_true, pi_est):
    """Role permutation of the estimate minimizing the total l2 distance.

    Exhaustive over K! orderings up to 8 roles; above that the assignment
    problem on squared distances is solved instead.
    """
    pi_true, pi_est = _check_pair(pi_true, pi_est)
    k = pi_true.shape[-1]
    if k <= EXHAUSTIVE_MAX_ROLES:
        best = None
        for perm in itertools.permutations(range(k)):
            cost = _total_l2(pi_true, pi_est[..., list(perm)])
            if best is None or cost < best.cost - 1e-12:
                best = Alignment(perm=perm, cost=cost)
        return best
    flat_true = pi_true.reshape(-1, k)
    flat_est = pi_est.reshape(-1, k)
    # cost[a, b]: placing estimated role b in slot a
    cost = ((flat_true[:, :, None] - flat_est[:, None, :]) ** 2).sum(axis=0)
    _, cols = linear_sum_assignment(cost)
    perm = tuple(int(c) for c in cols)
    return Alignment(perm=perm, cost=_total_l2(pi_true, pi_est[..., list(perm)]))


def membership_error(pi_true, pi_est, norm="l2"):
    """Average over nodes of the l1 or l2 distance (inputs already aligned)."""
    pi_true, pi_est = _check_pair(pi_true, pi_est)
    order = {"l1": 1, "l2": 2}.get(norm)
    if order is None:
        raise InvalidArgumentError(f"norm must be 'l1' or 'l2', got {norm!r}")
    return float(np.linalg.norm(pi_true - pi_est, ord=order, axis=-1).mean())


def aligned_error(pi_true, pi_est, norm="l2"):
    alignment = align_roles(pi_true, pi_est)
    return membership_error(pi_true, alignment.apply(pi_est), norm), alignment


def large_error_fraction(pi_true, pi_est, threshold=0.2):
    """Share of nodes whose l1 membership error exceeds ``threshold``."""
    pi_true, pi_est = _check_pair(pi_true, pi_est)
    return float(np.mean(np.abs(pi_true - pi_est).sum(axis=-1) > threshold))


def edge_loglik(adjacency, mask, pi, b):
    """log prod_ij sum_uv pi_iu pi_jv B_uv^e (1 - B_uv)^(1-e), z summed out per pair."""
    p = pi @ b @ pi.T
    e = adjacency[mask]
    p = np.clip(p[mask], 0.0, 1.0)
    with np.errstate(divide="ignore"):
        terms = np.where(e, np.log(p), np.log1p(-p))
    return float(terms.sum())


def loglik_importance(net, params, posterior, n_samples, seed=None):
    """Importance-sampling estimate of log p(E | params) and its standard error.

    Proposal: q = prod_i N(gamma~_i, Sigma~_i). Weights: prior over proposal
    density times the exact edge likelihood. Returns log of the mean weight
    and a delta-method standard error.
    """
    if n_samples < 100:
        raise InvalidArgumentError(f"need at least 100 importance samples, got {n_samples}")
    if net.n_times != 1:
        raise InvalidArgumentError("loglik_importance scores a single snapshot")
    rng = make_rng(seed)
    adjacency, mask = net.snapshots[0], net.mask()
    n = net.n_nodes
    mu_a = active_vector(params.mu)
    sigma_a = active_matrix(params.sigma)
    gamma_a = posterior.gamma_active()
    sigma_t = posterior.sigma_active()

    draws = np.empty((n_samples, n, mu_a.size))
    log_w = np.zeros(n_samples)
    for i in range(n):
        draws[:, i] = sample_gaussian(rng, gamma_a[i], sigma_t[i], n_samples)
        log_w += gaussian_logpdf(draws[:, i], mu_a, sigma_a) - gaussian_logpdf(draws[:, i], gamma_a[i], sigma_t[i])

    for s in range(n_samples):
        pi = logistic_transform(embed_vector(draws[s]))
        log_w[s] += edge_loglik(adjacency, mask, pi, params.b)

    if not np.any(np.isfinite(log_w)):
        raise NumericalError("every importance weight is zero; the proposal misses the posterior")
    loglik = float(logsumexp(log_w) - np.log(n_samples))
    shifted = np.exp(log_w - np.max(log_w))
    se = float(shifted.std(ddof=1) / (np.sqrt(n_samples) * shifted.mean()))
    return loglik, se


def loglik_importance_dynamic(net, params, posteriors, n_samples, seed=None):
    """Sum of per-snapshot estimates under (mu^(t), Sigma^(t), B)."""
    total, var = 0.0, 0.0
    for t, child in enumerate(spawn(seed, net.n_times)):
        ll, se = loglik_importance(net.at(t), params.at(t), posteriors[t], n_samples, child)
        total += ll
        var += se**2
    return total, float(np.sqrt(var))


def n_free_params(n_roles, n_times=1, model="static"):
    """Free reals estimated: B, the mean and one (or T+1) active covariances."""
    k = n_roles
    cov = (k - 1) * k // 2
    if model == "static":
        return k * k + (k - 1) + cov
    if model == "dynamic":
        return k * k + (k - 1) + cov + n_times * cov
    raise InvalidArgumentError(f"unknown model {model!r}")


def bic_score(loglik, dims, model="static", directed=True, loglik_se=0.0):
    """BIC = -2 loglik + n_params log(n_obs), n_obs = observed dyads. Lower is better."""
    if not np.isfinite(loglik):
        raise InvalidArgumentError("loglik must be finite")
    pairs = dims.n_nodes * (dims.n_nodes - 1)
    if not directed:
        pairs //= 2
    n_obs = dims.n_times * pairs
    n_params = n_free_params(dims.n_roles, dims.n_times, model)
    bic = -2.0 * loglik + n_params * np.log(n_obs)
    return ModelScore(k=dims.n_roles, loglik=float(loglik), loglik_se=float(loglik_se), n_params=n_params, bic=float(bic))


def score_fit(net, fit, k, cfg, seed=None):
    """IS log-likelihood and BIC of a finished static or dynamic fit."""
    if cfg.model == "dynamic":
        ll, se = loglik_importance_dynamic(net, fit.params, fit.posteriors, cfg.is_samples, seed)
    else:
        ll, se = loglik_importance(net, fit.params, fit.posterior, cfg.is_samples, seed)
    return bic_score(ll, net.dims(k), cfg.model, net.directed, loglik_se=se)


def select_roles(net, k_range, cfg, seed=None):
    """Fit every K in ``k_range`` and return the BIC minimizer with all scores.

    A K whose fit or scoring fails is recorded with its error and skipped.
    """
    k_range = list(k_range)
    if not k_range:
        raise InvalidArgumentError("k_range is empty")
    if cfg.model == "static" and net.n_times != 1:
        raise InvalidArgumentError("static selection needs a single snapshot")
    fit = fit_dmmsb if cfg.model == "dynamic" else fit_lnmmsb

    scores = {}
    for k, child in zip(k_range, spawn(seed, len(k_range))):
        fit_seed, score_seed = child.spawn(2)
        try:
            result = fit(net, k, cfg, fit_seed)
            scores[k] = score_fit(net, result, k, cfg, score_seed)
        except RoleModelError as exc:
            logger.warning("K=%d failed: %s", k, exc)
            scores[k] = ModelScore(
                k=k,
                loglik=float("nan"),
                loglik_se=float("nan"),
                n_params=n_free_params(k, net.n_times, cfg.model),
                bic=float("nan"),
                error=str(exc),
            )
            continue
        logger.info("K=%d loglik=%.3f bic=%.3f", k, scores[k].loglik, scores[k].bic)

    ok = [s for s in scores.values() if not s.failed]
    if not ok:
        raise NumericalError("every role count failed to fit")
    best = min(ok, key=lambda s: (s.bic, s.k))
    return best.k, scores
