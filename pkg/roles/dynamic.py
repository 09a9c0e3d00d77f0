"""Dynamic mixed-membership model: the role-vector prior mean follows a
linear-Gaussian state-space model across snapshots while B stays constant.
"""
import logging
from typing import NamedTuple

import numpy as np

from .exceptions import InvalidArgumentError
from .gaussian import active_matrix, embed_matrix, embed_vector, floor_eigenvalues
from .kalman import KalmanTrace, pseudo_observations, smooth_trajectory
from .model import DynParams, FitReport
from .rng import make_rng, spawn
from .static import (
    INIT_SIGMA_SCALE,
    SnapshotState,
    infer_lnmmsb,
    mstep_b,
    n_draws,
    random_gamma_init,
    relative_change,
    run_restarts,
    surrogate_objective,
)

logger = logging.getLogger(__name__)

# Eigenvalue floor for the per-time covariances; the filter needs an
# invertible emission covariance even when all posterior means coincide.
SIGMA_FLOOR = 1e-6


class DynamicInference(NamedTuple):
    posteriors: list
    deltas: list
    trace: KalmanTrace
    report: FitReport


class DynamicFit(NamedTuple):
    params: DynParams
    posteriors: list
    deltas: list
    trace: KalmanTrace
    report: FitReport


def _smooth(posteriors, params, n_nodes, jitter):
    y = pseudo_observations(np.stack([p.gamma_tilde for p in posteriors]))
    return smooth_trajectory(y, params.nu, params.phi, params.sigmas, n_nodes, a=params.a, jitter=jitter)


def _total_objective(net, posteriors, deltas, params, jitter):
    mask = net.mask()
    draws = n_draws(net.n_nodes, net.directed)
    return sum(
        surrogate_objective(net.snapshots[t], mask, deltas[t], posteriors[t], params.at(t), draws, jitter)
        for t in range(net.n_times)
    )


def infer_dmmsb(net, params, cfg, seed=None):
    """Alternate per-snapshot inference and smoothing of the prior means.

    Each outer iteration runs the static fixed point on every snapshot with
    prior mean mu^(t), recomputes the pseudo-observations Y^(t) and refreshes
    mu^(t) = x_{t|T}. The first iteration draws ``cfg.n_restarts`` random
    starts per snapshot; later ones warm-start from the previous posteriors.
    Returns the posteriors, the deltas, the smoothed trace and a report;
    ``params.mu_traj`` is updated in place.
    """
    params.validate()
    if params.n_times != net.n_times:
        raise InvalidArgumentError(f"params cover {params.n_times} time points, network has {net.n_times}")
    seeds = spawn(seed, net.n_times)
    posteriors = [None] * net.n_times
    deltas = [None] * net.n_times
    report = FitReport()
    trace = None

    for outer in range(1, cfg.max_outer + 1):
        for t in range(net.n_times):
            init = None if posteriors[t] is None else posteriors[t].gamma_tilde
            result = infer_lnmmsb(net.at(t), params.at(t), cfg, seed=seeds[t], gamma_init=init)
            posteriors[t], deltas[t] = result.posterior, result.delta
            report.n_inner += result.report.n_inner
        trace = _smooth(posteriors, params, net.n_nodes, cfg.jitter)
        params.mu_traj = trace.mu_trajectory()
        report.objective_trace.append(_total_objective(net, posteriors, deltas, params, cfg.jitter))
        report.n_outer = outer
        logger.debug("dynamic inference outer %d objective %.6f", outer, report.objective_trace[-1])
        if outer > 1 and relative_change(report.objective_trace[-1], report.objective_trace[-2]) < cfg.tol:
            report.converged = True
            break
    if not report.converged:
        logger.warning("dynamic inference did not converge in %d outer iterations", cfg.max_outer)
    return DynamicInference(posteriors, deltas, trace, report)


def mstep_b_dynamic(snapshots, deltas, mask, previous=None):
    """B pooled over every time point and observed pair."""
    edges = np.concatenate([snapshots[t][mask] for t in range(len(deltas))])
    weights = np.concatenate([deltas[t][mask] for t in range(len(deltas))])
    return mstep_b(edges, weights, previous)


def mstep_dynamics(trace, posteriors, phi_previous=None, a=None, jitter=1e-8):
    """Re-estimate (nu, Phi, Sigma^(t)) from the smoothed trace.

        Phi     = 1/(T-1) (sum (x_{t+1|T} - A x_{t|T})(...)^T + sum L_t P_{t+1|T} L_t^T)
        Sigma^t = 1/N (sum_i (x_{t|T} - gamma~_i^t)(...)^T + sum_i Sigma~_i^t)
        nu      = x_{1|T}

    With a single time point Phi is returned unchanged.
    """
    if not trace.smoothed:
        raise InvalidArgumentError("mstep_dynamics needs a smoothed trace")
    x = trace.x_smooth
    n_times, dim = x.shape
    a_mat = np.eye(dim) if a is None else active_matrix(a)

    if n_times >= 2:
        steps = x[1:] - x[:-1] @ a_mat.T
        spread = np.einsum("tij,tjk,tlk->il", trace.l_mats, trace.p_smooth[1:], trace.l_mats)
        phi = (steps.T @ steps + spread) / (n_times - 1)
        phi = embed_matrix(floor_eigenvalues(phi, jitter))
    elif phi_previous is not None:
        phi = np.asarray(phi_previous, dtype=float)
    else:
        raise InvalidArgumentError("a single time point needs the previous Phi")

    sigmas = []
    for t, posterior in enumerate(posteriors):
        diff = x[t] - posterior.gamma_active()
        sigma = (diff.T @ diff + posterior.sigma_active().sum(axis=0)) / diff.shape[0]
        sigmas.append(embed_matrix(floor_eigenvalues(sigma, SIGMA_FLOOR)))
    return embed_vector(x[0]), phi, np.stack(sigmas)


def _initial_params(rng, k, n_times, a=None):
    nu = embed_vector(rng.standard_normal(k - 1))
    scale = embed_matrix(INIT_SIGMA_SCALE * np.eye(k - 1))
    return DynParams(
        nu=nu,
        phi=scale,
        sigmas=np.tile(scale, (n_times, 1, 1)),
        b=rng.uniform(size=(k, k)),
        a=a,
        mu_traj=np.tile(nu, (n_times, 1)),
    )


def fit_dmmsb(net, k, cfg, seed=None, a=None):
    """Variational EM for (B, nu, Phi, Sigma^(t)).

    B ~ U[0, 1], nu ~ N(0, I), mu^(t) = nu, Phi = 10 I, Sigma^(t) = 10 I to
    start. Inner loop: delta and gamma updates for every snapshot, then B.
    Outer loop: smoother refresh of mu^(t), then (nu, Phi, Sigma^(t)).
    ``a`` fixes a non-identity transition matrix; it is never estimated.
    """
    if k < 1:
        raise InvalidArgumentError(f"need at least 1 role, got {k}")
    mask = net.mask()
    n = net.n_nodes

    def run_one(index, child):
        rng = make_rng(child)
        params = _initial_params(rng, k, net.n_times, a)
        states = [
            SnapshotState(
                net.snapshots[t],
                mask,
                net.directed,
                random_gamma_init(rng, params.mu_traj[t], params.sigmas[t], n),
                params.sigmas[t],
            )
            for t in range(net.n_times)
        ]
        report = FitReport()
        trace = None
        for outer in range(1, cfg.max_outer + 1):
            inner_trace = []
            for _ in range(cfg.max_inner):
                for t, state in enumerate(states):
                    state.sweep(params.at(t), cfg.jitter)
                params.b = mstep_b_dynamic(net.snapshots, [s.delta for s in states], mask, params.b)
                inner_trace.append(sum(s.objective(params.at(t), cfg.jitter) for t, s in enumerate(states)))
                report.n_inner += 1
                if len(inner_trace) > 1 and relative_change(inner_trace[-1], inner_trace[-2]) < cfg.tol:
                    break

            posteriors = [s.posterior for s in states]
            trace = _smooth(posteriors, params, n, cfg.jitter)
            params.mu_traj = trace.mu_trajectory()
            params.nu, params.phi, params.sigmas = mstep_dynamics(
                trace, posteriors, phi_previous=params.phi, a=params.a, jitter=cfg.jitter
            )
            report.objective_trace.append(
                sum(s.objective(params.at(t), cfg.jitter) for t, s in enumerate(states))
            )
            report.n_outer = outer
            logger.debug("restart %d outer %d objective %.6f", index, outer, report.objective_trace[-1])
            if outer > 1 and relative_change(report.objective_trace[-1], report.objective_trace[-2]) < cfg.tol:
                report.converged = True
                break
        if not report.converged:
            logger.warning("dynamic EM restart %d did not converge in %d outer iterations", index, cfg.max_outer)
        return DynamicFit(params, [s.posterior for s in states], [s.delta for s in states], trace, report)

    logger.info("fitting dynamic model: N=%d T=%d K=%d restarts=%d", n, net.n_times, k, cfg.n_restarts)
    return run_restarts(run_one, spawn(seed, cfg.n_restarts), cfg.threads)

