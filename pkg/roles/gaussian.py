"""Gaussian linear algebra on the active (K-1)-dimensional block.

Role vectors pin their last component to zero, so every K x K covariance in
the package keeps a zero last row and column and all algebra happens on the
leading block.
"""
import logging

import numpy as np
from scipy.stats import multivariate_normal

from .exceptions import NumericalError

logger = logging.getLogger(__name__)


def active_vector(vector):
    return np.asarray(vector, dtype=float)[..., :-1]


def active_matrix(matrix):
    return np.asarray(matrix, dtype=float)[..., :-1, :-1]


def embed_vector(vector):
    """Append the pinned zero coordinate."""
    vector = np.asarray(vector, dtype=float)
    pad = [(0, 0)] * (vector.ndim - 1) + [(0, 1)]
    return np.pad(vector, pad)


def embed_matrix(matrix):
    """Pad an active block with a zero last row and column."""
    matrix = np.asarray(matrix, dtype=float)
    pad = [(0, 0)] * (matrix.ndim - 2) + [(0, 1), (0, 1)]
    return np.pad(matrix, pad)


def symmetrize(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return 0.5 * (matrix + np.swapaxes(matrix, -1, -2))


def add_jitter(matrix, jitter):
    matrix = np.asarray(matrix, dtype=float)
    if jitter == 0 or matrix.shape[-1] == 0:
        return matrix.copy()
    return matrix + jitter * np.eye(matrix.shape[-1])


def _cholesky(matrix, jitter, what):
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass
    if jitter > 0:
        logger.warning("%s is not positive definite; retrying with jitter %g", what, jitter)
        try:
            return np.linalg.cholesky(add_jitter(matrix, jitter))
        except np.linalg.LinAlgError:
            pass
    raise NumericalError(f"{what} is singular or indefinite after jitter {jitter:g}")


def spd_inverse(matrix, jitter=1e-8, what="matrix"):
    """Inverse of a (stack of) symmetric positive-definite matrices.

    The matrix is first factorized as given; only if that fails is ``jitter``
    added to the diagonal for a single retry.
    """
    matrix = symmetrize(matrix)
    if matrix.shape[-1] == 0:
        return matrix.copy()
    chol = _cholesky(matrix, jitter, what)
    chol_inv = np.linalg.inv(chol)
    return np.swapaxes(chol_inv, -1, -2) @ chol_inv


def spd_logdet(matrix, jitter=1e-8, what="matrix"):
    matrix = symmetrize(matrix)
    if matrix.shape[-1] == 0:
        return np.zeros(matrix.shape[:-2])
    chol = _cholesky(matrix, jitter, what)
    return 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(axis=-1)


def is_spd(matrix, tol=0.0):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] == 0:
        return True
    if not np.allclose(matrix, np.swapaxes(matrix, -1, -2), atol=1e-10):
        return False
    return bool(np.all(np.linalg.eigvalsh(matrix) > tol))


def is_psd(matrix, tol=1e-12):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] == 0:
        return True
    return bool(np.all(np.linalg.eigvalsh(symmetrize(matrix)) >= -tol))


def floor_eigenvalues(matrix, floor):
    """Clip the spectrum of a symmetric matrix from below."""
    matrix = symmetrize(matrix)
    if matrix.shape[-1] == 0:
        return matrix
    values, vectors = np.linalg.eigh(matrix)
    values = np.maximum(values, floor)
    return symmetrize((vectors * values[..., None, :]) @ np.swapaxes(vectors, -1, -2))


def sample_gaussian(rng, mean, cov, size):
    """Draw ``size`` samples from N(mean, cov); cov may be singular (even zero).

    Uses an eigendecomposition so that zero-variance directions return the
    mean exactly.
    """
    mean = np.asarray(mean, dtype=float)
    dim = mean.shape[-1]
    if dim == 0:
        return np.zeros((size, 0))
    values, vectors = np.linalg.eigh(symmetrize(cov))
    root = vectors * np.sqrt(np.clip(values, 0.0, None))
    noise = rng.standard_normal((size, dim))
    return mean + noise @ root.T


def gaussian_logpdf(x, mean, cov):
    """Log density of rows of ``x`` under N(mean, cov) on the active block."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] == 0:
        return np.zeros(x.shape[0])
    return np.atleast_1d(multivariate_normal.logpdf(x, mean=mean, cov=symmetrize(cov)))
