"""Image-level encoding: PCA reduction, diagonal GMM vocabulary, Fisher vectors.

The Fisher vector of an image is the average, over its descriptors, of
the normalized score-function gradient with respect to the mixture means
and standard deviations, followed by signed-square-root and L2
normalization.  All accumulation is float64.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    EmptyInput,
    InsufficientSamples,
    NumericalFailure,
)

log = logging.getLogger(__name__)

VARIANCE_FLOOR_SCALE = 1e-4  # floor on sigma^2, relative to data variance


@dataclass(frozen=True)
class PcaModel:
    """Affine projection onto the top principal directions.

    ``basis`` has one direction per row.  With ``whiten`` the rows are
    additionally scaled by inverse standard deviation along each
    direction (and are then no longer unit-norm).
    """

    mean: np.ndarray
    basis: np.ndarray

    @property
    def d_in(self) -> int:
        return self.basis.shape[1]

    @property
    def d_out(self) -> int:
        return self.basis.shape[0]


def pca_fit(samples: np.ndarray, n_components: int,
            whiten: bool = False) -> PcaModel:
    """Fit mean and top principal directions via SVD.

    Directions are ordered by decreasing eigenvalue with a deterministic
    sign convention (largest-magnitude entry of each direction positive).
    If the data has fewer nonzero eigenvalues than requested, the
    available ones are kept and a warning is logged.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("samples must be an (n, d) matrix")
    n, d_in = x.shape
    if n <= n_components:
        raise InsufficientSamples(
            f"{n} samples cannot determine {n_components} components"
        )
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("samples contain non-finite values")
    mean = x.mean(axis=0)
    _, svals, vt = np.linalg.svd(x - mean, full_matrices=False)
    tol = svals[0] * max(n, d_in) * np.finfo(np.float64).eps if len(svals) else 0.0
    rank = int(np.sum(svals > tol))
    if rank < n_components:
        log.warning("rank-deficient data: keeping %d of %d requested components",
                    rank, n_components)
    keep = min(n_components, rank) if rank > 0 else n_components
    basis = vt[:keep].copy()
    # Fix the sign of each direction by its largest-magnitude coordinate.
    idx = np.argmax(np.abs(basis), axis=1)
    signs = np.sign(basis[np.arange(keep), idx])
    signs[signs == 0] = 1.0
    basis *= signs[:, np.newaxis]
    if whiten:
        stds = svals[:keep] / np.sqrt(n - 1)
        basis = basis / stds[:, np.newaxis]
    return PcaModel(mean=mean, basis=basis)


def pca_project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project one vector or a matrix of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.d_in:
        raise DimensionMismatch(
            f"input dim {x.shape[-1]} != model dim {model.d_in}"
        )
    return (x - model.mean) @ model.basis.T


@dataclass(frozen=True)
class GmmModel:
    """Diagonal-covariance Gaussian mixture.

    ``sigmas`` are per-dimension standard deviations.  ``log_likelihoods``
    records the total data log-likelihood at each EM iteration of the fit
    that produced the model (empty for models loaded from disk).
    """

    priors: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray
    log_likelihoods: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not (np.all(self.priors > 0) and abs(self.priors.sum() - 1.0) < 1e-8):
            raise NumericalFailure("mixture priors must form a simplex")
        if np.any(self.sigmas <= 0):
            raise NumericalFailure("mixture sigmas must be positive")

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _log_gaussians(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """(t, k) log of prior-weighted component densities."""
    inv_var = 1.0 / (model.sigmas**2)
    log_norm = -0.5 * (
        model.dim * np.log(2.0 * np.pi) + np.sum(np.log(model.sigmas**2), axis=1)
    )
    # ||(x - mu) / sigma||^2 expanded to avoid a (t, k, d) temporary.
    sq = (
        (x**2) @ inv_var.T
        - 2.0 * x @ (model.means * inv_var).T
        + np.sum(model.means**2 * inv_var, axis=1)
    )
    return np.log(model.priors) + log_norm - 0.5 * sq


def log_likelihood(model: GmmModel, x: np.ndarray) -> float:
    """Total log-likelihood of the rows of x under the mixture."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return float(np.sum(logsumexp(_log_gaussians(model, x), axis=1)))


def posterior(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """Soft assignment of x to each component, computed in log-space.

    Accepts a single vector (returns shape (k,)) or a matrix of rows
    (returns (t, k)).  Rows sum to 1 exactly up to float rounding.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    logp = _log_gaussians(model, arr)
    logp -= logsumexp(logp, axis=1, keepdims=True)
    resp = np.exp(logp)
    return resp[0] if single else resp


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator,
               lloyd_iters: int = 10) -> np.ndarray:
    """Seeded k-means++ initialization with a few Lloyd refinements."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1.0 / n)
        centers[j] = x[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    for _ in range(lloyd_iters):
        d2all = (
            np.sum(x**2, axis=1)[:, None]
            - 2.0 * x @ centers.T
            + np.sum(centers**2, axis=1)[None, :]
        )
        assign = np.argmin(d2all, axis=1)
        for j in range(k):
            members = x[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                centers[j] = x[np.argmax(np.min(d2all, axis=1))]
    return centers


def gmm_fit(samples: np.ndarray, n_components: int, seed: int = 0,
            max_iter: int = 100, tol: float = 1e-5) -> GmmModel:
    """Fit a diagonal-covariance mixture by EM from a k-means++ start.

    Deterministic for a fixed seed.  Iterates until the relative
    log-likelihood improvement drops below ``tol`` or ``max_iter``
    iterations; the recorded log-likelihood sequence is non-decreasing.
    """
    x = np.asarray(samples, dtype=np.float64)
    n, d = x.shape
    if n < n_components:
        raise InsufficientSamples(f"{n} samples for {n_components} components")
    if n < 10 * n_components:
        log.warning("only %d samples for %d components; fit may be unstable",
                    n, n_components)
    rng = np.random.default_rng(seed)
    var_floor = VARIANCE_FLOOR_SCALE * np.var(x, axis=0) + 1e-12

    means = _kmeans_pp(x, n_components, rng)
    sigmas = np.sqrt(np.maximum(np.var(x, axis=0), var_floor))
    sigmas = np.tile(sigmas, (n_components, 1))
    priors = np.full(n_components, 1.0 / n_components)
    model = GmmModel(priors, means, sigmas)

    history: list[float] = []
    for _ in range(max_iter):
        logp = _log_gaussians(model, x)
        log_norm = logsumexp(logp, axis=1, keepdims=True)
        ll = float(np.sum(log_norm))
        if not np.isfinite(ll):
            raise NumericalFailure("non-finite log-likelihood during EM")
        resp = np.exp(logp - log_norm)

        nk = resp.sum(axis=0) + 10 * np.finfo(np.float64).tiny
        priors = nk / nk.sum()
        means = (resp.T @ x) / nk[:, None]
        second = (resp.T @ (x**2)) / nk[:, None]
        variances = np.maximum(second - means**2, var_floor)
        model = GmmModel(priors, means, np.sqrt(variances))

        if history and ll - history[-1] <= tol * abs(history[-1]):
            history.append(ll)
            break
        history.append(ll)
    # Final likelihood under the last parameter update.
    history.append(log_likelihood(model, x))
    return GmmModel(model.priors, model.means, model.sigmas,
                    log_likelihoods=tuple(history))


def power_l2_normalize(v: np.ndarray) -> np.ndarray:
    """Signed square root followed by L2 scaling; zero passes through."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NumericalFailure("vector contains non-finite values")
    out = np.sign(v) * np.sqrt(np.abs(v))
    norm = np.linalg.norm(out)
    return out if norm == 0 else out / norm


def fisher_encode(model: GmmModel, descriptors: np.ndarray,
                  normalize: bool = True,
                  chunk_size: int = 2048) -> np.ndarray:
    """Fisher vector of a descriptor set under the fitted mixture.

    Layout: for each component k, the d mean-deviation coordinates then
    the d variance coordinates; components concatenated in order.  With
    ``normalize`` (the default) the result gets the signed square root
    and unit L2 norm; without it the raw averaged gradient is returned
    (used by the finite-difference check).
    """
    x = np.atleast_2d(np.asarray(descriptors, dtype=np.float64))
    if x.shape[0] == 0:
        raise EmptyInput("cannot encode an empty descriptor set")
    if x.shape[1] != model.dim:
        raise DimensionMismatch(
            f"descriptor dim {x.shape[1]} != mixture dim {model.dim}"
        )
    k, d = model.n_components, model.dim
    t_total = x.shape[0]
    acc_mean = np.zeros((k, d))
    acc_var = np.zeros((k, d))
    for start in range(0, t_total, chunk_size):
        chunk = x[start : start + chunk_size]
        resp = posterior(model, chunk)  # (t, k)
        diff = (chunk[:, None, :] - model.means[None, :, :]) / model.sigmas
        acc_mean += np.einsum("tk,tkd->kd", resp, diff)
        acc_var += np.einsum("tk,tkd->kd", resp, diff**2 - 1.0)
    acc_mean /= t_total * np.sqrt(model.priors)[:, None]
    acc_var /= t_total * np.sqrt(2.0 * model.priors)[:, None]
    fv = np.concatenate([acc_mean, acc_var], axis=1).ravel()
    return power_l2_normalize(fv) if normalize else fv


def fisher_dim(n_components: int, dim: int) -> int:
    return 2 * dim * n_components
