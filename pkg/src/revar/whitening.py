"""Spatial PCA whitening of vectorised frames and its inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

DEFAULT_ENERGY_THRESHOLD = 0.999
# modes below this fraction of the leading eigenvalue are treated as null
RELATIVE_EIGVAL_FLOOR = 1e-12


@dataclass(frozen=True)
class WhiteningModel:
    """Per-pixel mean plus the leading principal spatial modes and their variances.

    Attributes
    ----------
    mu : (P,) ndarray
        Temporal mean of every in-mask pixel.
    basis : (P, r) ndarray
        Orthonormal principal modes, ordered by decreasing variance.
    eigvals : (r,) ndarray
        Mode variances, strictly positive and non-increasing.
    """

    mu: np.ndarray
    basis: np.ndarray
    eigvals: np.ndarray

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @property
    def n_pixels(self) -> int:
        return self.basis.shape[0]


def fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def select_rank(eigvals: np.ndarray, energy_threshold: float) -> int:
    """Smallest rank whose cumulative variance reaches the threshold, minus null modes."""
    cum = np.cumsum(eigvals)
    total = cum[-1]
    r = int(np.argmax(cum >= energy_threshold * total)) + 1
    n_positive = int(np.sum(eigvals >= RELATIVE_EIGVAL_FLOOR * eigvals[0]))
    return min(r, n_positive)


def fit_pca(X: np.ndarray, energy_threshold: float = DEFAULT_ENERGY_THRESHOLD) -> WhiteningModel:
    """Fit the spatial PCA of a P x T pixel matrix.

    Eigenpairs of the sample covariance are taken from the thin SVD of the
    centred data (eigvals = s**2 / (T - 1)); the P x P covariance is never formed.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"pixel matrix must be 2-D, got shape {X.shape}")
    P, T = X.shape
    if T < 2:
        raise ValidationError(f"PCA needs at least 2 frames, got T={T}")
    if not 0.0 < energy_threshold <= 1.0:
        raise ValidationError(f"energy_threshold must lie in (0, 1], got {energy_threshold}")
    if not np.isfinite(X).all():
        raise ValidationError("pixel matrix contains non-finite values")

    mu = X.mean(axis=1)
    Xc = X - mu[:, None]
    U, s, _ = np.linalg.svd(Xc, full_matrices=False)
    eigvals = s**2 / (T - 1)
    if eigvals.size == 0 or not eigvals[0] > 0:
        raise NumericalError("degenerate covariance: data has no variance")

    r = min(select_rank(eigvals, energy_threshold), P, T - 1)
    basis = fix_signs(U[:, :r])
    return WhiteningModel(mu=mu, basis=np.ascontiguousarray(basis), eigvals=eigvals[:r].copy())


def whiten(model: WhiteningModel, X: np.ndarray) -> np.ndarray:
    """Project onto the principal modes and scale to unit variance: r x T coefficients."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != model.n_pixels:
        raise ValidationError(f"pixel matrix has {X.shape[0]} rows, model expects {model.n_pixels}")
    Z = model.basis.T @ (X - model.mu[:, None])
    return Z / np.sqrt(model.eigvals)[:, None]


def unwhiten(model: WhiteningModel, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != model.r:
        raise ValidationError(f"coefficient series has {Z.shape[0]} rows, model rank is {model.r}")
    return model.basis @ (np.sqrt(model.eigvals)[:, None] * Z) + model.mu[:, None]
