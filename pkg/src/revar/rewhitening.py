"""Second spatial whitening layer, applied to the VAR prediction residuals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .whitening import fix_signs

EIGVAL_FLOOR = 1e-12


@dataclass(frozen=True)
class RewhitenModel:
    basis_e: np.ndarray  # (r, r) orthogonal
    eigvals_e: np.ndarray  # (r,) residual mode variances

    @property
    def r(self) -> int:
        return self.basis_e.shape[0]


def fit_rewhiten(E) -> RewhitenModel:
    """PCA of the residual covariance E E^T / n, residuals taken as zero-mean.

    No rank truncation; eigenvalues below 1e-12 of the largest are floored
    (with a warning) so the transform stays invertible.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2:
        raise ValidationError(f"residual series must be r x n, got shape {E.shape}")
    r, n = E.shape
    if n <= r:
        raise ValidationError(f"too few residual samples: n={n} must exceed r={r}")
    C = E @ E.T / n
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    if not w[0] > 0:
        raise NumericalError("degenerate residual covariance: residuals are identically zero")
    floor = EIGVAL_FLOOR * w[0]
    if np.any(w < floor):
        warnings.warn(
            f"degenerate residual covariance: {int(np.sum(w < floor))} eigenvalue(s) floored",
            RuntimeWarning,
            stacklevel=2,
        )
        w = np.maximum(w, floor)
    return RewhitenModel(basis_e=np.ascontiguousarray(fix_signs(V)), eigvals_e=w.copy())


def _check_rows(model: RewhitenModel, A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] != model.r:
        raise ValidationError(f"{name} must have {model.r} rows, got shape {A.shape}")
    return A


def rewhiten(model: RewhitenModel, E) -> np.ndarray:
    E = _check_rows(model, E, "residual series")
    return (model.basis_e.T @ E) / np.sqrt(model.eigvals_e)[:, None]


def colorize(model: RewhitenModel, W) -> np.ndarray:
    W = _check_rows(model, W, "white series")
    return model.basis_e @ (np.sqrt(model.eigvals_e)[:, None] * W)
