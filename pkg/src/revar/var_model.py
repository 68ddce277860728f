"""Vector autoregression on whitened coefficient series.

Coefficient convention: z_t = A_1 z_{t-1} + ... + A_p z_{t-p} + e_t, no intercept.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError, ValidationError

DEFAULT_ORDER = 3
MAX_AUTO_ORDER = 10
STABILITY_MARGIN = 1e-9
SHRINK_TARGET = 1.0 - 1e-6
_FINITE_CHECK_EVERY = 65536


@dataclass(frozen=True)
class VarModel:
    coeffs: np.ndarray  # (p, r, r); coeffs[i] multiplies z_{t-1-i}

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] < 1:
            raise ValidationError(f"VAR coefficients must have shape (p, r, r), got {c.shape}")
        if not np.isfinite(c).all():
            raise ValidationError("VAR coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def p(self) -> int:
        return self.coeffs.shape[0]

    @property
    def r(self) -> int:
        return self.coeffs.shape[1]


def burn_in_steps(p: int) -> int:
    return max(10 * p, 200)


def lag_design(Z: np.ndarray, p: int, start: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stacked regression problem Y = X B.

    Rows are times t = start..T-1 (start defaults to p); X holds
    [z_{t-1}, ..., z_{t-p}] side by side and Y holds z_t.
    """
    r, T = Z.shape
    start = p if start is None else start
    Y = Z[:, start:].T
    X = np.hstack([Z[:, start - i : T - i].T for i in range(1, p + 1)])
    return X, Y


def _check_series(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValidationError(f"coefficient series must be r x T, got shape {Z.shape}")
    if not np.isfinite(Z).all():
        raise ValidationError("coefficient series contains non-finite values")
    return Z


def _ols(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(X, mode="reduced")
    sv = np.linalg.svd(R, compute_uv=False)
    tol = sv[0] * max(X.shape) * np.finfo(float).eps if sv.size and sv[0] > 0 else 0.0
    rank = int(np.sum(sv > tol)) if sv.size and sv[0] > 0 else 0
    if rank < X.shape[1]:
        raise NumericalError(f"collinear lags: design matrix rank {rank} < {X.shape[1]}")
    return solve_triangular(R, Q.T @ Y)


def fit_var(Z, p: int = DEFAULT_ORDER) -> VarModel:
    """Ordinary least squares VAR(p) fit via QR of the stacked lag design."""
    Z = _check_series(Z)
    r, T = Z.shape
    if p < 1:
        raise ValidationError(f"VAR order must be >= 1, got {p}")
    if T <= p * r + p:
        raise ValidationError(f"insufficient samples: T={T} must exceed p*r + p = {p * r + p}")
    X, Y = lag_design(Z, p)
    B = _ols(X, Y)  # (p*r, r)
    coeffs = np.stack([B[i * r : (i + 1) * r].T for i in range(p)])
    return VarModel(coeffs)


def select_order(Z, max_order: int = MAX_AUTO_ORDER) -> int:
    """Order minimising the Bayesian information criterion over 1..max_order.

    All candidates are fitted on the same effective sample (t >= max_order).
    """
    Z = _check_series(Z)
    r, T = Z.shape
    max_order = min(max_order, (T - 1) // (r + 1))
    while max_order >= 1 and T - max_order <= max_order * r:
        max_order -= 1
    if max_order < 1:
        raise ValidationError(f"insufficient samples for order selection: T={T}, r={r}")
    n = T - max_order
    best_p, best_bic = 1, np.inf
    for p in range(1, max_order + 1):
        X, Y = lag_design(Z, p, start=max_order)
        B = _ols(X, Y)
        E = Y - X @ B
        sign, logdet = np.linalg.slogdet(E.T @ E / n)
        if sign <= 0:
            continue
        bic = logdet + np.log(n) / n * p * r * r
        if bic < best_bic:
            best_p, best_bic = p, bic
    return best_p


def residuals(model: VarModel, Z) -> np.ndarray:
    """One-step prediction errors for t = p..T-1, shape r x (T - p)."""
    Z = _check_series(Z)
    r, T = Z.shape
    if r != model.r:
        raise ValidationError(f"series has {r} rows, model state dimension is {model.r}")
    if T <= model.p:
        raise ValidationError(f"series length {T} must exceed the VAR order {model.p}")
    E = Z[:, model.p :].copy()
    for i in range(model.p):
        E -= model.coeffs[i] @ Z[:, model.p - 1 - i : T - 1 - i]
    return E


def companion(model: VarModel) -> np.ndarray:
    p, r = model.p, model.r
    C = np.zeros((p * r, p * r))
    C[:r] = np.hstack(list(model.coeffs))
    C[r:, :-r] = np.eye((p - 1) * r)
    return C


def spectral_radius(model: VarModel) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion(model)))))


def is_stable(model: VarModel) -> tuple[bool, float]:
    rho = spectral_radius(model)
    return rho < 1.0 - STABILITY_MARGIN, rho


def shrink_to_stable(model: VarModel, target: float = SHRINK_TARGET) -> VarModel:
    """Scale every companion eigenvalue by target/radius via A_i <- A_i * s**i.

    Returns the model unchanged if it is already stable.
    """
    stable, rho = is_stable(model)
    if stable:
        return model
    s = target / rho
    scale = s ** np.arange(1, model.p + 1)
    return VarModel(model.coeffs * scale[:, None, None])


def simulate(model: VarModel, innovations, z_init=None, burn_in: int = 0) -> np.ndarray:
    """Run the VAR recursion and return the last ``n - burn_in`` states.

    Parameters
    ----------
    innovations : (r, n) array
        Driving noise, one column per step including the burn-in steps.
    z_init : (r, p) array, optional
        Initial history in chronological order (oldest first); zeros if omitted.
    burn_in : int
        Leading steps to discard.
    """
    stable, rho = is_stable(model)
    if not stable:
        raise NumericalError(f"unstable VAR model (spectral radius {rho:.6g}); shrink it first")
    eta = np.asarray(innovations, dtype=np.float64)
    if eta.ndim != 2 or eta.shape[0] != model.r:
        raise ValidationError(f"innovations must have shape ({model.r}, n), got {eta.shape}")
    if not np.isfinite(eta).all():
        raise ValidationError("innovations contain non-finite values")
    n = eta.shape[1]
    if not 0 <= burn_in < n:
        raise ValidationError(f"burn_in={burn_in} must lie in [0, {n})")
    p, r = model.p, model.r
    if z_init is None:
        z_init = np.zeros((r, p))
    z_init = np.asarray(z_init, dtype=np.float64)
    if z_init.shape != (r, p):
        raise ValidationError(f"z_init must have shape ({r}, {p}), got {z_init.shape}")

    # history rows are states; A_rev = [A_p ... A_1] so a contiguous window
    # H[t:t+p] (oldest first) flattens into the matching regressor
    H = np.empty((p + n, r))
    H[:p] = z_init.T
    H[p:] = eta.T
    A_rev = np.ascontiguousarray(np.hstack(list(model.coeffs[::-1])))
    for t in range(n):
        H[t + p] += A_rev @ H[t : t + p].ravel()
        if t % _FINITE_CHECK_EVERY == _FINITE_CHECK_EVERY - 1 and not np.isfinite(H[t + p]).all():
            raise NumericalError(f"non-finite VAR state at step {t}")
    if not np.isfinite(H[-1]).all() or not np.isfinite(H).all():
        raise NumericalError("non-finite VAR state detected")
    return np.ascontiguousarray(H[p + burn_in :].T)


def warn_if_unstable(model: VarModel) -> float:
    stable, rho = is_stable(model)
    if not stable:
        warnings.warn(
            f"fitted VAR is unstable (spectral radius {rho:.6g}); synthesis will require shrinkage",
            RuntimeWarning,
            stacklevel=2,
        )
    return rho
