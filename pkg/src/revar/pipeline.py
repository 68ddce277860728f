"""Training side: fit the full ReVAR chain to a measured series."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import DEFAULT_OVERLAP
from .errors import ValidationError
from .io_model import ReVarModelFile
from .longrange import fit_longrange
from .preprocess import remove_ttp, vectorize
from .rewhitening import fit_rewhiten, rewhiten
from .series import WavefrontSeries
from .var_model import DEFAULT_ORDER, MAX_AUTO_ORDER, fit_var, is_stable, residuals, select_order, warn_if_unstable
from .whitening import DEFAULT_ENERGY_THRESHOLD, fit_pca, whiten


@dataclass
class FitConfig:
    energy_threshold: float = DEFAULT_ENERGY_THRESHOLD
    order: int | str = DEFAULT_ORDER  # or "auto" for BIC selection
    max_order: int = MAX_AUTO_ORDER
    k_modes: int | None = None  # None -> min(r, 10)
    remove_ttp: bool = True
    transpose: bool = False
    segment_len: int | None = None
    overlap: float = DEFAULT_OVERLAP
    seed: int | None = None  # recorded for provenance only

    def validate(self) -> None:
        if not 0.0 < self.energy_threshold <= 1.0:
            raise ValidationError(f"energy_threshold must lie in (0, 1], got {self.energy_threshold}")
        if self.order != "auto" and (not isinstance(self.order, int) or self.order < 1):
            raise ValidationError(f"order must be a positive integer or 'auto', got {self.order!r}")
        if self.max_order < 1:
            raise ValidationError(f"max_order must be >= 1, got {self.max_order}")
        if self.k_modes is not None and self.k_modes < 0:
            raise ValidationError(f"k_modes must be >= 0, got {self.k_modes}")
        if self.segment_len is not None and self.segment_len < 8:
            raise ValidationError(f"segment_len must be >= 8, got {self.segment_len}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValidationError(f"overlap must lie in [0, 1), got {self.overlap}")


@dataclass
class WhitenessStats:
    max_cov_error: float
    max_lag1_corr: float
    max_row_mean: float
    n_samples: int

    @property
    def tolerance(self) -> float:
        return 5.0 / np.sqrt(self.n_samples)


def whiteness_stats(W: np.ndarray) -> WhitenessStats:
    r, n = W.shape
    cov = W @ W.T / n
    w = W - W.mean(axis=1, keepdims=True)
    std = w.std(axis=1)
    lag1 = (w[:, 1:] @ w[:, :-1].T) / (n - 1) / np.outer(std, std)
    return WhitenessStats(
        max_cov_error=float(np.max(np.abs(cov - np.eye(r)))),
        max_lag1_corr=float(np.max(np.abs(lag1))),
        max_row_mean=float(np.max(np.abs(W.mean(axis=1)))),
        n_samples=n,
    )


def prepare(series: WavefrontSeries, config: FitConfig) -> WavefrontSeries:
    if config.transpose:
        series = series.transposed()
    if config.remove_ttp:
        series = remove_ttp(series)
    return series


def fit_revar(series: WavefrontSeries, config: FitConfig | None = None) -> ReVarModelFile:
    """PCA whitening -> VAR(p) -> residual re-whitening -> long-range bank."""
    config = config or FitConfig()
    config.validate()
    train = prepare(series, config)
    X = vectorize(train).data
    whitening = fit_pca(X, config.energy_threshold)
    Z = whiten(whitening, X)
    order = select_order(Z, config.max_order) if config.order == "auto" else int(config.order)
    var = fit_var(Z, order)
    rho = warn_if_unstable(var)
    E = residuals(var, Z)
    rew = fit_rewhiten(E)
    bank = fit_longrange(Z, config.k_modes, segment_len=config.segment_len, overlap=config.overlap)
    stats = whiteness_stats(rewhiten(rew, E))
    metadata = {
        "config": asdict(config),
        "training_frames": train.n_frames,
        "training_label": series.label,
        "order": order,
        "spectral_radius": rho,
        "stable": bool(is_stable(var)[0]),
        "whiteness": asdict(stats),
    }
    return ReVarModelFile(
        whitening=whitening,
        var=var,
        rewhiten=rew,
        geometry=train.geometry,
        longrange=bank,
        metadata=metadata,
        label=series.label,
    )


def analyze(model: ReVarModelFile, series: WavefrontSeries, config: FitConfig | None = None) -> dict[str, np.ndarray]:
    """Run the forward chain on a series: coefficients, residuals and white output."""
    config = config or FitConfig()
    X = vectorize(prepare(series, config)).data
    Z = whiten(model.whitening, X)
    E = residuals(model.var, Z)
    return {"Z": Z, "E": E, "W": rewhiten(model.rewhiten, E)}
