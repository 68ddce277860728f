"""Seeded synthesis: white noise driven through the inverted analysis chain."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .io_model import ReVarModelFile
from .longrange import LongRangeFilterBank, apply_longrange, empty_bank, fit_longrange  # noqa: F401
from .preprocess import devectorize
from .rewhitening import colorize
from .series import WavefrontSeries
from .var_model import burn_in_steps, is_stable, shrink_to_stable, simulate
from .whitening import unwhiten

MIN_LONGRANGE_STEPS = 8


@dataclass(frozen=True)
class SynthesisRequest:
    n_steps: int
    seed: int = 0
    apply_longrange: bool = True
    allow_shrink: bool = False

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise ValidationError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def generate_noise(r: int, n: int, seed: int) -> np.ndarray:
    """r x n i.i.d. standard normal samples from a PCG64 stream seeded by ``seed``."""
    if n < 1:
        raise ValidationError(f"noise length must be >= 1, got {n}")
    return np.random.default_rng(int(seed)).standard_normal((r, n))


def synthesize(model: ReVarModelFile, req: SynthesisRequest) -> WavefrontSeries:
    """Generate ``req.n_steps`` synthetic frames on the model's grid.

    Noise -> colorize -> VAR recursion (burn-in discarded) -> optional
    long-range spectral correction -> unwhiten -> masked frames.
    """
    var = model.var
    stable, rho = is_stable(var)
    shrunk = False
    if not stable:
        if not req.allow_shrink:
            raise NumericalError(
                f"unstable VAR model (spectral radius {rho:.6g}); rerun with shrinkage enabled"
            )
        var = shrink_to_stable(var)
        shrunk = True

    n = int(req.n_steps)
    burn = burn_in_steps(var.p)
    W = generate_noise(model.r, burn + n, req.seed)
    E = colorize(model.rewhiten, W)
    Z = simulate(var, E, burn_in=burn)

    corrected = False
    bank = model.longrange
    if req.apply_longrange and bank is not None and bank.k_modes > 0:
        if n < MIN_LONGRANGE_STEPS:
            warnings.warn(
                f"n_steps={n} < {MIN_LONGRANGE_STEPS}: long-range correction skipped",
                RuntimeWarning,
                stacklevel=2,
            )
        else:
            Z = apply_longrange(bank.regrid(n), Z)
            corrected = True

    X = unwhiten(model.whitening, Z)
    meta = {
        "source_model": model.label,
        "seed": int(req.seed),
        "n_steps": n,
        "burn_in": burn,
        "longrange_applied": corrected,
        "var_shrunk": shrunk,
    }
    label = f"revar-synth seed={int(req.seed)}"
    if model.label:
        label += f" from {model.label}"
    return devectorize(X, model.geometry, label=label, meta=meta)
