"""Synthetic training data with known structure: smooth spatial modes driven by AR dynamics.

Three pairs of travelling-wave modes (complex AR(1), i.e. a damped rotation)
plus four standing modes (two AR(1), two AR(2)) give ten spatial modes with
mixed temporal spectra. Modes are orthogonalised against tip/tilt/piston,
so the training set looks like TTP-removed wavefront data.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ValidationError
from .preprocess import ttp_basis
from .series import WavefrontSeries, circular_mask

# (kx, ky) cycles per aperture, damping, rotation (rad/step), variance
TRAVELLING = [
    ((1.0, 0.0), 0.80, 0.25, 1.0),
    ((1.0, 1.0), 0.80, 0.45, 0.8),
    ((1.5, -0.5), 0.70, 0.70, 0.7),
]
# AR polynomial coefficients [1, -a1, -a2], variance
STANDING = [
    ([1.0, -0.75], 0.9),
    ([1.0, -0.4], 0.8),
    ([1.0, -2 * 0.75 * np.cos(0.5), 0.5625], 0.7),
    ([1.0, -1.0, 0.24], 0.6),
]
_BURN = 500


@dataclass
class PlantedConfig:
    n: int = 32
    n_frames: int = 8192
    dt: float = 1e-4
    dx: float = 1e-3
    opd_rms: float = 5e-8
    circular: bool = True
    noise_rms: float = 0.0
    seed: int = 0

    def validate(self):
        if self.n < 8:
            raise ValidationError(f"grid size must be >= 8, got {self.n}")
        if self.n_frames < 1:
            raise ValidationError(f"n_frames must be >= 1, got {self.n_frames}")
        if self.dt <= 0 or self.dx <= 0 or self.opd_rms <= 0 or self.noise_rms < 0:
            raise ValidationError("dt, dx and opd_rms must be positive; noise_rms non-negative")


def planted_modes(mask: np.ndarray) -> np.ndarray:
    """P x 10 orthonormal smooth modes, orthogonal to tip/tilt/piston."""
    n_y, n_x = mask.shape
    ys, xs = np.nonzero(mask)
    u = (xs - (n_x - 1) / 2) / n_x
    v = (ys - (n_y - 1) / 2) / n_y
    shapes = []
    for (kx, ky), *_ in TRAVELLING:
        arg = 2 * np.pi * (kx * u + ky * v)
        shapes += [np.cos(arg), np.sin(arg)]
    shapes += [
        np.exp(-((u - 0.2) ** 2 + (v + 0.1) ** 2) / 0.02),
        u * v,
        u**2 - v**2,
        np.exp(-((u + 0.25) ** 2 + (v - 0.2) ** 2) / 0.01),
    ]
    S = np.column_stack(shapes)
    Q = ttp_basis(mask)
    S -= Q @ (Q.T @ S)
    modes, _ = np.linalg.qr(S)
    return modes


def planted_coefficients(n_frames: int, rng: np.random.Generator) -> np.ndarray:
    """10 x n_frames modal amplitudes with the variances listed above."""
    n = n_frames + _BURN
    rows = []
    for _, damping, omega, var in TRAVELLING:
        eps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        z = lfilter([1.0], [1.0, -damping * np.exp(1j * omega)], eps)[_BURN:]
        scale = np.sqrt(var / np.mean(np.abs(z) ** 2 / 2))
        rows += [z.real * scale, z.imag * scale]
    for den, var in STANDING:
        x = lfilter([1.0], den, rng.standard_normal(n))[_BURN:]
        rows.append(x * np.sqrt(var) / x.std())
    return np.array(rows)


def planted_series(config: PlantedConfig | None = None) -> WavefrontSeries:
    config = config or PlantedConfig()
    config.validate()
    rng = np.random.default_rng(config.seed)
    mask = circular_mask(config.n) if config.circular else np.ones((config.n, config.n), bool)
    modes = planted_modes(mask)
    coeffs = planted_coefficients(config.n_frames, rng)
    X = modes @ coeffs  # (P, T)
    X *= config.opd_rms / np.sqrt(np.mean(X**2))
    if config.noise_rms > 0:
        X += config.noise_rms * rng.standard_normal(X.shape)
    frames = np.zeros((config.n_frames,) + mask.shape)
    frames[:, mask] = X.T
    return WavefrontSeries(frames, mask, config.dt, config.dx, label="planted-demo", meta={"planted": asdict(config)})
