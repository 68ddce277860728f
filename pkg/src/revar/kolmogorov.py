"""FFT (angular-spectrum) von Karman phase screens and frozen-flow series.

The phase PSD is written in spatial frequency f (cycles/m)::

    PSD(f) = 0.023 r0**(-5/3) (f**2 + f0**2)**(-11/6) exp(-(f/fm)**2)

with f0 = 1/L0 and fm = 5.92 / (2 pi l0), equivalently kappa = 2 pi f,
kappa0 = 2 pi / L0, kappa_m = 5.92 / l0. With this normalisation the
structure function tends to 6.88 (r/r0)**(5/3).

A plain FFT screen badly under-represents the lowest spatial frequencies, so
by default the f = 0 cell is refined with a few levels of 3 x 3 subharmonics
(Lane et al. 1992; Johansson & Gavel 1994).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .series import WavefrontSeries

DEFAULT_SUBHARMONICS = 6
DEFAULT_WAVELENGTH = 532e-9
MAX_SCREEN_WIDTH = 1 << 16


@dataclass(frozen=True)
class TurbulenceParams:
    r0: float
    N: int
    dx: float
    L0: float = math.inf
    l0: float = 0.0

    def __post_init__(self):
        if not (self.r0 > 0 and math.isfinite(self.r0)):
            raise ValidationError(f"r0 must be positive, got {self.r0}")
        if not (self.dx > 0 and math.isfinite(self.dx)):
            raise ValidationError(f"dx must be positive, got {self.dx}")
        if not (self.l0 >= 0 and self.L0 > self.l0):
            raise ValidationError(f"need L0 > l0 >= 0, got L0={self.L0}, l0={self.l0}")
        N = int(self.N)
        if N < 16 or N & (N - 1):
            raise ValidationError(f"N must be a power of two >= 16, got {self.N}")


def phase_psd(f: np.ndarray, params: TurbulenceParams) -> np.ndarray:
    """von Karman phase PSD (rad**2 m**2) at spatial frequency magnitude f (cycles/m)."""
    f0 = 0.0 if math.isinf(params.L0) else 1.0 / params.L0
    f2 = np.asarray(f, dtype=np.float64) ** 2 + f0**2
    with np.errstate(divide="ignore"):
        psd = 0.023 * params.r0 ** (-5.0 / 3.0) * f2 ** (-11.0 / 6.0)
    if params.l0 > 0:
        fm = 5.92 / (2 * np.pi * params.l0)
        psd = psd * np.exp(-(np.asarray(f) ** 2) / fm**2)
    return np.where(np.asarray(f) == 0, 0.0, psd)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _screen(ny: int, nx: int, params: TurbulenceParams, rng: np.random.Generator, subharmonics: int) -> np.ndarray:
    dx = params.dx
    dfx, dfy = 1.0 / (nx * dx), 1.0 / (ny * dx)
    fx = np.fft.fftfreq(nx, dx)
    fy = np.fft.fftfreq(ny, dx)
    amp = np.sqrt(phase_psd(np.hypot(fx[None, :], fy[:, None]), params) * dfx * dfy)
    amp[0, 0] = 0.0
    cn = _complex_normal(rng, (ny, nx)) * amp
    screen = np.fft.ifft2(cn).real * (nx * ny)

    if subharmonics > 0:
        x = np.arange(nx) * dx
        y = np.arange(ny) * dx
        low = np.zeros((ny, nx))
        for level in range(1, subharmonics + 1):
            sx, sy = dfx / 3**level, dfy / 3**level
            gx = np.array([-1.0, 0.0, 1.0]) * sx
            gy = np.array([-1.0, 0.0, 1.0]) * sy
            a = np.sqrt(phase_psd(np.hypot(gx[None, :], gy[:, None]), params) * sx * sy)
            a[1, 1] = 0.0
            c = _complex_normal(rng, (3, 3)) * a
            # separable sum over the 3 x 3 grid: E_y (ny x 3) @ c @ E_x (3 x nx)
            ey = np.exp(2j * np.pi * np.outer(y, gy))
            ex = np.exp(2j * np.pi * np.outer(gx, x))
            low += (ey @ c @ ex).real
        screen += low - low.mean()
    return screen


def generate_screen(params: TurbulenceParams, seed: int, subharmonics: int = DEFAULT_SUBHARMONICS) -> np.ndarray:
    """N x N phase screen in radians, deterministic for a given seed."""
    if subharmonics < 0:
        raise ValidationError("subharmonics must be >= 0")
    rng = np.random.default_rng(int(seed))
    return _screen(params.N, params.N, params, rng, subharmonics)


def frozen_flow_series(
    params: TurbulenceParams,
    velocity: float,
    dt: float,
    T: int,
    seed: int,
    wavelength: float = DEFAULT_WAVELENGTH,
    subharmonics: int = DEFAULT_SUBHARMONICS,
    max_width: int = MAX_SCREEN_WIDTH,
) -> WavefrontSeries:
    """Translate an elongated screen past an N x N window along +x (Taylor frozen flow).

    Frame t reads the window starting ``t * velocity * dt / dx`` pixels in,
    linearly interpolating sub-pixel offsets; phase is converted to OPD
    through ``wavelength``.
    """
    if velocity < 0 or not math.isfinite(velocity):
        raise ValidationError(f"velocity must be >= 0, got {velocity}")
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if T < 1:
        raise ValidationError(f"T must be >= 1, got {T}")
    if not wavelength > 0:
        raise ValidationError(f"wavelength must be positive, got {wavelength}")
    N = params.N
    shift = velocity * dt / params.dx
    need = N + int(math.ceil(shift * (T - 1))) + 1
    width = max(N, 1 << (need - 1).bit_length())
    if width > max_width:
        raise ValidationError(
            f"translation exceeds screen width: {need} columns needed, maximum is {max_width}"
        )
    rng = np.random.default_rng(int(seed))
    screen = _screen(N, width, params, rng, subharmonics)

    pos = np.arange(T) * shift
    start = np.floor(pos + 1e-9).astype(int)
    frac = pos - start
    frac[np.abs(frac) < 1e-9] = 0.0
    cols = start[:, None] + np.arange(N)[None, :]  # (T, N)
    left = screen[:, cols]  # (N, T, N)
    frames = left.transpose(1, 0, 2).copy()
    moving = frac > 0
    if moving.any():
        right = screen[:, cols[moving] + 1].transpose(1, 0, 2)
        f = frac[moving][:, None, None]
        frames[moving] = (1 - f) * frames[moving] + f * right
    opd = frames * (wavelength / (2 * np.pi))
    meta = {
        "r0": params.r0,
        "L0": None if math.isinf(params.L0) else params.L0,
        "l0": params.l0,
        "velocity": velocity,
        "wavelength": wavelength,
        "seed": int(seed),
        "subharmonics": subharmonics,
    }
    return WavefrontSeries(opd, np.ones((N, N), bool), dt, params.dx, label="kolmogorov-frozen-flow", meta=meta)


def structure_function(screens: np.ndarray, max_sep: int) -> np.ndarray:
    """Ensemble structure function along both grid axes for separations 0..max_sep (pixels).

    ``screens`` is (n, N, N) or (N, N); returns D[s] averaged over position,
    axis and realisation (no wrap-around).
    """
    s = np.asarray(screens, dtype=np.float64)
    if s.ndim == 2:
        s = s[None]
    D = np.zeros(max_sep + 1)
    for k in range(1, max_sep + 1):
        dx2 = np.mean((s[:, :, k:] - s[:, :, :-k]) ** 2)
        dy2 = np.mean((s[:, k:, :] - s[:, :-k, :]) ** 2)
        D[k] = 0.5 * (dx2 + dy2)
    return D


def kolmogorov_structure_function(r, r0: float) -> np.ndarray:
    return 6.88 * (np.asarray(r, dtype=np.float64) / r0) ** (5.0 / 3.0)
