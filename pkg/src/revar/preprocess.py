"""Frame conditioning: tip/tilt/piston removal, masked vectorisation, stream-wise deflection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .series import Geometry, WavefrontSeries


@dataclass
class PixelMatrix:
    """In-mask pixels as rows (row-major pixel order), frames as columns."""

    data: np.ndarray  # (P, T)
    index_map: np.ndarray  # (P, 2) integer (y, x)

    @property
    def n_pixels(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


def vectorize(series: WavefrontSeries) -> PixelMatrix:
    mask = series.mask
    if not mask.any():
        raise ValidationError("mask has no valid pixels (P = 0)")
    ys, xs = np.nonzero(mask)
    data = np.ascontiguousarray(series.frames[:, mask].T)
    return PixelMatrix(data=data, index_map=np.column_stack([ys, xs]))


def devectorize(matrix, geometry: Geometry, label: str = "", meta: dict | None = None) -> WavefrontSeries:
    """Scatter a P x T matrix (or PixelMatrix) back onto the masked grid."""
    data = matrix.data if isinstance(matrix, PixelMatrix) else np.asarray(matrix, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    mask = geometry.mask
    P = int(mask.sum())
    if P == 0:
        raise ValidationError("mask has no valid pixels (P = 0)")
    if data.shape[0] != P:
        raise ValidationError(f"matrix has {data.shape[0]} rows but mask has {P} valid pixels")
    frames = np.zeros((data.shape[1],) + mask.shape)
    frames[:, mask] = data.T
    return WavefrontSeries(frames, mask, geometry.dt, geometry.dx, label, meta or {})


def ttp_basis(mask: np.ndarray) -> np.ndarray:
    """Orthonormal basis (P x 3) of span{1, x, y} over the in-mask pixels."""
    ys, xs = np.nonzero(mask)
    if xs.size < 4:
        raise NumericalError(f"TTP basis singular: mask has only {xs.size} pixels")
    B = np.column_stack([np.ones(xs.size), xs - xs.mean(), ys - ys.mean()])
    Q, R = np.linalg.qr(B)
    d = np.abs(np.diag(R))
    if d.min() <= 1e-10 * d.max():
        raise NumericalError("TTP basis singular: mask pixels are collinear")
    return Q


def remove_ttp(series: WavefrontSeries) -> WavefrontSeries:
    """Subtract each frame's least-squares plane a + b x + c y over the aperture."""
    Q = ttp_basis(series.mask)
    X = series.frames[:, series.mask]  # (T, P)
    res = X - (X @ Q) @ Q.T
    res -= (res @ Q) @ Q.T  # second pass: reorthogonalise against round-off
    frames = np.zeros_like(series.frames)
    frames[:, series.mask] = res
    return WavefrontSeries(frames, series.mask, series.dt, series.dx, series.label, series.meta)


def deflection_x(series: WavefrontSeries) -> WavefrontSeries:
    """Stream-wise deflection angle by central differences along +x (columns).

    Only pixels whose two x-neighbours are also in the aperture keep a value;
    the returned mask is shrunk accordingly.
    """
    H, W = series.shape
    if W < 3:
        raise ValidationError(f"deflection_x needs W >= 3, got W={W}")
    m = series.mask
    out_mask = np.zeros_like(m)
    out_mask[:, 1:-1] = m[:, :-2] & m[:, 1:-1] & m[:, 2:]
    theta = np.zeros_like(series.frames)
    theta[:, :, 1:-1] = (series.frames[:, :, 2:] - series.frames[:, :, :-2]) / (2.0 * series.dx)
    label = f"{series.label}:theta_x" if series.label else "theta_x"
    return WavefrontSeries(theta, out_mask, series.dt, series.dx, label, series.meta)
