"""Core data containers: wavefront time-series, grid geometry and flow conditions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Geometry:
    """Sampling grid shared by every frame: aperture mask, sample interval, pixel pitch."""

    mask: np.ndarray
    dt: float
    dx: float

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] < 2 or mask.shape[1] < 2:
            raise ValidationError(f"mask must be a 2-D array with H, W >= 2, got shape {mask.shape}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if not (np.isfinite(self.dx) and self.dx > 0):
            raise ValidationError(f"dx must be positive, got {self.dx!r}")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "dx", float(self.dx))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def n_pixels(self) -> int:
        return int(self.mask.sum())


@dataclass
class WavefrontSeries:
    """T frames of H x W optical path difference values (meters).

    Out-of-mask pixels are forced to 0.0 on construction and carry no
    information; every statistic is computed over in-mask pixels only.
    """

    frames: np.ndarray
    mask: np.ndarray
    dt: float
    dx: float
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim == 2:
            frames = frames[None]
        if frames.ndim != 3:
            raise ValidationError(f"frames must be T x H x W, got shape {frames.shape}")
        geom = Geometry(self.mask, self.dt, self.dx)
        if frames.shape[0] < 1:
            raise ValidationError("series must contain at least one frame")
        if frames.shape[1:] != geom.shape:
            raise ValidationError(f"frame shape {frames.shape[1:]} does not match mask shape {geom.shape}")
        if not np.isfinite(frames[:, geom.mask]).all():
            raise ValidationError("non-finite OPD value inside the aperture mask")
        if (~geom.mask).any():
            frames = np.where(geom.mask, frames, 0.0)
        self.frames = frames
        self.mask = geom.mask
        self.dt = geom.dt
        self.dx = geom.dx
        self.label = str(self.label)
        self.meta = dict(self.meta)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.mask, self.dt, self.dx)

    def transposed(self) -> WavefrontSeries:
        """Swap the x and y axes (used when the stream-wise direction is along rows)."""
        return WavefrontSeries(
            np.ascontiguousarray(self.frames.transpose(0, 2, 1)),
            self.mask.T.copy(),
            self.dt,
            self.dx,
            self.label,
            self.meta,
        )


@dataclass(frozen=True)
class FlowConditions:
    """Free-stream velocity (m/s) and boundary-layer thickness (m) for Strouhal scaling."""

    u_inf: float
    delta: float

    def __post_init__(self):
        if not (np.isfinite(self.u_inf) and self.u_inf > 0):
            raise ValidationError(f"u_inf must be positive, got {self.u_inf!r}")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValidationError(f"delta must be positive, got {self.delta!r}")

    @property
    def time_scale(self) -> float:
        return self.delta / self.u_inf


def circular_mask(n: int, radius: float | None = None) -> np.ndarray:
    """Boolean disc of the given radius (pixels) centred on an n x n grid."""
    if radius is None:
        radius = n / 2
    c = (n - 1) / 2
    y, x = np.mgrid[:n, :n]
    return (x - c) ** 2 + (y - c) ** 2 <= radius**2
