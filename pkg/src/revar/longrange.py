"""Long-range temporal post-processing of synthetic whitened coefficients.

Each of the leading ``k`` modes has its FFT amplitude spectrum replaced by a
target taken from the smoothed training TPSD of that mode; phases are kept
and the mode's variance is restored afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import DEFAULT_OVERLAP, default_segment_len, welch_psd
from .errors import ValidationError

DEFAULT_MAX_MODES = 10
SMOOTHING_DECADES = 1.0 / 6.0


@dataclass(frozen=True)
class LongRangeFilterBank:
    """Target amplitude spectra on the one-sided FFT grid of length ``n_target``.

    ``src_freqs`` (cycles per sample) and ``src_psd`` keep the smoothed training
    spectra so the bank can be regridded to other synthesis lengths.
    """

    n_target: int
    amplitude: np.ndarray  # (k, n_target // 2 + 1)
    src_freqs: np.ndarray | None = None
    src_psd: np.ndarray | None = None

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=np.float64)
        if amp.ndim != 2:
            amp = amp.reshape(-1, self.n_target // 2 + 1)
        if amp.shape[1] != self.n_target // 2 + 1:
            raise ValidationError(f"amplitude grid {amp.shape[1]} does not match n_target={self.n_target}")
        if np.any(amp < 0) or not np.isfinite(amp).all():
            raise ValidationError("target amplitude spectra must be finite and non-negative")
        object.__setattr__(self, "amplitude", amp)

    @property
    def k_modes(self) -> int:
        return self.amplitude.shape[0]

    def regrid(self, n: int) -> LongRangeFilterBank:
        if n == self.n_target:
            return self
        if self.k_modes == 0:
            return empty_bank(n)
        if self.src_psd is None:
            raise ValidationError("bank has no source spectra and cannot be regridded")
        amp = target_amplitudes(self.src_freqs, self.src_psd, n)
        return LongRangeFilterBank(n, amp, self.src_freqs, self.src_psd)


def empty_bank(n_target: int) -> LongRangeFilterBank:
    return LongRangeFilterBank(n_target, np.zeros((0, n_target // 2 + 1)))


def smooth_log_boxcar(freqs: np.ndarray, psd: np.ndarray, width_decades: float = SMOOTHING_DECADES) -> np.ndarray:
    """Average each bin with all bins within +-width/2 decades of it (freqs > 0)."""
    logf = np.log10(freqs)
    half = width_decades / 2
    lo = np.searchsorted(logf, logf - half, side="left")
    hi = np.searchsorted(logf, logf + half, side="right")
    csum = np.concatenate([np.zeros((psd.shape[0], 1)), np.cumsum(psd, axis=1)], axis=1)
    return (csum[:, hi] - csum[:, lo]) / (hi - lo)


def target_amplitudes(src_freqs: np.ndarray, src_psd: np.ndarray, n: int) -> np.ndarray:
    """sqrt of the source PSD, log-log interpolated onto rfftfreq(n); held flat outside."""
    grid = np.fft.rfftfreq(n)
    out = np.empty((src_psd.shape[0], grid.size))
    lf = np.log(src_freqs)
    g = np.log(np.clip(grid, src_freqs[0], src_freqs[-1]))
    for i, row in enumerate(src_psd):
        positive = np.maximum(row, np.finfo(float).tiny)
        out[i] = np.exp(0.5 * np.interp(g, lf, np.log(positive)))
    return out


def fit_longrange(
    Z,
    k_modes: int | None = None,
    n_target: int | None = None,
    segment_len: int | None = None,
    overlap: float = DEFAULT_OVERLAP,
) -> LongRangeFilterBank:
    """Build target spectra from the Welch TPSD of the leading training modes.

    Spectra are smoothed with a 1/6-decade log-frequency boxcar. ``k_modes``
    defaults to min(r, 10); ``n_target`` defaults to the training length.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValidationError(f"coefficient series must be r x T, got shape {Z.shape}")
    r, T = Z.shape
    if k_modes is None:
        k_modes = min(r, DEFAULT_MAX_MODES)
    if not 0 <= k_modes <= r:
        raise ValidationError(f"k_modes={k_modes} must lie in [0, r={r}]")
    n_target = T if n_target is None else int(n_target)
    if n_target < 1:
        raise ValidationError("n_target must be positive")
    if k_modes == 0:
        return empty_bank(n_target)
    if segment_len is None:
        segment_len = default_segment_len(T)
    if T < segment_len:
        raise ValidationError(f"training series ({T} frames) shorter than one Welch segment ({segment_len})")
    curves = [welch_psd(Z[i], 1.0, segment_len, overlap) for i in range(k_modes)]
    freqs = curves[0].freqs
    psd = np.stack([c.power for c in curves])
    smoothed = smooth_log_boxcar(freqs, psd)
    amp = target_amplitudes(freqs, smoothed, n_target)
    return LongRangeFilterBank(n_target, amp, freqs, smoothed)


def apply_longrange(bank: LongRangeFilterBank, Z) -> np.ndarray:
    """Impose the bank's amplitude spectra on the leading modes of ``Z`` (r x n)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValidationError(f"coefficient series must be r x n, got shape {Z.shape}")
    r, n = Z.shape
    if bank.k_modes == 0:
        return Z.copy()
    if n != bank.n_target:
        raise ValidationError(f"grid mismatch: bank built for n={bank.n_target}, series has n={n}")
    if bank.k_modes > r:
        raise ValidationError(f"bank corrects {bank.k_modes} modes but series has only {r}")
    out = Z.copy()
    k = bank.k_modes
    head = Z[:k]
    var_before = head.var(axis=1)
    spec = np.fft.rfft(head, axis=1)
    mag = np.abs(spec)
    phase = np.where(mag > 0, spec / np.where(mag > 0, mag, 1.0), 1.0)
    target = bank.amplitude.copy()
    target[:, 0] = mag[:, 0]  # DC untouched: the mode mean is preserved
    shaped = np.fft.irfft(phase * target, n=n, axis=1)
    mean = head.mean(axis=1, keepdims=True)
    dev = shaped - mean
    var_after = dev.var(axis=1)
    scale = np.sqrt(np.divide(var_before, var_after, out=np.zeros_like(var_before), where=var_after > 0))
    out[:k] = dev * scale[:, None] + mean
    return out
