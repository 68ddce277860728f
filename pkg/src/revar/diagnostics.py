"""Temporal power spectral density (TPSD) estimation and comparison.

Curves are one-sided densities in X**2 * s with the DC bin dropped, so
``sum(power) * df`` approximates the variance of the analysed signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import signal

from .errors import FormatError, ValidationError
from .series import FlowConditions, WavefrontSeries

MIN_SEGMENT = 8
DEFAULT_OVERLAP = 0.5
_CHUNK_ELEMENTS = 1 << 22


@dataclass
class TpsdCurve:
    freqs: np.ndarray
    power: np.ndarray
    df: float

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        self.power = np.asarray(self.power, dtype=np.float64)
        if self.freqs.shape != self.power.shape or self.freqs.ndim != 1:
            raise ValidationError("freqs and power must be 1-D arrays of equal length")
        self.df = float(self.df)

    def total_power(self) -> float:
        return float(np.sum(self.power) * self.df)


@dataclass
class StrouhalCurve:
    st: np.ndarray
    premultiplied: np.ndarray


@dataclass
class MatchReport:
    integrated_error: float
    total_power_error: float
    max_band_log_ratio: float
    n_bands: int
    f_min: float
    f_max: float

    def as_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        return (
            f"integrated pre-multiplied error: {self.integrated_error:.6g}\n"
            f"total power error:               {self.total_power_error:.6g}\n"
            f"max band log-ratio:              {self.max_band_log_ratio:.6g} over {self.n_bands} bands\n"
            f"frequency range:                 [{self.f_min:.6g}, {self.f_max:.6g}] Hz"
        )


def default_segment_len(n: int) -> int:
    """2**floor(log2(n / 8)), at least 64 but never longer than the signal."""
    seg = 2 ** int(math.floor(math.log2(max(n / 8, 1))))
    return min(max(seg, 64), n)


def _welch(x: np.ndarray, dt: float, segment_len: int, overlap: float):
    return signal.welch(
        x,
        fs=1.0 / dt,
        window="hann",
        nperseg=segment_len,
        noverlap=int(round(overlap * segment_len)),
        detrend="constant",
        return_onesided=True,
        scaling="density",
        axis=-1,
    )


def _check_params(n: int, segment_len: int | None, overlap: float) -> int:
    if segment_len is None:
        segment_len = default_segment_len(n)
    if segment_len < MIN_SEGMENT:
        raise ValidationError(f"segment_len must be >= {MIN_SEGMENT}, got {segment_len}")
    if n < segment_len:
        raise ValidationError(f"signal too short: {n} samples < segment length {segment_len}")
    if not 0.0 <= overlap < 1.0:
        raise ValidationError(f"overlap fraction must lie in [0, 1), got {overlap}")
    return segment_len


def welch_psd(x, dt: float, segment_len: int | None = None, overlap: float = DEFAULT_OVERLAP) -> TpsdCurve:
    """Welch estimate with a Hann window and per-segment mean removal."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("welch_psd expects a 1-D signal")
    segment_len = _check_params(x.size, segment_len, overlap)
    f, pxx = _welch(x, dt, segment_len, overlap)
    return TpsdCurve(f[1:], pxx[1:], f[1] - f[0])


def aggregate_tpsd(
    series: WavefrontSeries, segment_len: int | None = None, overlap: float = DEFAULT_OVERLAP
) -> TpsdCurve:
    """Average of the per-pixel Welch TPSDs over the aperture."""
    mask = series.mask
    n_pix = int(mask.sum())
    if n_pix == 0:
        raise ValidationError("cannot compute TPSD over an empty mask")
    T = series.n_frames
    segment_len = _check_params(T, segment_len, overlap)
    pix = series.frames[:, mask]  # (T, P)
    chunk = max(1, _CHUNK_ELEMENTS // T)
    acc = None
    f = None
    for lo in range(0, n_pix, chunk):
        block = np.ascontiguousarray(pix[:, lo : lo + chunk].T)
        f, pxx = _welch(block, series.dt, segment_len, overlap)
        part = pxx.sum(axis=0)
        acc = part if acc is None else acc + part
    power = acc / n_pix
    return TpsdCurve(f[1:], power[1:], f[1] - f[0])


def strouhal_premultiply(curve: TpsdCurve, flow: FlowConditions) -> StrouhalCurve:
    st = curve.freqs * flow.time_scale
    return StrouhalCurve(st=st, premultiplied=st * curve.power)


def _resample(curve: TpsdCurve, f: np.ndarray) -> np.ndarray:
    if np.all(curve.power > 0):
        out = np.exp(np.interp(np.log(f), np.log(curve.freqs), np.log(curve.power)))
    else:
        out = np.interp(f, curve.freqs, curve.power)
    # shared grid points are taken verbatim, so identical curves compare exactly
    idx = np.minimum(np.searchsorted(curve.freqs, f), curve.freqs.size - 1)
    hit = curve.freqs[idx] == f
    out[hit] = curve.power[idx[hit]]
    return out


def third_decade_bands(f_lo: float, f_hi: float) -> list[tuple[float, float]]:
    k0 = math.floor(3 * math.log10(f_lo))
    k1 = math.ceil(3 * math.log10(f_hi))
    return [(10 ** (k / 3), 10 ** ((k + 1) / 3)) for k in range(k0, k1)]


def compare_tpsd(
    ref: TpsdCurve, test: TpsdCurve, f_min: float | None = None, f_max: float | None = None
) -> MatchReport:
    """Compare ``test`` against ``ref`` on the reference grid.

    The test curve is log-log interpolated onto the reference frequencies that
    fall inside both supports (and inside [f_min, f_max] when given). Reported:

    * integrated |f S_test - f S_ref| d(ln f), relative to the same integral of f S_ref;
    * |total power difference| relative to the reference total power;
    * max over 1/3-decade bands of |ln(mean S_test / mean S_ref)|.
    """
    lo = max(ref.freqs[0], test.freqs[0])
    hi = min(ref.freqs[-1], test.freqs[-1])
    if f_min is not None:
        lo = max(lo, f_min)
    if f_max is not None:
        hi = min(hi, f_max)
    sel = (ref.freqs >= lo) & (ref.freqs <= hi)
    if lo > hi or not sel.any():
        raise ValidationError("disjoint supports: curves share no frequency range")
    f = ref.freqs[sel]
    s_ref = ref.power[sel]
    s_test = _resample(test, f)

    pm_ref = f * s_ref
    pm_diff = np.abs(f * s_test - pm_ref)
    if f.size > 1:
        lnf = np.log(f)
        denom = np.trapezoid(pm_ref, lnf)
        integrated = np.trapezoid(pm_diff, lnf) / denom if denom > 0 else _zero_or_inf(pm_diff)
    else:
        integrated = pm_diff[0] / pm_ref[0] if pm_ref[0] > 0 else _zero_or_inf(pm_diff)

    p_ref = np.sum(s_ref)
    p_test = np.sum(s_test)
    total = abs(p_test - p_ref) / p_ref if p_ref > 0 else _zero_or_inf(np.array([p_test]))

    worst = 0.0
    n_bands = 0
    for b_lo, b_hi in third_decade_bands(f[0], f[-1]):
        in_band = (f >= b_lo) & (f < b_hi)
        if not in_band.any():
            continue
        n_bands += 1
        a, b = s_test[in_band].mean(), s_ref[in_band].mean()
        if a == 0 and b == 0:
            continue
        ratio = abs(math.log(a / b)) if a > 0 and b > 0 else math.inf
        worst = max(worst, ratio)
    return MatchReport(float(integrated), float(total), float(worst), n_bands, float(f[0]), float(f[-1]))


def _zero_or_inf(x: np.ndarray) -> float:
    return 0.0 if not np.any(x) else math.inf


# --- plot-data text format ---------------------------------------------------

PLOTDATA_MAGIC = "# revar-plotdata 1"


def export_plotdata(
    curves: dict[str, TpsdCurve],
    path,
    flow: FlowConditions | None = None,
    meta: dict | None = None,
) -> None:
    """Write aligned (f, St, S, St*S) column groups, one group per labelled curve.

    Without flow conditions the Strouhal column uses delta/u_inf = 1 s, i.e. St = f.
    Shorter curves are padded with ``nan``.
    """
    if not curves:
        raise ValidationError("no curves to export")
    labels = []
    for label in curves:
        clean = "_".join(str(label).split()) or "curve"
        if ":" in clean or clean in labels:
            raise ValidationError(f"invalid or duplicate curve label {label!r}")
        labels.append(clean)
    scale = flow.time_scale if flow is not None else 1.0
    lines = [PLOTDATA_MAGIC]
    if flow is not None:
        lines.append(f"# flow: u_inf={flow.u_inf!r} delta={flow.delta!r}")
    else:
        lines.append("# flow: none")
    if meta:
        lines.append("# meta: " + json.dumps(meta, sort_keys=True))
    columns = []
    data = []
    for label, curve in zip(labels, curves.values()):
        lines.append(f"# curve: {label} df={curve.df!r} n={curve.freqs.size}")
        st = curve.freqs * scale
        columns += [f"{label}:f", f"{label}:st", f"{label}:S", f"{label}:stS"]
        data += [curve.freqs, st, curve.power, st * curve.power]
    lines.append("# columns: " + "\t".join(columns))
    n_rows = max(col.size for col in data)
    table = np.full((n_rows, len(data)), np.nan)
    for j, col in enumerate(data):
        table[: col.size, j] = col
    for row in table:
        lines.append("\t".join("nan" if np.isnan(v) else repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_plotdata(path) -> tuple[dict[str, TpsdCurve], FlowConditions | None]:
    """Parse a file written by :func:`export_plotdata`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read().splitlines()
    if not text or text[0].strip() != PLOTDATA_MAGIC:
        raise FormatError(f"{path}: not a revar plot-data file (bad first line)")
    flow = None
    specs = []
    columns = None
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        if line.startswith("# flow:"):
            body = line[len("# flow:") :].strip()
            if body != "none":
                kv = dict(item.split("=", 1) for item in body.split())
                flow = FlowConditions(float(kv["u_inf"]), float(kv["delta"]))
        elif line.startswith("# curve:"):
            parts = line[len("# curve:") :].split()
            kv = dict(item.split("=", 1) for item in parts[1:])
            specs.append((parts[0], float(kv["df"]), int(kv["n"])))
        elif line.startswith("# columns:"):
            columns = line[len("# columns:") :].strip().split("\t")
        elif line.startswith("#") or not line.strip():
            continue
        else:
            try:
                rows.append([float(v) for v in line.split("\t")])
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
    if columns is None or len(columns) != 4 * len(specs):
        raise FormatError(f"{path}: column header does not match curve declarations")
    table = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    curves = {}
    for j, (label, df, n) in enumerate(specs):
        if n > table.shape[0]:
            raise FormatError(f"{path}: curve {label!r} declares {n} rows, found {table.shape[0]}")
        curves[label] = TpsdCurve(table[:n, 4 * j], table[:n, 4 * j + 2], df)
    return curves, flow
