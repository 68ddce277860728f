"""On-disk formats for wavefront series (.wfs) and fitted ReVAR models (.rvm).

Both use one container layout::

    <8-byte magic>\\n
    key: value\\n          (UTF-8 header lines; the first is ``version: 1``)
    ...
    block.<name>: <dtype> <dim,dim,...> <offset> <nbytes>\\n
    end\\n
    <raw blocks>

Block offsets are counted from the first byte after the ``end`` line. Floats
are little-endian float64 in C (row-major) order, masks are one byte per
pixel, and header floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .longrange import LongRangeFilterBank
from .rewhitening import RewhitenModel
from .series import Geometry, WavefrontSeries
from .var_model import VarModel, is_stable
from .whitening import WhiteningModel

FORMAT_VERSION = 1
SERIES_MAGIC = b"REVARWFS"
MODEL_MAGIC = b"REVARMDL"
_DTYPES = {"f8": np.dtype("<f8"), "u1": np.dtype("u1")}


# --- generic container ---------------------------------------------------------


def write_container(path, magic: bytes, header: dict, blocks: list[tuple[str, np.ndarray]]) -> None:
    lines = [f"version: {FORMAT_VERSION}"]
    for key, value in header.items():
        text = str(value)
        if "\n" in text or "\r" in text:
            raise ValidationError(f"header field {key!r} must be a single line")
        lines.append(f"{key}: {text}")
    payloads = []
    offset = 0
    for name, arr in blocks:
        code = "u1" if arr.dtype == np.uint8 else "f8"
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes(order="C")
        shape = ",".join(str(d) for d in arr.shape) or "-"
        lines.append(f"block.{name}: {code} {shape} {offset} {len(raw)}")
        payloads.append(raw)
        offset += len(raw)
    lines.append("end")
    head = magic + b"\n" + ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(head)
        for raw in payloads:
            fh.write(raw)


def read_magic(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read(len(SERIES_MAGIC))
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc


def read_container(path, magic: bytes) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    if raw[: len(magic) + 1] != magic + b"\n":
        raise FormatError(f"{path}: unknown magic at byte 0 (expected {magic.decode()})")
    pos = len(magic) + 1
    header: dict[str, str] = {}
    block_specs = []
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise FormatError(f"{path}: malformed header: missing 'end' line (byte {pos})")
        try:
            line = raw[pos:nl].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"{path}: malformed header: invalid UTF-8 at byte {pos}") from None
        line_start, pos = pos, nl + 1
        if line == "end":
            break
        key, sep, value = line.partition(": ")
        if not sep:
            raise FormatError(f"{path}: malformed header line at byte {line_start}: {line!r}")
        if key.startswith("block."):
            block_specs.append((key[6:], value, line_start))
        else:
            header[key] = value
    if header.get("version") != str(FORMAT_VERSION):
        raise FormatError(f"{path}: unknown format version {header.get('version')!r} (field 'version')")
    data_start = pos
    payload = len(raw) - data_start
    blocks: dict[str, np.ndarray] = {}
    declared = 0
    for name, spec, at in block_specs:
        try:
            code, shape_s, off_s, nbytes_s = spec.split()
            shape = () if shape_s == "-" else tuple(int(d) for d in shape_s.split(","))
            off, nbytes = int(off_s), int(nbytes_s)
            dtype = _DTYPES[code]
        except (ValueError, KeyError):
            raise FormatError(f"{path}: malformed block declaration 'block.{name}' at byte {at}") from None
        expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if expected != nbytes:
            raise FormatError(
                f"{path}: payload size mismatch in block '{name}': dims {shape} imply {expected} bytes, "
                f"header declares {nbytes}"
            )
        if off < 0 or off + nbytes > payload:
            raise FormatError(
                f"{path}: payload size mismatch: block '{name}' spans bytes "
                f"{data_start + off}..{data_start + off + nbytes} but file ends at byte {len(raw)}"
            )
        blocks[name] = np.frombuffer(raw, dtype=dtype, count=nbytes // dtype.itemsize, offset=data_start + off).reshape(
            shape
        ).copy()
        declared += nbytes
    if declared != payload:
        raise FormatError(
            f"{path}: payload size mismatch: header declares {declared} bytes, file carries {payload} "
            f"after byte {data_start}"
        )
    return header, blocks


def _field(header: dict, key: str, kind, path):
    if key not in header:
        raise FormatError(f"{path}: missing header field {key!r}")
    try:
        if kind is str:
            return json.loads(header[key])
        if kind is dict:
            value = json.loads(header[key])
            if not isinstance(value, dict):
                raise ValueError
            return value
        return kind(header[key])
    except (ValueError, json.JSONDecodeError):
        raise FormatError(f"{path}: malformed header field {key!r}: {header[key]!r}") from None


def _block(blocks: dict, name: str, path) -> np.ndarray:
    if name not in blocks:
        raise FormatError(f"{path}: missing block {name!r}")
    return blocks[name]


def _mask_from_block(mask: np.ndarray, path) -> np.ndarray:
    if np.any(mask > 1):
        raise FormatError(f"{path}: mask block holds values other than 0/1")
    return mask.astype(bool)


# --- wavefront series ----------------------------------------------------------


def save_series(series: WavefrontSeries, path) -> None:
    T, H, W = series.frames.shape
    header = {
        "kind": "series",
        "T": T,
        "H": H,
        "W": W,
        "dt": repr(series.dt),
        "dx": repr(series.dx),
        "label": json.dumps(series.label),
        "meta": json.dumps(series.meta, sort_keys=True),
    }
    write_container(path, SERIES_MAGIC, header, [("frames", series.frames), ("mask", series.mask.astype(np.uint8))])


def load_series(path) -> WavefrontSeries:
    header, blocks = read_container(path, SERIES_MAGIC)
    T, H, W = (_field(header, k, int, path) for k in ("T", "H", "W"))
    frames = _block(blocks, "frames", path)
    mask = _block(blocks, "mask", path)
    if frames.shape != (T, H, W):
        raise FormatError(f"{path}: payload size mismatch: frames block {frames.shape} vs header T,H,W = {(T, H, W)}")
    if mask.shape != (H, W):
        raise FormatError(f"{path}: dimension mismatch: mask block {mask.shape} vs header H,W = {(H, W)}")
    mask = _mask_from_block(mask, path)
    bad = ~np.isfinite(frames) & mask
    if bad.any():
        t, y, x = np.argwhere(bad)[0]
        raise FormatError(f"{path}: non-finite in-mask value at frame {t}, pixel ({y}, {x})")
    try:
        return WavefrontSeries(
            frames,
            mask,
            _field(header, "dt", float, path),
            _field(header, "dx", float, path),
            _field(header, "label", str, path),
            _field(header, "meta", dict, path) if "meta" in header else {},
        )
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from None


# --- model file ----------------------------------------------------------------


@dataclass
class ReVarModelFile:
    whitening: WhiteningModel
    var: VarModel
    rewhiten: RewhitenModel
    geometry: Geometry
    longrange: LongRangeFilterBank | None = None
    metadata: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        check_model_consistency(self)

    @property
    def r(self) -> int:
        return self.whitening.r

    @property
    def p(self) -> int:
        return self.var.p


def check_model_consistency(model: ReVarModelFile) -> None:
    r = model.whitening.r
    if model.var.r != r or model.rewhiten.r != r:
        raise ValidationError(
            f"inconsistent rank: whitening r={r}, VAR r={model.var.r}, rewhiten r={model.rewhiten.r}"
        )
    P = model.geometry.n_pixels
    if model.whitening.n_pixels != P or model.whitening.mu.shape != (P,):
        raise ValidationError(f"dimension mismatch: whitening has {model.whitening.n_pixels} pixels, mask has {P}")
    if model.whitening.eigvals.shape != (r,) or model.rewhiten.eigvals_e.shape != (r,):
        raise ValidationError("inconsistent rank: eigenvalue vector lengths differ from r")
    if model.longrange is not None and model.longrange.k_modes > r:
        raise ValidationError(f"inconsistent rank: long-range bank corrects {model.longrange.k_modes} > r={r} modes")


def save_model(model: ReVarModelFile, path) -> None:
    check_model_consistency(model)
    g = model.geometry
    H, W = g.shape
    header = {
        "kind": "model",
        "H": H,
        "W": W,
        "P": g.n_pixels,
        "r": model.r,
        "p": model.p,
        "dt": repr(g.dt),
        "dx": repr(g.dx),
        "label": json.dumps(model.label),
        "metadata": json.dumps(model.metadata, sort_keys=True),
    }
    blocks = [
        ("mask", g.mask.astype(np.uint8)),
        ("mu", model.whitening.mu),
        ("basis", model.whitening.basis),
        ("eigvals", model.whitening.eigvals),
        ("var_coeffs", model.var.coeffs),
        ("basis_e", model.rewhiten.basis_e),
        ("eigvals_e", model.rewhiten.eigvals_e),
    ]
    lr = model.longrange
    if lr is not None:
        header["lr_n_target"] = lr.n_target
        header["lr_k_modes"] = lr.k_modes
        blocks.append(("lr_amplitude", lr.amplitude))
        if lr.src_psd is not None:
            blocks += [("lr_src_freqs", lr.src_freqs), ("lr_src_psd", lr.src_psd)]
    write_container(path, MODEL_MAGIC, header, blocks)


def load_model(path) -> ReVarModelFile:
    header, blocks = read_container(path, MODEL_MAGIC)
    H, W, P, r, p = (_field(header, k, int, path) for k in ("H", "W", "P", "r", "p"))
    mask = _mask_from_block(_block(blocks, "mask", path), path)
    if mask.shape != (H, W) or int(mask.sum()) != P:
        raise FormatError(f"{path}: dimension mismatch: mask block {mask.shape} / {int(mask.sum())} pixels")
    expect = {
        "mu": (P,),
        "basis": (P, r),
        "eigvals": (r,),
        "var_coeffs": (p, r, r),
        "basis_e": (r, r),
        "eigvals_e": (r,),
    }
    arrays = {}
    for name, shape in expect.items():
        arr = _block(blocks, name, path)
        if arr.shape != shape:
            raise FormatError(f"{path}: inconsistent rank: block {name!r} has shape {arr.shape}, expected {shape}")
        arrays[name] = arr
    longrange = None
    if "lr_amplitude" in blocks:
        n_target = _field(header, "lr_n_target", int, path)
        amp = blocks["lr_amplitude"]
        if amp.ndim != 2 or amp.shape[0] > r:
            raise FormatError(f"{path}: inconsistent rank: long-range block shape {amp.shape} for r={r}")
        longrange = LongRangeFilterBank(n_target, amp, blocks.get("lr_src_freqs"), blocks.get("lr_src_psd"))
    try:
        geometry = Geometry(mask, _field(header, "dt", float, path), _field(header, "dx", float, path))
        return ReVarModelFile(
            whitening=WhiteningModel(arrays["mu"], arrays["basis"], arrays["eigvals"]),
            var=VarModel(arrays["var_coeffs"]),
            rewhiten=RewhitenModel(arrays["basis_e"], arrays["eigvals_e"]),
            geometry=geometry,
            longrange=longrange,
            metadata=_field(header, "metadata", dict, path),
            label=_field(header, "label", str, path),
        )
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from None


def describe(path) -> str:
    """Human-readable summary of a series or model file."""
    magic = read_magic(path)
    if magic == SERIES_MAGIC:
        s = load_series(path)
        T, H, W = s.frames.shape
        vals = s.frames[:, s.mask]
        rms = float(np.sqrt(np.mean(vals**2))) if vals.size else 0.0
        return "\n".join(
            [
                f"series: {path}",
                f"  label: {s.label}",
                f"  frames T={T}, grid H={H} x W={W}, valid pixels={int(s.mask.sum())}",
                f"  dt={s.dt!r} s, dx={s.dx!r} m",
                f"  OPD rms={rms:.6g} m",
            ]
        )
    if magic == MODEL_MAGIC:
        m = load_model(path)
        stable, rho = is_stable(m.var)
        k = m.longrange.k_modes if m.longrange is not None else 0
        return "\n".join(
            [
                f"model: {path}",
                f"  label: {m.label}",
                f"  grid H={m.geometry.shape[0]} x W={m.geometry.shape[1]}, valid pixels={m.geometry.n_pixels}",
                f"  dt={m.geometry.dt!r} s, dx={m.geometry.dx!r} m",
                f"  rank r={m.r}, VAR order p={m.p}",
                f"  spectral radius={rho:.6g} ({'stable' if stable else 'UNSTABLE'})",
                f"  long-range modes k={k}",
            ]
        )
    raise FormatError(f"{path}: unknown magic {magic!r}")
