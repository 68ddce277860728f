"""Flat key-value run configuration: file values first, command-line flags override."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from .errors import FormatError, ValidationError


@dataclass
class RunConfig:
    # fit
    energy_threshold: float = 0.999
    order: str = "3"  # integer or "auto"
    max_order: int = 10
    k_modes: int | None = None
    remove_ttp: bool = True
    transpose: bool = False
    # spectra
    segment_len: int | None = None
    overlap: float = 0.5
    u_inf: float | None = None
    delta: float | None = None
    # synthesis
    seed: int = 0
    longrange: bool = True
    shrink: bool = False
    # baseline
    r0: float | None = None
    L0: float = math.inf
    l0: float = 0.0
    n: int = 128
    dx: float | None = None
    velocity: float | None = None
    dt: float | None = None
    steps: int | None = None
    wavelength: float = 532e-9
    subharmonics: int = 6

    def as_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(out["L0"]):
            out["L0"] = "inf"
        return out

    def parsed_order(self) -> int | str:
        if str(self.order).lower() == "auto":
            return "auto"
        try:
            p = int(self.order)
        except ValueError:
            raise ValidationError(f"order must be an integer or 'auto', got {self.order!r}") from None
        if p < 1:
            raise ValidationError(f"order must be >= 1, got {p}")
        return p

    def validate(self) -> None:
        if not 0 < self.energy_threshold <= 1:
            raise ValidationError(f"energy_threshold must lie in (0, 1], got {self.energy_threshold}")
        self.parsed_order()
        if self.k_modes is not None and self.k_modes < 0:
            raise ValidationError(f"k_modes must be >= 0, got {self.k_modes}")
        if self.segment_len is not None and self.segment_len < 8:
            raise ValidationError(f"segment_len must be >= 8, got {self.segment_len}")
        if not 0 <= self.overlap < 1:
            raise ValidationError(f"overlap must lie in [0, 1), got {self.overlap}")
        if (self.u_inf is None) != (self.delta is None):
            raise ValidationError("u_inf and delta must be given together")
        for name in ("u_inf", "delta", "r0", "dx", "dt"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"{name} must be positive, got {value}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.steps is not None and self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.subharmonics < 0:
            raise ValidationError("subharmonics must be >= 0")


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _coerce(name: str, raw: str, annotation: str):
    text = raw.strip()
    if text.lower() in ("none", "") and "None" in annotation:
        return None
    try:
        if annotation.startswith("bool"):
            return _BOOL[text.lower()]
        if annotation.startswith("int"):
            return int(text)
        if annotation.startswith("float"):
            return float(text)
    except (KeyError, ValueError):
        raise ValidationError(f"config key {name!r}: cannot parse {raw!r} as {annotation}") from None
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    known = {f.name: str(f.type) for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, raw = line.split(sep, 1)
                break
        else:
            raise FormatError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip().replace("-", "_")
        if key not in known:
            raise ValidationError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw, known[key])
    return values


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config_text(text, str(path))


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults <- config file <- flags (``None`` flag values mean "not given")."""
    cfg = RunConfig()
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None and source is overrides:
                continue
            if not hasattr(cfg, key):
                raise ValidationError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    cfg.order = str(cfg.order)
    cfg.validate()
    return cfg
