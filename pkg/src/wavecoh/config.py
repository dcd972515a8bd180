"""Analysis configuration: defaults, flat JSON documents and overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .coherence import SmoothingSpec
from .cwt import WaveletSpec, build_scale_grid
from .errors import ConfigError

__all__ = ["AnalysisConfig", "parse_config"]

TRANSFORMS = ("quantile", "none")
FILLS = ("none", "forward")
THRESHOLD_MODES = ("per_scale", "per_cell")
LEAD_CONVENTIONS = ("paper_downleads", "math_angle")
IMAGE_FORMATS = ("svg", "png")


@dataclass(frozen=True)
class AnalysisConfig:
    """Every tunable of an analysis run. Times are in days (``dt = 1``)."""

    omega0: float = 6.0
    s0: float = 2.0
    dj: float = 1 / 12
    max_period_fraction: float = 1.0
    detrend: bool = False
    time_smoothing: float = 1.0
    scale_smoothing: float = 0.6
    nsims: int = 300
    seed: int = 20110914
    sig_level: float = 0.95
    threshold_mode: str = "per_scale"
    workers: int = 1
    transform: str = "quantile"
    fill: str = "none"
    overlap_window: int = 30
    output_dir: str = "wavecoh-out"
    color_map: str = "jet"
    lead_convention: str = "paper_downleads"
    arrow_min_coherence: float = 0.5
    image_format: str = "svg"

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(key, f"{msg}, got {getattr(self, key)!r}")

        need(self.omega0 >= 5, "omega0", "must be >= 5")
        need(self.s0 >= 1, "s0", "must be >= dt = 1 day")
        need(0 < self.dj <= 1, "dj", "must lie in (0, 1]")
        need(0 < self.max_period_fraction <= 1, "max_period_fraction", "must lie in (0, 1]")
        need(self.time_smoothing > 0, "time_smoothing", "must be positive")
        need(self.scale_smoothing > 0, "scale_smoothing", "must be positive")
        need(isinstance(self.nsims, int) and self.nsims >= 100, "nsims", "must be an integer >= 100")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be a nonnegative integer")
        need(0.5 <= self.sig_level < 1, "sig_level", "must lie in [0.5, 1)")
        need(self.threshold_mode in THRESHOLD_MODES, "threshold_mode", f"must be one of {THRESHOLD_MODES}")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be an integer >= 1")
        need(self.transform in TRANSFORMS, "transform", f"must be one of {TRANSFORMS}")
        need(self.fill in FILLS, "fill", f"must be one of {FILLS}")
        need(isinstance(self.overlap_window, int) and self.overlap_window >= 1, "overlap_window", "must be a positive integer")
        need(self.lead_convention in LEAD_CONVENTIONS, "lead_convention", f"must be one of {LEAD_CONVENTIONS}")
        need(0 <= self.arrow_min_coherence <= 1, "arrow_min_coherence", "must lie in [0, 1]")
        need(self.image_format in IMAGE_FORMATS, "image_format", f"must be one of {IMAGE_FORMATS}")

    # derived component specs

    @property
    def wavelet(self) -> WaveletSpec:
        return WaveletSpec(self.omega0)

    @property
    def smoothing(self) -> SmoothingSpec:
        return SmoothingSpec(self.time_smoothing, self.scale_smoothing)

    def scale_grid(self, n):
        return build_scale_grid(n, 1.0, self.s0, self.dj, self.max_period_fraction, self.omega0)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "AnalysisConfig":
        return _build({**self.to_dict(), **changes})


_FIELDS = {f.name: f for f in dataclasses.fields(AnalysisConfig)}


def _coerce(key, value):
    kind = type(_FIELDS[key].default)
    try:
        if kind is bool:
            if isinstance(value, str):
                if value.lower() in ("1", "true", "yes", "on"):
                    return True
                if value.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if kind is float:
            if isinstance(value, str):
                return float(Fraction(value))
            return float(value)
        return str(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(key, f"cannot interpret {value!r} as {kind.__name__}") from None


def _build(values: dict) -> AnalysisConfig:
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    return AnalysisConfig(**{k: _coerce(k, v) for k, v in values.items()})


def parse_config(path=None, overrides=None) -> AnalysisConfig:
    """Resolve a configuration from an optional JSON file plus overrides.

    The file is a flat JSON object whose keys are :class:`AnalysisConfig`
    field names. Overrides (e.g. parsed command-line flags) win over the
    file; ``None`` override values are ignored. Unknown keys are errors.
    """
    values = {}
    if path is not None:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8") or "{}")
        except FileNotFoundError:
            raise ConfigError("config", f"no such file: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError("config", f"{path}: expected a JSON object")
        values.update(doc)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return _build(values)
