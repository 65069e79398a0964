"""Pipeline configuration: defaults, TOML loading, validation."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .correct import CorrectionParams
from .errors import ConfigError
from .heatmap import PredictorConfig
from .roi import RoiParams

DEFAULT_THETAS = (0.005, 0.01)


@dataclass(frozen=True)
class CornerConfig:
    n: int = 512
    threshold: int = 20

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"corner n must be >= 1, got {self.n}")
        if not 1 <= self.threshold <= 255:
            raise ValueError(f"threshold must be in [1, 255], got {self.threshold}")


@dataclass(frozen=True)
class PipelineConfig:
    corner: CornerConfig = field(default_factory=CornerConfig)
    roi: RoiParams = field(default_factory=RoiParams)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    correction: CorrectionParams = field(default_factory=CorrectionParams)
    thetas: tuple[float, ...] = DEFAULT_THETAS


_SECTION_TYPES = {
    "corner": CornerConfig,
    "roi": RoiParams,
    "predictor": PredictorConfig,
    "correction": CorrectionParams,
}

# TOML spellings that differ from the dataclass field names.
_KEY_ALIASES = {
    "roi": {"lambda": "lam", "t": "tau"},
    "corner": {"t": "threshold"},
}


def _build_section(name: str, cls, data: dict):
    aliases = _KEY_ALIASES.get(name, {})
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        key = aliases.get(key, key)
        if key not in known:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        if key == "heatmap_dir":
            value = Path(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a TOML config; every section and key is optional."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    sections = {}
    for name, cls in _SECTION_TYPES.items():
        raw = data.pop(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"[{name}] must be a table")
        sections[name] = _build_section(name, cls, raw)

    eval_data = data.pop("eval", {})
    thetas = tuple(eval_data.pop("thetas", DEFAULT_THETAS))
    if eval_data:
        raise ConfigError(f"[eval] unknown keys {sorted(eval_data)}")
    if not thetas or any(not t > 0 for t in thetas):
        raise ConfigError("[eval] thetas must be positive")
    if data:
        raise ConfigError(f"unknown sections {sorted(data)}")
    return PipelineConfig(thetas=thetas, **sections)
