"""JSON run configuration.

The file mirrors the AnchorConfig / NmsConfig / LossWeights dataclasses
plus a few pipeline scalars. Unknown keys anywhere in the tree are
rejected so typos fail loudly instead of silently using defaults.
"""

from dataclasses import dataclass, field, fields
import json

from .errors import ConfigError
from .geometry import AnchorConfig
from .losses import LossWeights
from .nms import NmsConfig

RESCORE_MODES = ("off", "oracle")


@dataclass
class PipelineConfig:
    anchors: AnchorConfig = field(default_factory=lambda: AnchorConfig(input_size=550))
    nms: NmsConfig = field(default_factory=NmsConfig)
    loss_weights: LossWeights = field(default_factory=LossWeights)
    rescore: str = "off"
    crop_pad_px: int = 1
    display_score_threshold: float = 0.3

    def __post_init__(self):
        if self.rescore not in RESCORE_MODES:
            raise ConfigError(f"rescore must be one of {RESCORE_MODES}, got {self.rescore!r}")
        if self.crop_pad_px < 0:
            raise ConfigError(f"crop_pad_px must be >= 0, got {self.crop_pad_px}")
        if not 0.0 <= self.display_score_threshold <= 1.0:
            raise ConfigError(
                f"display_score_threshold must be in [0, 1], got {self.display_score_threshold}"
            )


def _build_section(cls, data: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")
    kwargs = {
        k: tuple(v) if isinstance(v, list) else v
        for k, v in data.items()
    }
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def parse_config(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    sections = {"anchors": AnchorConfig, "nms": NmsConfig, "loss_weights": LossWeights}
    scalars = {"rescore", "crop_pad_px", "display_score_threshold"}
    unknown = set(data) - set(sections) - scalars
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in config root")
    kwargs = {}
    for name, cls in sections.items():
        if name in data:
            section = data[name]
            if not isinstance(section, dict):
                raise ConfigError(f"config section {name!r} must be an object")
            kwargs[name] = _build_section(cls, section, f"config section {name!r}")
    for name in scalars & set(data):
        kwargs[name] = data[name]
    try:
        return PipelineConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def anchor_config_from_dict(data: dict, where: str = "anchors") -> AnchorConfig:
    """Shared helper for manifests that embed an anchor section."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    return _build_section(AnchorConfig, data, where)
