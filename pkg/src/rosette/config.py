"""Generation configuration: the single source of randomness control.

Config files are flat, human-editable text: one `key = value` per line,
`#` starts a comment. Interval-valued keys take two numbers separated by
whitespace or a comma, e.g. `scale_range_x = 0.7 1.3`. Omitted keys keep
their defaults. A loaded config is immutable and validated; every
violation is reported with its field name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .textures import TextureMode

TAU = 2.0 * math.pi

_RANGE_FIELDS = {
    "yaw_range", "pitch_range", "roll_range",
    "scale_range_x", "scale_range_y", "scale_range_z",
    "bend_range", "augment_zoom_range", "augment_exposure_range",
}
_INT_FIELDS = {"dataset_size", "image_width", "image_height",
               "leaf_count_min", "leaf_count_max", "global_seed"}
_BOOL_FIELDS = {"include_zero_area_annotations"}
_STR_FIELDS = {"texture_bank_path", "background_bank_path", "template_path", "shading"}

SHADING_MODELS = ("oren_nayar", "lambertian")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    """Every distribution parameter, texture policy and render setting."""

    dataset_size: int = 10_000
    image_width: int = 512
    image_height: int = 512

    # leaves per plant: truncated normal, rounded to nearest integer
    leaf_count_mean: float = 9.0
    leaf_count_stddev: float = 2.5
    leaf_count_min: int = 1
    leaf_count_max: int = 25

    # per-leaf pose distributions (radians)
    yaw_range: tuple[float, float] = (0.0, TAU)
    pitch_range: tuple[float, float] = (-math.pi / 4, math.pi / 4)
    roll_range: tuple[float, float] = (0.0, math.pi / 4)

    # per-axis scale multipliers and midrib bend (radians of total arc)
    scale_range_x: tuple[float, float] = (0.7, 1.3)
    scale_range_y: tuple[float, float] = (0.7, 1.3)
    scale_range_z: tuple[float, float] = (0.7, 1.3)
    bend_range: tuple[float, float] = (0.0, math.pi / 6)

    # rosette layout: anchors on a sphere, most likely at the equator
    anchor_polar_sigma: float = 0.08
    anchor_polar_clamp: float = 0.25
    sphere_radius_factor: float = 0.15   # x template blade length

    texture_mode: TextureMode = TextureMode.PER_LEAF
    texture_bank_path: str = ""
    background_bank_path: str = ""
    template_path: str = ""              # empty = bundled inspiration leaf

    blur_sigma: float = 1.0              # pixels, applied before compositing
    camera_fov: float = 0.6              # vertical field of view, radians
    camera_jitter: float = 0.15          # 0 = exact nadir, 1 = full 15-degree budget
    light_position_range: float = math.pi / 3   # cone half-angle about vertical
    light_distance_factor: float = 4.0   # x plant bounding radius

    shading: str = "oren_nayar"
    oren_nayar_sigma: float = 0.3

    augment_flip_prob: float = 0.5
    augment_zoom_range: tuple[float, float] = (0.8, 1.2)
    augment_exposure_range: tuple[float, float] = (0.7, 1.3)

    include_zero_area_annotations: bool = False

    global_seed: int = 0

    def validate(self) -> None:
        errs = []

        def need(cond: bool, field: str, msg: str):
            if not cond:
                errs.append(f"{field}: {msg}")

        need(self.dataset_size >= 1, "dataset_size", "must be >= 1")
        need(self.image_width >= 8, "image_width", "must be >= 8")
        need(self.image_height >= 8, "image_height", "must be >= 8")
        need(self.leaf_count_stddev >= 0, "leaf_count_stddev", "must be >= 0")
        need(self.leaf_count_min >= 1, "leaf_count_min", "must be >= 1")
        need(self.leaf_count_min <= self.leaf_count_max,
             "leaf_count_max", "must be >= leaf_count_min")
        need(self.leaf_count_min <= self.leaf_count_mean <= self.leaf_count_max,
             "leaf_count_mean", "must lie within [leaf_count_min, leaf_count_max]")

        for name in ("yaw_range", "pitch_range", "roll_range", "bend_range",
                     "scale_range_x", "scale_range_y", "scale_range_z",
                     "augment_zoom_range", "augment_exposure_range"):
            lo, hi = getattr(self, name)
            need(lo <= hi, name, f"bounds out of order: {lo} > {hi}")
        # custom pose ranges must stay inside the supported intervals
        need(0.0 <= self.yaw_range[0] and self.yaw_range[1] <= TAU,
             "yaw_range", "must be a subset of [0, 2*pi)")
        for name, cap in (("pitch_range", math.pi / 2), ("roll_range", math.pi / 2)):
            lo, hi = getattr(self, name)
            need(-cap <= lo and hi <= cap, name, f"must be a subset of [-pi/2, pi/2]")
        for name in ("scale_range_x", "scale_range_y", "scale_range_z",
                     "augment_zoom_range"):
            need(getattr(self, name)[0] > 0, name, "must be strictly positive")
        need(self.augment_exposure_range[0] >= 0, "augment_exposure_range", "must be >= 0")
        need(abs(self.bend_range[0]) <= math.pi and abs(self.bend_range[1]) <= math.pi,
             "bend_range", "total arc must stay within [-pi, pi]")

        need(self.anchor_polar_sigma >= 0, "anchor_polar_sigma", "must be >= 0")
        need(0 <= self.anchor_polar_clamp <= math.pi / 4,
             "anchor_polar_clamp", "must lie in [0, pi/4]")
        need(self.sphere_radius_factor > 0, "sphere_radius_factor", "must be > 0")
        need(self.blur_sigma >= 0, "blur_sigma", "must be >= 0")
        need(0 < self.camera_fov < math.pi, "camera_fov", "must lie in (0, pi)")
        need(0 <= self.camera_jitter <= 1, "camera_jitter", "must lie in [0, 1]")
        need(0 <= self.light_position_range <= math.pi / 2,
             "light_position_range", "must lie in [0, pi/2]")
        need(self.light_distance_factor > 0, "light_distance_factor", "must be > 0")
        need(self.shading in SHADING_MODELS, "shading",
             f"must be one of {SHADING_MODELS}")
        need(self.oren_nayar_sigma >= 0, "oren_nayar_sigma", "must be >= 0")
        need(0 <= self.augment_flip_prob <= 1, "augment_flip_prob", "must lie in [0, 1]")
        if errs:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errs))

    def with_overrides(self, **kwargs) -> "GenerationConfig":
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg


def _parse_pair(field: str, raw: str) -> tuple[float, float]:
    parts = raw.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"{field}: expected two numbers, got {raw!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{field}: cannot parse {raw!r} as numbers") from None


def _parse_bool(field: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{field}: cannot parse {raw!r} as a boolean")


def parse_config_text(text: str, source: str = "<string>") -> GenerationConfig:
    known = {f.name for f in fields(GenerationConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            if key in _RANGE_FIELDS:
                values[key] = _parse_pair(key, raw)
            elif key in _INT_FIELDS:
                values[key] = int(raw, 0)
            elif key in _BOOL_FIELDS:
                values[key] = _parse_bool(key, raw)
            elif key == "texture_mode":
                values[key] = TextureMode.from_name(raw)
            elif key in _STR_FIELDS:
                values[key] = raw
            else:
                values[key] = float(raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
    cfg = GenerationConfig(**values)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> GenerationConfig:
    """Parse and validate a config file, filling defaults for omitted keys."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, source=str(path))


def config_to_text(cfg: GenerationConfig) -> str:
    """Serialize a config so that parse_config_text round-trips it exactly."""
    lines = []
    for f in fields(GenerationConfig):
        value = getattr(cfg, f.name)
        if f.name in _RANGE_FIELDS:
            rendered = f"{value[0]!r} {value[1]!r}"
        elif isinstance(value, TextureMode):
            rendered = value.value
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def save_config(cfg: GenerationConfig, path: str | Path) -> None:
    Path(path).write_text(config_to_text(cfg))
