"""Pipeline configuration: defaults, key = value files and range checks."""
from dataclasses import dataclass, fields, replace
import math
import os

from .errors import InvalidArgument

CONFIG_ENV = "FRAGSCAN_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    cm_per_pixel: float = 0.125
    window: int = 512
    stride: int = 256
    se_half: int = 4
    se_shape: str = "disk"
    max_radius: int = 10
    step_connectivity: int = 8
    seed_connectivity: int = 4
    min_diameter_px: float = 10.0
    count_bin_cm: float = 0.2
    volume_bin_cm: float = 0.8
    small_threshold_cm: float = 5.0
    large_threshold_cm: float = 20.0
    section_map: str = ""
    include_border_fragments: bool = True
    carafe_sigma: int = 2
    carafe_k_up: int = 5
    carafe_k_encoder: int = 3
    carafe_c_m: int = 64
    carafe_normalizer: str = "sigmoid"
    eca_k: int = 3

    def validate(self):
        def need(ok, msg):
            if not ok:
                raise InvalidArgument(f"config: {msg}")

        need(math.isfinite(self.cm_per_pixel) and self.cm_per_pixel > 0, "cm_per_pixel must be > 0")
        need(self.window >= 1 and 1 <= self.stride <= self.window, "need 1 <= stride <= window")
        need(self.se_half >= 0, "se_half must be >= 0")
        need(self.se_shape in ("disk", "square"), "se_shape must be disk or square")
        need(self.max_radius >= 0, "max_radius must be >= 0")
        need(self.step_connectivity in (4, 8), "step_connectivity must be 4 or 8")
        need(self.seed_connectivity in (4, 8), "seed_connectivity must be 4 or 8")
        need(self.min_diameter_px >= 0, "min_diameter_px must be >= 0")
        need(self.count_bin_cm > 0 and self.volume_bin_cm > 0, "bin widths must be > 0")
        need(self.small_threshold_cm >= 0 and self.large_threshold_cm >= 0, "thresholds must be >= 0")
        need(self.carafe_sigma >= 1 and self.carafe_c_m >= 1, "carafe sigma and c_m must be >= 1")
        need(self.carafe_k_up % 2 == 1 and self.carafe_k_encoder % 2 == 1, "carafe kernel sizes must be odd")
        need(self.carafe_normalizer in ("sigmoid", "softmax"), "carafe_normalizer must be sigmoid or softmax")
        need(self.eca_k % 2 == 1, "eca_k must be odd")
        return self


_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key, text):
    kind = _TYPES[key]
    text = text.strip()
    try:
        if kind in (bool, "bool"):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind in (int, "int"):
            return int(text)
        if kind in (float, "float"):
            return float(text)
    except ValueError:
        raise InvalidArgument(f"config: bad value {text!r} for {key}") from None
    return text


def parse_config_text(text, base=None):
    cfg = base or PipelineConfig()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise InvalidArgument(f"config line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, value)
    return replace(cfg, **updates)


def load_config(path=None, overrides=None):
    """Defaults <- config file (explicit path or $FRAGSCAN_CONFIG) <- overrides."""
    cfg = PipelineConfig()
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        try:
            with open(path) as fh:
                cfg = parse_config_text(fh.read(), cfg)
        except OSError as exc:
            raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()
