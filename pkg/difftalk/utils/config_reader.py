"""
Configuration Reader
Loads run settings from config.yaml and turns them into a validated RunConfig

- YAML sections: paths, data, schedule, completion, synthesis, sample, logging, plus top-level seed
- Missing keys fall back to built-in defaults (deep merge)
- Unknown or invalid keys raise ConfigError naming the dotted key
"""
import copy
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

import yaml

from difftalk.completion.model import CompletionConfig
from difftalk.exceptions import ConfigError
from difftalk.synthesis.config import CONDITIONS, SynthesisConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = os.path.join("config", "config.yaml")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class PathsConfig:
    dataset: str = "runs/data"
    checkpoints: str = "runs/checkpoints"
    outputs: str = "runs/samples"


@dataclass(frozen=True)
class DataConfig:
    n_frames: int = 1200
    test_frames: int = 200
    image_size: int = 64
    audio_noise: float = 0.01


@dataclass(frozen=True)
class ScheduleConfig:
    T: int = 50
    beta_start: float = 1e-4
    beta_end: float = 0.02


@dataclass(frozen=True)
class SampleConfig:
    n_frames: int = 50
    overlays: bool = True


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one command invocation"""
    seed: int = 0
    paths: PathsConfig = PathsConfig()
    data: DataConfig = DataConfig()
    schedule: ScheduleConfig = ScheduleConfig()
    completion: CompletionConfig = CompletionConfig()
    synthesis: SynthesisConfig = SynthesisConfig()
    sample: SampleConfig = SampleConfig()
    logging: LoggingConfig = LoggingConfig()

    def to_dict(self) -> Dict[str, Any]:
        """Plain nested dict; stage seeds are dropped since the top-level seed drives them"""
        data = asdict(self)
        data["completion"].pop("seed", None)
        data["synthesis"].pop("seed", None)
        return data


SECTIONS = {
    "paths": PathsConfig,
    "data": DataConfig,
    "schedule": ScheduleConfig,
    "completion": CompletionConfig,
    "synthesis": SynthesisConfig,
    "sample": SampleConfig,
    "logging": LoggingConfig,
}


def default_config() -> Dict[str, Any]:
    return RunConfig().to_dict()


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigReader:
    """Read configuration from a YAML file merged over the built-in defaults"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = self._resolve(config_file or DEFAULT_CONFIG_FILE)
        self.config = deep_merge(default_config(), self._load_config())

    @staticmethod
    def _resolve(config_file: str) -> str:
        """Working directory first, then the project root"""
        if os.path.isabs(config_file) or os.path.isfile(config_file):
            return config_file
        current_dir = os.path.dirname(os.path.abspath(__file__))
        project_root = os.path.dirname(os.path.dirname(current_dir))
        return os.path.join(project_root, config_file)

    def _load_config(self) -> Dict[str, Any]:
        if not os.path.isfile(self.config_file):
            raise ConfigError("<file>", f"configuration file not found: {self.config_file}")
        with open(self.config_file, "r") as file:
            try:
                loaded = yaml.safe_load(file) or {}
            except yaml.YAMLError as exc:
                raise ConfigError("<file>", f"{self.config_file} is not valid YAML: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("<file>", f"{self.config_file} must hold a mapping of sections")
        logger.debug(f"Loaded configuration from {self.config_file}")
        return loaded

    def get(self, section: str, key: Optional[str] = None) -> Any:
        """
        Get configuration value

        Examples:
            config.get('completion', 'lr')
            config.get('seed')
        """
        if key:
            return (self.config.get(section) or {}).get(key)
        return self.config.get(section)

    def run_config(self, seed: Optional[int] = None, ablate_am: Optional[bool] = None) -> RunConfig:
        """
        Validated, frozen configuration with command-line overrides applied

        Args:
            seed: Replaces the file's top-level seed
            ablate_am: Replaces completion.ablate_am

        Raises:
            ConfigError: Unknown section or key, wrong type, or out-of-range value
        """
        raw = copy.deepcopy(self.config)
        if seed is not None:
            raw["seed"] = seed
        if ablate_am is not None:
            raw["completion"]["ablate_am"] = ablate_am
        return build_run_config(raw)


def _coerce(key: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return value


def _section(name: str, cls, values: Any, seed: int):
    if not isinstance(values, dict):
        raise ConfigError(name, "expected a mapping")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known or key == "seed":
            raise ConfigError(f"{name}.{key}", "unknown key")
        kwargs[key] = _coerce(f"{name}.{key}", value, known[key].default)
    if "seed" in known:
        kwargs["seed"] = seed
    return cls(**kwargs)


def _positive(key: str, value: float) -> None:
    if not value > 0:
        raise ConfigError(key, f"must be > 0, got {value}")


def _at_least(key: str, value: int, low: int) -> None:
    if value < low:
        raise ConfigError(key, f"must be ≥ {low}, got {value}")


def validate(cfg: RunConfig) -> RunConfig:
    for key in ("completion.lr", "synthesis.ae_lr", "synthesis.base_lr", "synthesis.synth_lr"):
        section, name = key.split(".")
        _positive(key, getattr(getattr(cfg, section), name))
    for key in ("completion.epochs", "synthesis.ae_epochs", "synthesis.base_epochs", "synthesis.synth_epochs",
                "completion.batch_size", "synthesis.batch_size", "completion.d_model", "completion.n_layers",
                "completion.n_heads", "completion.n_audio_tokens", "completion.min_frames", "synthesis.latent_channels",
                "synthesis.base_channels", "synthesis.base_patience", "schedule.T", "data.n_frames",
                "sample.n_frames"):
        section, name = key.split(".")
        _at_least(key, getattr(getattr(cfg, section), name), 1)

    if cfg.completion.d_model % cfg.completion.n_heads:
        raise ConfigError("completion.n_heads", f"must divide d_model={cfg.completion.d_model}")
    _positive("completion.offset_bound", cfg.completion.offset_bound)
    _positive("synthesis.ae_target_mse", cfg.synthesis.ae_target_mse)
    if cfg.synthesis.condition not in CONDITIONS:
        raise ConfigError("synthesis.condition", f"must be one of {CONDITIONS}, got {cfg.synthesis.condition!r}")

    s = cfg.schedule
    if not 0.0 < s.beta_start:
        raise ConfigError("schedule.beta_start", f"must be > 0, got {s.beta_start}")
    if not s.beta_start <= s.beta_end < 1.0:
        raise ConfigError("schedule.beta_end", f"must satisfy beta_start ≤ beta_end < 1, got {s.beta_end}")

    d = cfg.data
    if d.image_size < 16 or d.image_size % 8:
        raise ConfigError("data.image_size", f"must be a multiple of 8 and ≥ 16, got {d.image_size}")
    if not 0 <= d.test_frames < d.n_frames:
        raise ConfigError("data.test_frames", f"must lie in [0, n_frames={d.n_frames}), got {d.test_frames}")
    if d.audio_noise < 0:
        raise ConfigError("data.audio_noise", f"must be ≥ 0, got {d.audio_noise}")

    for name in ("dataset", "checkpoints", "outputs"):
        if not getattr(cfg.paths, name):
            raise ConfigError(f"paths.{name}", "must not be empty")
    if cfg.logging.level.upper() not in LOG_LEVELS:
        raise ConfigError("logging.level", f"must be one of {LOG_LEVELS}, got {cfg.logging.level!r}")
    return cfg


def build_run_config(raw: Dict[str, Any]) -> RunConfig:
    """
    Build and validate a RunConfig from a (merged) plain dict

    Raises:
        ConfigError: Unknown section or key, wrong type, or out-of-range value
    """
    unknown = sorted(set(raw) - set(SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(unknown[0], "unknown section")
    seed = _coerce("seed", raw.get("seed", 0), 0)
    if seed < 0:
        raise ConfigError("seed", f"must be ≥ 0, got {seed}")
    sections = {name: _section(name, cls, raw.get(name) or {}, seed) for name, cls in SECTIONS.items()}
    return validate(RunConfig(seed=seed, **sections))


def parse_frame_range(text: str) -> Tuple[int, int]:
    """
    Parse `A..B` (inclusive)

    Raises:
        ConfigError: Malformed or empty range
    """
    parts = text.split("..")
    if len(parts) != 2:
        raise ConfigError("--frames", f"expected A..B, got {text!r}")
    try:
        start, end = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError("--frames", f"expected integers in A..B, got {text!r}") from exc
    if start < 0 or end < start:
        raise ConfigError("--frames", f"need 0 ≤ A ≤ B, got {text!r}")
    return start, end


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return replace(cfg, seed=seed, completion=replace(cfg.completion, seed=seed),
                   synthesis=replace(cfg.synthesis, seed=seed))
