"""Flat `key = value` config loading and validation, with command line overrides."""

import logging
import re
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..data.types import Modality
from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

PATH_KEYS = ("train_path", "valid_path", "test_path", "image_features", "text_features", "output_dir", "log_file")
"""Keys holding file system paths. Relative values in a config file resolve against the file's directory."""

_EXPONENT_FLOAT = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)[eE][-+]?\d+$")


class Scenario(str, Enum):
    """A complex-environment scenario applied to a dataset."""

    NONE = "none"
    NOISE = "noise"
    MISSING = "missing"
    SPARSE = "sparse"


class TiePolicy(str, Enum):
    """How candidates scoring exactly as high as the gold answer are ranked."""

    STRICT = "strict"
    MID = "mid"


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class Config(BaseModel):
    """Every setting of a training or evaluation run. Keys match the config file keys."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True, validate_assignment=True)

    # data
    train_path: Optional[str] = Field(None, description="Training triples file.")
    valid_path: Optional[str] = Field(None, description="Validation triples file.")
    test_path: Optional[str] = Field(None, description="Test triples file.")
    image_features: Optional[str] = Field(None, description="Image feature file (text or MMKF binary).")
    text_features: Optional[str] = Field(None, description="Text feature file (text or MMKF binary).")
    standardize_features: bool = Field(True, description="z-score feature dimensions at load time.")
    output_dir: str = Field("runs", description="Directory for checkpoints, traces and reports.")
    log_file: Optional[str] = Field(None, description="Optional file mirroring the package log.")

    # model
    dim: int = Field(250, ge=1, description="Entity embedding dimension d.")
    relation_dim: Optional[int] = Field(None, ge=1, description="Relation embedding dimension (defaults to dim).")
    hidden_dim: Optional[int] = Field(None, ge=1, description="Hidden width of every two-layer MLP (defaults to dim).")
    experts: int = Field(3, ge=1, description="Number K of experts per modality.")
    modalities: List[Modality] = Field(
        default_factory=lambda: [Modality.STRUCTURE, Modality.IMAGE, Modality.TEXT],
        description="Enabled base modalities.",
    )
    init_std: float = Field(0.02, gt=0, description="Std of Gaussian-initialised embeddings.")
    noise_floor: float = Field(1e-6, ge=0, description="Gating noise std at or below which no noise is added.")
    variance_floor: float = Field(1e-4, gt=0, description="Lower bound of the variational network's variance.")
    per_modality_temperature: bool = Field(False, description="One gate temperature per relation and modality.")
    project_structure: bool = Field(True, description="Apply the joint-fusion projection to the structure modality.")

    # optimisation
    lambda_: float = Field(1e-4, alias="lambda", ge=0, description="Weight of the CLUB penalty.")
    lr: float = Field(1e-3, gt=0, description="Adam learning rate of the main model.")
    exid_lr: Optional[float] = Field(None, gt=0, description="Adam learning rate of the variational networks.")
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    batch_size: int = Field(1024, ge=1)
    epochs: int = Field(100, ge=0)
    seed: int = Field(0, ge=0)
    exid_steps: int = Field(1, ge=1, description="Variational network updates per main model update.")

    # ablations
    use_noise: bool = True
    use_relation_temperature: bool = True
    use_adaptive_fusion: bool = True
    use_joint_training: bool = True
    use_exid: bool = True
    club_normalize_negatives: bool = Field(True, description="Average (not sum) the CLUB negative term.")

    # corruption
    corrupt_scenario: Scenario = Scenario.NONE
    corrupt_ratio: float = Field(0.0, ge=0, le=1)
    corrupt_scale: float = Field(1.0, ge=0)
    corrupt_modalities: List[Modality] = Field(default_factory=lambda: [Modality.IMAGE, Modality.TEXT])
    corrupt_seed: int = Field(0, ge=0)

    # evaluation
    tie_policy: TiePolicy = TiePolicy.STRICT
    eval_every: int = Field(1, ge=0, description="Evaluate the valid split every N epochs (0 disables).")

    # self-check
    gradcheck_eps: float = Field(1e-5, gt=0)
    gradcheck_samples: int = Field(100, ge=1)
    gradcheck_tolerance: float = Field(1e-3, gt=0)

    debug: bool = False

    split_modality_lists = field_validator("modalities", "corrupt_modalities", mode="before")(_split_list)

    @field_validator("modalities")
    @classmethod
    def check_modalities(cls, value: List[Modality]) -> List[Modality]:
        if not value:
            raise ValueError("at least one modality must be enabled")
        if Modality.JOINT in value:
            raise ValueError("the joint modality is derived, enable it with use_joint_training")
        return sorted(set(value), key=Modality.order)

    @model_validator(mode="after")
    def check_scenario(self) -> "Config":
        if self.corrupt_scenario == Scenario.SPARSE and self.corrupt_ratio >= 1:
            raise ValueError("corrupt_ratio must be below 1 for the sparse scenario")
        return self

    @property
    def resolved_relation_dim(self) -> int:
        """The relation embedding dimension d_r."""
        return self.relation_dim if self.relation_dim is not None else self.dim

    @property
    def resolved_hidden_dim(self) -> int:
        """The hidden width of the two-layer networks."""
        return self.hidden_dim if self.hidden_dim is not None else self.dim

    @property
    def resolved_exid_lr(self) -> float:
        """The learning rate of the variational networks."""
        return self.exid_lr if self.exid_lr is not None else self.lr

    @property
    def joint_enabled(self) -> bool:
        """Whether the joint modality is trained and scored."""
        return self.use_joint_training and len(self.modalities) >= 2

    def updated(self, **changes: Any) -> "Config":
        """A validated copy with some keys changed.

        Args:
            **changes (Any): Keys (or aliases) and their new values

        Raises:
            ConfigError: Raised if the result is not a valid config

        Returns:
            Config: The new config
        """
        data = self.model_dump(by_alias=True)
        data.update(changes)
        return validate_config(data)


def parse_value(text: str) -> Any:
    """Type the right-hand side of a `key = value` line.

    Args:
        text (str): The raw value

    Returns:
        Any: A bool, int, float or string (or `None` for an empty value)
    """
    text = text.strip()
    if not text:
        return None
    if _EXPONENT_FLOAT.match(text):
        return float(text)
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def read_config_file(config_file: str) -> Dict[str, Any]:
    """Read a config file into a flat dictionary.

    Args:
        config_file (str): A `key = value` file, or a `.yml`/`.yaml` file holding a flat mapping

    Raises:
        ConfigError: Raised if the file is missing or a line is malformed

    Returns:
        Dict[str, Any]: The raw (not yet validated) settings
    """
    path = Path(config_file)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read config file {config_file}: {e}") from e

    settings: Dict[str, Any] = {}
    if path.suffix in (".yml", ".yaml"):
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Error in configuration file {config_file}: {e}") from e
        if not isinstance(loaded, dict) or any(isinstance(v, dict) for v in loaded.values()):
            raise ConfigError(f"{config_file} must hold a flat mapping of keys to values")
        settings.update(loaded)
    else:
        for lineno, raw_line in enumerate(text.splitlines(), start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"{config_file}:{lineno}: expected 'key = value', got {raw_line!r}")
            settings[key.strip()] = parse_value(value)

    base = path.resolve().parent
    for key in PATH_KEYS:
        value = settings.get(key)
        if isinstance(value, str) and not Path(value).is_absolute():
            settings[key] = str(base / value)

    logger.debug(f"Loaded {len(settings)} settings from {config_file}")
    return settings


def parse_overrides(arguments: Sequence[str]) -> Dict[str, Any]:
    """Turn `--key value` pairs into settings.

    Args:
        arguments (Sequence[str]): The leftover command line arguments

    Raises:
        ConfigError: Raised if the arguments are not `--key value` pairs

    Returns:
        Dict[str, Any]: The override settings, dashes in keys turned into underscores
    """
    overrides: Dict[str, Any] = {}
    items = list(arguments)
    index = 0
    while index < len(items):
        flag = items[index]
        if not flag.startswith("--") or len(flag) <= 2:
            raise ConfigError(f"Unexpected argument {flag!r}, overrides take the form --key value")
        key, sep, value = flag[2:].partition("=")
        key = key.replace("-", "_")
        if sep:
            index += 1
        elif index + 1 < len(items):
            value = items[index + 1]
            index += 2
        else:
            raise ConfigError(f"Missing value for override {flag!r}")
        overrides[key] = parse_value(value)
    return overrides


def validate_config(settings: Mapping[str, Any]) -> Config:
    """Validate raw settings into a `Config`.

    Args:
        settings (Mapping[str, Any]): The raw settings

    Raises:
        ConfigError: Raised naming the offending key(s) if validation fails

    Returns:
        Config: The validated config
    """
    try:
        return Config.model_validate(dict(settings))
    except ValidationError as e:
        problems = []
        for error in e.errors():
            key = ".".join(str(part) for part in error["loc"]) or "<config>"
            if error["type"] == "extra_forbidden":
                problems.append(f"unknown config key '{key}'")
            else:
                problems.append(f"'{key}': {error['msg']}")
        raise ConfigError("Invalid configuration: " + "; ".join(problems)) from e


def load_config(config_file: Optional[str], overrides: Optional[Mapping[str, Any]] = None) -> Config:
    """Load a config file and apply overrides on top of it.

    Args:
        config_file (Optional[str]): The config file, or `None` to start from the defaults
        overrides (Optional[Mapping[str, Any]], optional): Settings that win over the file. Defaults to None.

    Returns:
        Config: The validated config
    """
    settings = read_config_file(config_file) if config_file else {}
    if overrides:
        settings.update(overrides)
    return validate_config(settings)


def format_value(value: Any) -> str:
    """The `key = value` right-hand side of a setting."""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(item) for item in value)
    return str(value)


def write_config(path: str, config: Config) -> None:
    """Write a config as a `key = value` file that `load_config` reads back into an equal config.

    Args:
        path (str): The destination
        config (Config): The config to write; unset optional keys are left out
    """
    settings = config.model_dump(by_alias=True, exclude_none=True)
    lines = [f"{key} = {format_value(value)}" for key, value in settings.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
