import os
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.exceptions import ConfigParseError

load_dotenv()

# Скорость света; с 3e8 длина волны на 2.4 ГГц ровно 0.125 м
SPEED_OF_LIGHT = 3.0e8

# Опубликованные числа параметров моделей
PUBLISHED_PARAMETER_COUNTS = {"mpnn": 2377, "air-mpnn": 1882, "air-mprnn": 2258}


class AppConfig(BaseModel):
    """Filesystem locations and log level, taken from the environment (.env supported)."""

    data_dir: Path = Field(default_factory=lambda: Path(os.getenv("AIRGNN_DATA_DIR", "data")))
    checkpoint_dir: Path = Field(default_factory=lambda: Path(os.getenv("AIRGNN_CHECKPOINT_DIR", "checkpoints")))
    results_dir: Path = Field(default_factory=lambda: Path(os.getenv("AIRGNN_RESULTS_DIR", "results")))
    log_level: str = Field(default_factory=lambda: os.getenv("AIRGNN_LOG_LEVEL", "INFO"))


class ChannelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_links: int = Field(20, ge=1)
    field_length: float = Field(500.0, gt=0)
    min_link_distance: float = Field(2.0, gt=0)
    max_link_distance: float = Field(65.0, gt=0)
    carrier_frequency: float = Field(2.4e9, gt=0)
    tx_height: float = Field(1.5, gt=0)
    rx_height: float = Field(1.5, gt=0)
    tx_antenna_gain_dbi: float = 2.5
    rx_antenna_gain_dbi: float = 2.5
    bandwidth: float = Field(5e6, gt=0)
    noise_psd_dbm_hz: float = -169.0
    max_tx_power_dbm: float = 40.0
    frames: int = Field(10, ge=1)
    # None -> rho ~ U[0, 1) per layout, otherwise fixed
    rho: float | None = Field(None, ge=0.0, lt=1.0)
    train_layouts: int = Field(2000, ge=1)
    test_layouts: int = Field(500, ge=1)
    seed: int = 2023
    test_seed: int = 2024

    @model_validator(mode="after")
    def check_link_distances(self) -> "ChannelConfig":
        if not self.min_link_distance < self.max_link_distance < self.field_length:
            raise ValueError("need 0 < min_link_distance < max_link_distance < field_length")
        return self

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def max_tx_power_mw(self) -> float:
        return 10.0 ** (self.max_tx_power_dbm / 10.0)

    @property
    def antenna_gain_db(self) -> float:
        return self.tx_antenna_gain_dbi + self.rx_antenna_gain_dbi

    @property
    def link_density(self) -> float:
        return self.n_links / self.field_length**2


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    embed_dim: int = Field(8, ge=1)
    mpnn_layers: int = Field(3, ge=1)
    air_mpnn_layers: int = Field(3, ge=1)
    aggregation: Literal["sum", "mean", "max"] = "sum"
    # None -> pilot length equals K
    pilot_length: int | None = Field(None, ge=1)
    noise_bias_correction: bool = False
    warm_start: bool = False
    init_seed: int = 0


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(50, ge=1)
    iterations: int = Field(2000, ge=0)
    learning_rate: float = Field(0.002, gt=0)
    lr_decay: float = Field(0.9, gt=0, le=1)
    decay_interval: int = Field(100, ge=1)
    validation_fraction: float = Field(0.1, ge=0, lt=1)
    validate_every: int = Field(1, ge=1)
    checkpoint_interval: int = Field(0, ge=0)
    log_every: int = Field(100, ge=1)
    seed: int = 0


class OverheadConfig(BaseModel):
    """Signaling overhead accounting: symbols per CSI estimation, per embedding broadcast, per frame."""

    model_config = ConfigDict(extra="forbid")

    delta_csi: int = Field(1, ge=0)
    delta_mp: int = Field(5, ge=0)
    symbols_per_frame: int = Field(3000, ge=1)
    layers: int = Field(3, ge=1)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    channel: ChannelConfig = ChannelConfig()
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    overhead: OverheadConfig = OverheadConfig()


SECTIONS: dict[str, type[BaseModel]] = {
    "channel": ChannelConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "overhead": OverheadConfig,
}


def _parse_lines(lines: Iterable[str]) -> dict[str, dict[str, tuple[str, int]]]:
    values: dict[str, dict[str, tuple[str, int]]] = {name: {} for name in SECTIONS}
    section: str | None = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigParseError(f"unknown section '{section}'", lineno)
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigParseError("key outside of a section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SECTIONS[section].model_fields:
            raise ConfigParseError(f"unknown key '{key}' in section [{section}]", lineno)
        values[section][key] = (value, lineno)
    return values


def _coerce(value: str) -> str | None:
    return None if value.lower() in ("none", "null", "") else value


def parse_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """
    Reads a sectioned key-value file and merges CLI overrides on top of it.

    Args:
        path: config file; None gives the default simulation settings
        overrides: mapping "section.key" -> value, always wins over the file

    Returns:
        Validated RunConfig

    Raises:
        ConfigParseError: malformed line, unknown section or key, invalid value
    """
    values: dict[str, dict[str, tuple[str, int | None]]] = {name: {} for name in SECTIONS}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            values.update(_parse_lines(f))

    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or not key:
            raise ConfigParseError(f"override '{dotted}' must look like section.key")
        if key not in SECTIONS[section].model_fields:
            raise ConfigParseError(f"unknown key '{key}' in section [{section}]")
        values[section][key] = (value, None)

    resolved = {}
    for section, model in SECTIONS.items():
        entries = values[section]
        try:
            resolved[section] = model.model_validate({k: _coerce(v) for k, (v, _) in entries.items()})
        except ValidationError as e:
            error = e.errors()[0]
            key = str(error["loc"][0]) if error["loc"] else ""
            line = entries[key][1] if key in entries else None
            raise ConfigParseError(f"[{section}] {key}: {error['msg']}", line) from e
    return RunConfig(**resolved)


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    """Turns CLI `--set section.key=value` items into an override mapping."""
    overrides = {}
    for item in items:
        if "=" not in item:
            raise ConfigParseError(f"override '{item}' must look like section.key=value")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides
