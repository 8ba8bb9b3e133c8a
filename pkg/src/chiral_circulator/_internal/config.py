"""Flat ``key = value`` configuration files with unit-suffixed keys."""

import hashlib
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .._errors import ConfigError
from ..types import FloatArray, ModelParams, OutputFormat

logger = logging.getLogger(__name__)

ConfigValue = float | int | bool | str | None

# Config key -> ModelParams attribute
MODEL_KEYS: dict[str, str] = {
    "omega_1_ghz": "omega_1",
    "omega_2_ghz": "omega_2",
    "omega_x_ghz": "omega_x",
    "omega_y_ghz": "omega_y",
    "kappa_1_mhz": "kappa_1",
    "kappa_2_mhz": "kappa_2",
    "kappa_3_mhz": "kappa_3",
    "kappa_x_mhz": "kappa_x",
    "k_ghz_per_t": "k",
    "m_ghz_per_t2": "m",
    "beta_0_mhz": "beta_0",
    "b_0_mt": "b_0",
    "theta_deg": "theta",
    "g_x0_mhz": "g_x0",
    "g_x1": "g_x1",
    "g_y0_mhz": "g_y0",
    "g_y1": "g_y1",
    "coupling_beta_scale": "coupling_beta_scale",
}

_DEFAULT_MODEL = ModelParams()

# key -> (type, default)
SCHEMA: dict[str, tuple[type, ConfigValue]] = {
    **{key: (float, getattr(_DEFAULT_MODEL, attr)) for key, attr in MODEL_KEYS.items()},
    # Field and frequency grids
    "b_start_mt": (float, -40.0),
    "b_stop_mt": (float, 40.0),
    "b_step_mt": (float, 1.0),
    "freq_start_ghz": (float, 10.79),
    "freq_stop_ghz": (float, 10.83),
    "freq_count": (int, 801),
    # Adiabatic elimination
    "omega_bar_ghz": (float, None),
    "self_consistent": (bool, False),
    # Synthesis and fitting
    "noise_level": (float, 0.01),
    "fit_mode": (str, "complex"),
    "fit_background": (str, "linear"),
    "fit_starts": (int, 16),
    "global_starts": (int, 4),
    "fit_target": (str, "traces"),
    # Three-port circulator
    "center_ghz": (float, 11.2),
    "kappa_c_mhz": (float, 550.0),
    "kappa_i_mhz": (float, 0.0),
    "delta_start_mhz": (float, 0.0),
    "delta_stop_mhz": (float, 1000.0),
    "delta_count": (int, 101),
    "isolation_threshold_db": (float, 20.0),
    # Ferrite
    "ms_oe": (float, 2440.0),
    "gamma_ghz_per_t": (float, 28.0),
    "n_x": (float, 1.0 / 3.0),
    "n_y": (float, 1.0 / 3.0),
    "n_z": (float, 1.0 / 3.0),
    "internal_field_mt": (float, 100.0),
    "mp_fraction": (float, 0.5),
    "preference_delta": (float, 0.1),
    # Anisotropy toy model
    "anisotropy_k_kt": (float, 2.0),
    "moment_field_scale_per_mt": (float, 0.17),
    "quadrature_method": (str, "adaptive"),
}

_CHOICES: dict[str, tuple[str, ...]] = {
    "fit_mode": ("complex", "magnitude"),
    "fit_background": ("none", "constant", "linear"),
    "fit_target": ("traces", "tables"),
    "quadrature_method": ("adaptive", "bessel"),
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _parse_value(
    key: str, raw: str, path: str | Path | None = None, line_number: int | None = None
) -> ConfigValue:
    if key not in SCHEMA:
        raise ConfigError("Unknown configuration key", key=key, path=path, line_number=line_number)
    kind, default = SCHEMA[key]
    text = raw.strip()
    if default is None and text.lower() in {"none", "auto", ""}:
        return None
    try:
        match kind.__name__:
            case "bool":
                lowered = text.lower()
                if lowered in _TRUE:
                    return True
                if lowered in _FALSE:
                    return False
                raise ValueError(text)
            case "int":
                return int(text)
            case "float":
                return float(text)
            case _:
                if key in _CHOICES and text not in _CHOICES[key]:
                    raise ValueError(text)
                return text
    except ValueError as e:
        raise ConfigError(
            f"Invalid {kind.__name__} value {text!r}",
            key=key,
            path=path,
            line_number=line_number,
        ) from e


def parse_config_text(text: str, path: str | Path | None = None) -> dict[str, ConfigValue]:
    """Parse config text into typed values for the keys it sets.

    Raises:
        ConfigError: On a missing ``=``, unknown or duplicate key, or bad value.
    """
    values: dict[str, ConfigValue] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError("Expected 'key = value'", path=path, line_number=line_number)
        key, raw = (part.strip() for part in content.split("=", 1))
        if key in values:
            raise ConfigError("Duplicate key", key=key, path=path, line_number=line_number)
        values[key] = _parse_value(key, raw, path, line_number)
    return values


# Alternative stems for bundled configs
BUNDLED_ALIASES = {"hybrid_sweep": "paper_fig6"}


def resolve_config_path(source: str | Path) -> Path:
    """A config path on disk, or the stem of a bundled config."""
    path = Path(source)
    if path.is_file():
        return path
    stem = BUNDLED_ALIASES.get(path.name, path.name)
    bundled = resources.files("chiral_circulator") / "data" / f"{stem}.cfg"
    if path.suffix == "" and bundled.is_file():
        return Path(str(bundled))
    raise ConfigError("Configuration file not found", path=path)


def load_config(source: str | Path | None) -> dict[str, ConfigValue]:
    """Defaults overlaid with the values of ``source`` (a path or bundled stem)."""
    values = {key: default for key, (_, default) in SCHEMA.items()}
    if source is None:
        return values
    path = resolve_config_path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read configuration: {e}", path=path) from e
    values.update(parse_config_text(text, path))
    logger.debug(f"Loaded configuration from {path}")
    return values


def apply_overrides(values: Mapping[str, ConfigValue], overrides: Iterable[str]) -> dict[str, ConfigValue]:
    """Apply ``key=value`` command-line overrides."""
    result = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override {item!r} is not of the form key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        result[key] = _parse_value(key, raw)
    return result


def model_params_from_values(values: Mapping[str, ConfigValue]) -> ModelParams:
    kwargs: dict[str, Any] = {attr: values[key] for key, attr in MODEL_KEYS.items() if key in values}
    return ModelParams(**kwargs)


def model_params_to_text(params: ModelParams) -> str:
    """Config text that parses back to an equal ``ModelParams``."""
    attr_to_key = {attr: key for key, attr in MODEL_KEYS.items()}
    lines = [f"{attr_to_key[f.name]} = {getattr(params, f.name)!r}" for f in fields(params)]
    return "\n".join(lines) + "\n"


def parameter_name(name: str) -> str:
    """ModelParams attribute for either a config key or an attribute name."""
    if name in MODEL_KEYS:
        return MODEL_KEYS[name]
    if name in MODEL_KEYS.values():
        return name
    raise ConfigError("Not a model parameter", key=name)


def canonical_text(values: Mapping[str, ConfigValue], subcommand: str, seed: int) -> str:
    lines = [f"{key} = {values[key]!r}" for key in sorted(values)]
    lines.append(f"subcommand = {subcommand!r}")
    lines.append(f"seed = {seed!r}")
    return "\n".join(lines) + "\n"


def config_hash(values: Mapping[str, ConfigValue], subcommand: str, seed: int) -> str:
    """SHA-256 of the effective values, subcommand and seed."""
    return hashlib.sha256(canonical_text(values, subcommand, seed).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs besides its own flags."""

    subcommand: str
    values: dict[str, ConfigValue]
    out_dir: Path
    seed: int = 0
    threads: int = 1
    output_format: OutputFormat = "both"
    source: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigError("Thread count must be at least 1", key="threads")

    def get_float(self, key: str) -> float:
        value = self.values[key]
        if not isinstance(value, (int, float)):
            raise ConfigError("Expected a number", key=key)
        return float(value)

    def get_int(self, key: str) -> int:
        value = self.values[key]
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError("Expected an integer", key=key)
        return value

    def get_str(self, key: str) -> str:
        return str(self.values[key])

    @property
    def model_params(self) -> ModelParams:
        return model_params_from_values(self.values)

    @property
    def hash(self) -> str:
        return config_hash(self.values, self.subcommand, self.seed)

    def field_grid(self) -> FloatArray:
        return field_grid(
            self.get_float("b_start_mt"), self.get_float("b_stop_mt"), self.get_float("b_step_mt")
        )

    def frequency_grid(self) -> FloatArray:
        return frequency_grid(
            self.get_float("freq_start_ghz"), self.get_float("freq_stop_ghz"), self.get_int("freq_count")
        )


def field_grid(start: float, stop: float, step: float) -> FloatArray:
    """Inclusive field grid; endpoints are snapped to multiples of ``step``."""
    if step <= 0:
        raise ConfigError("Field step must be positive", key="b_step_mt")
    if stop < start:
        raise ConfigError("Field grid is empty", key="b_stop_mt")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def frequency_grid(start: float, stop: float, count: int) -> FloatArray:
    if count < 1:
        raise ConfigError("Frequency grid is empty", key="freq_count")
    if stop < start or (count > 1 and stop == start):
        raise ConfigError("Frequency grid must increase", key="freq_stop_ghz")
    return np.linspace(start, stop, count)
