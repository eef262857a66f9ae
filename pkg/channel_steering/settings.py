"""
Configuration and settings management.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from channel_steering.utils.yaml import load_yaml_with_env

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances; defaults are the documented library constants."""

    hermitian: float = 1e-10
    psd: float = 1e-9
    kraus_cutoff: float = 1e-9
    consistency_repair: float = 1e-8
    steering_boundary: float = 1e-7
    certificate_gap: float = 1e-6
    round_trip: float = 1e-8
    probe_rank: float = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-9
    max_iterations: int = 200
    step_fraction: float = 0.95
    rank_tolerance: float = 1e-10
    phase_one_threshold: float = 1e-8


@dataclass(frozen=True)
class SteeringOptions:
    strategy_cap: int = 4096
    noise: str = "consistent"


@dataclass(frozen=True)
class SearchOptions:
    grid_points: int = 17
    parameter_tolerance: float = 1e-4
    max_input_dim: int = 4


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "./output"
    indent: int = 2


@dataclass(frozen=True)
class Settings:
    tolerances: Tolerances = field(default_factory=Tolerances)
    solver: SolverOptions = field(default_factory=SolverOptions)
    steering: SteeringOptions = field(default_factory=SteeringOptions)
    search: SearchOptions = field(default_factory=SearchOptions)
    output: OutputOptions = field(default_factory=OutputOptions)


# Global settings (replaced on startup)
SETTINGS: Settings = Settings()


def _section(cls: type, values: dict[str, Any] | None, name: str) -> Any:
    """Build one settings section, ignoring (and logging) unknown keys."""
    values = values or {}
    known = {f.name: f.type for f in fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        logger.warning(f"Ignoring unknown keys in config section '{name}': {unknown}")
    kwargs = {}
    for key, value in values.items():
        if key not in known or value is None:
            continue
        default = getattr(cls(), key)
        kwargs[key] = type(default)(value)
    return cls(**kwargs)


def load_config(config_path: str = "config.yaml") -> Settings:
    """Load settings from YAML file with environment overrides."""
    if not Path(config_path).is_file():
        logger.warning(f"Config file {config_path} not found, using built-in defaults")
        return Settings()

    raw = load_yaml_with_env(config_path)
    return Settings(
        tolerances=_section(Tolerances, raw.get("tolerances"), "tolerances"),
        solver=_section(SolverOptions, raw.get("solver"), "solver"),
        steering=_section(SteeringOptions, raw.get("steering"), "steering"),
        search=_section(SearchOptions, raw.get("search"), "search"),
        output=_section(OutputOptions, raw.get("output"), "output"),
    )


def initialize_settings(config_path: str = "config.yaml", tol: float | None = None) -> Settings:
    """
    Initialize global settings from config file.

    Args:
        config_path: Path to the YAML config
        tol: Optional override of the solver tolerance (the CLI ``--tol`` flag)

    Returns:
        The installed settings
    """
    global SETTINGS

    settings = load_config(config_path)
    if tol is not None:
        settings = replace(settings, solver=replace(settings.solver, tolerance=tol))
    SETTINGS = settings

    logger.debug("Settings initialized")
    logger.debug(f"Solver tolerance: {SETTINGS.solver.tolerance}")
    return SETTINGS


def reset_settings() -> None:
    """Restore built-in defaults."""
    global SETTINGS
    SETTINGS = Settings()


def get_settings() -> Settings:
    """Get current settings."""
    return SETTINGS


def get_output_dir() -> Path:
    """Get output directory path."""
    return Path(SETTINGS.output.directory)


def output_path(path: str | Path) -> Path:
    """Resolve a result path; relative paths land in the output directory."""
    path = Path(path)
    return path if path.is_absolute() else get_output_dir() / path
