"""
YAML utilities with !env tag support.
"""

import logging
import os
from typing import Any

import yaml

logger = logging.getLogger(__name__)


class ConfigYamlLoader(yaml.SafeLoader):
    """Custom YAML loader that resolves !env tags from the environment."""

    pass


def env_constructor(loader: yaml.Loader, node: yaml.Node) -> Any:
    """
    Constructor for !env tag.

    Accepts either a scalar ``!env NAME`` or a pair ``!env [NAME, default]``.

    Priority:
    1. Environment variable NAME (parsed as a YAML scalar, so numbers stay numbers)
    2. The default given in the config file (None for the scalar form)
    """
    if isinstance(node, yaml.SequenceNode):
        items = loader.construct_sequence(node, deep=True)
        if not items or len(items) > 2:
            raise yaml.constructor.ConstructorError(
                None, None, f"!env expects [NAME] or [NAME, default], got {items}", node.start_mark
            )
        name, default = items[0], items[1] if len(items) == 2 else None
    else:
        name, default = loader.construct_scalar(node), None

    env_value = os.environ.get(str(name))
    if env_value is None:
        return default

    logger.debug(f"Config value loaded from environment variable {name}")
    try:
        return yaml.safe_load(env_value)
    except yaml.YAMLError:
        return env_value


# Register the !env constructor
yaml.add_constructor("!env", env_constructor, ConfigYamlLoader)


def load_yaml_with_env(file_path: str) -> dict[str, Any]:
    """
    Load YAML file with !env tag support.

    Args:
        file_path: Path to YAML file

    Returns:
        Parsed YAML data with environment overrides resolved; empty dict if the
        file is missing or unreadable
    """
    try:
        with open(file_path, encoding="utf-8") as f:
            return yaml.load(f, Loader=ConfigYamlLoader) or {}
    except Exception as e:
        logger.warning(f"Could not load {file_path}: {e}")
        return {}
