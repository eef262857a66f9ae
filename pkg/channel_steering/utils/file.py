"""
File operation utilities.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)


def write_atomic(path: str | Path, data: bytes) -> None:
    """
    Write file atomically using tmp + rename.

    A result document is therefore either absent or complete, never half
    written, even if a solve is interrupted.

    Args:
        path: Destination file path (parent directories are created)
        data: Data to write
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp")
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)
    logger.info(f"✓ Written: {path}")


def read_json(path: str | Path) -> Any:
    """
    Load a JSON document.

    Args:
        path: Source file path

    Returns:
        Parsed document

    Raises:
        FileNotFoundError: If the file does not exist
        json.JSONDecodeError: If the file is not valid JSON
    """
    with open(path, encoding="utf-8") as f:
        return json.load(f)
