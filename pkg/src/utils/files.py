"""JSON and directory helpers that report failures as ``DataIOError``."""

import json
import os
from typing import Any, Dict

from .errors import DataIOError, ValidationError


def ensure_dir(path: str) -> str:
    """Create ``path`` (and parents) if needed and return it."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"Cannot create directory {path}: {e}") from e
    return path


def write_json(path: str, payload: Dict[str, Any]) -> str:
    """
    Write ``payload`` as sorted, indented JSON.

    Floats are written with ``repr`` precision, so reading the file back
    restores them bitwise.

    Raises:
        DataIOError: If the file cannot be written
        ValidationError: If the payload holds NaN/inf or non-serializable values
    """
    parent = os.path.dirname(path)
    if parent:
        ensure_dir(parent)
    try:
        text = json.dumps(payload, sort_keys=True, indent=1, allow_nan=False)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Cannot serialize {os.path.basename(path)}: {e}") from e
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    except OSError as e:
        raise DataIOError(f"Failed to write {path}: {e}") from e
    return path


def read_json(path: str) -> Dict[str, Any]:
    """
    Read a JSON object.

    Raises:
        DataIOError: If the file is missing or unreadable
        ValidationError: If it is not valid JSON or not an object
    """
    if not os.path.exists(path):
        raise DataIOError(f"File not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as e:
        raise DataIOError(f"Failed to read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"Malformed JSON in {path}: {e}") from e
    if not isinstance(payload, dict):
        raise ValidationError(f"Expected a JSON object in {path}")
    return payload
