"""Helper utilities."""
import hashlib
import importlib.metadata
import json
import math
from enum import Enum
from pathlib import Path
from typing import Union


def ensure_valid_path_exists(should_be_path: Union[str, Path]) -> Path:
    """Convert input to a pathlib.Path and check that the resulting filepath exists."""
    fails_to_exist_msg = "Expected file does not exist: "
    wrong_type_msg = "Unexpected type for something that should be convertable to a Path: "

    if isinstance(should_be_path, (str, Path)):
        path_obj = Path(should_be_path)
        if path_obj.exists():
            return path_obj
        raise FileNotFoundError(fails_to_exist_msg + str(should_be_path))

    raise TypeError(wrong_type_msg + str(type(should_be_path)))


def ensure_valid_path_with_suffix(should_be_path: Union[str, Path], suffix: str) -> Path:
    """Coerce input to a pathlib.Path with given suffix."""
    wrong_type_msg = "Unexpected type for something that should be convertable to a Path: "

    if isinstance(should_be_path, str):
        path_obj = Path(should_be_path)
    elif isinstance(should_be_path, Path):
        path_obj = should_be_path
    else:
        raise TypeError(wrong_type_msg + str(type(should_be_path)))

    return path_obj.with_suffix(suffix)


def format_float(value: Union[float, int]) -> str:
    """Format a number with 17 significant digits, independent of locale.

    Seventeen digits are enough for any double to round-trip through text.
    Non-finite values are written as ``nan``, ``inf`` and ``-inf``.
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def coerce_to_str(some_object) -> str:
    """Render a table cell: floats at full precision, everything else via str()."""
    if isinstance(some_object, Enum):
        return coerce_to_str(some_object.value)
    if isinstance(some_object, str):
        return some_object
    if isinstance(some_object, bool):
        return str(some_object).lower()
    if isinstance(some_object, int):
        return str(some_object)
    if isinstance(some_object, float):
        return format_float(some_object)
    if hasattr(some_object, "dtype"):
        # numpy scalar
        return coerce_to_str(some_object.item())
    if isinstance(some_object, tuple):
        return str(some_object)

    raise TypeError(f"Unable to coerce value to str. Unexpected type <{type(some_object)}>.")


def config_digest(raw_config: dict) -> str:
    """Return the SHA-256 of a configuration's canonical JSON encoding."""
    canonical = json.dumps(raw_config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def package_version() -> str:
    """Return the installed jumptail version, or a placeholder when running from source."""
    try:
        return importlib.metadata.version("jumptail")
    except importlib.metadata.PackageNotFoundError:
        return "0+unknown"
