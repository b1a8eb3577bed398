"""
Utility functions for ScatterLab.
"""
import json
import os
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

PathLike = Union[str, Path]


def ensure_directory_exists(directory: PathLike) -> Path:
    """
    Ensure a directory exists, create if it doesn't.

    Args:
        directory: Directory path to create

    Returns:
        Path object of the directory
    """
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, arrays and complex numbers into JSON-friendly values."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def safe_json_dump(data: Any, filepath: PathLike, **kwargs) -> bool:
    """
    Safely dump data to a JSON file with error handling.

    Keys are sorted.

    Args:
        data: Data to dump
        filepath: File path to write to
        **kwargs: Additional arguments for json.dump

    Returns:
        True if successful, False otherwise
    """
    try:
        parent = os.path.dirname(str(filepath))
        if parent:
            ensure_directory_exists(parent)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(to_jsonable(data), f, ensure_ascii=False, indent=4, sort_keys=True, **kwargs)
        return True
    except (OSError, TypeError, ValueError):
        return False


def safe_json_load(filepath: PathLike) -> Optional[Any]:
    """
    Safely load data from a JSON file with error handling.

    Args:
        filepath: File path to read from

    Returns:
        Loaded data or None if failed
    """
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError):
        return None


def chunk_ranges(total: int, chunk_size: int) -> List[Tuple[int, int]]:
    """Split ``range(total)`` into consecutive ``(start, stop)`` blocks."""
    chunk_size = max(1, int(chunk_size))
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


@contextmanager
def timed(timings: Dict[str, float], key: str) -> Iterator[None]:
    """Accumulate the wall-clock time of the block into ``timings[key]``."""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[key] = timings.get(key, 0.0) + time.perf_counter() - start


def format_seconds(seconds: Optional[float]) -> str:
    """
    Format a duration the way the timing tables print it.

    Args:
        seconds: Duration in seconds, or None when the stage did not run

    Returns:
        Scientific notation with three significant digits, or "-"
    """
    if seconds is None or not np.isfinite(seconds):
        return "-"
    return f"{seconds:.2e}"
