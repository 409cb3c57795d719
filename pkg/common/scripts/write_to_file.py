# common/scripts/write_to_file.py
"""
Deterministic result writers.

Files are written so that identical content always yields identical bytes:
JSON with sorted keys and a trailing newline, CSV with shortest round-trip
float formatting. Hashes let the manifest reference every emitted file.
"""

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        # JSON has no NaN/inf literal
        return f if math.isfinite(f) else repr(f)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return value.as_posix()
    return value


def format_cell(value: Any) -> str:
    """CSV cell text: shortest round-trip repr for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def dumps_json(payload: Any) -> str:
    return json.dumps(_to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path, payload: Any) -> Path:
    """
    Write ``payload`` as UTF-8 JSON, creating parent directories.

    Raises:
        OSError: If the file cannot be written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(dumps_json(payload), encoding="utf-8")
    except OSError as e:
        raise OSError(f"Failed to write {path}: {e}") from e
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a header row followed by ``rows``; cells go through ``format_cell``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with path.open(mode="w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(cell) for cell in row])
    except OSError as e:
        raise OSError(f"Failed to write {path}: {e}") from e
    return path


def file_sha256(path: Path, chunk_size: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


__all__ = [
    "dumps_json",
    "format_cell",
    "write_json",
    "write_csv",
    "file_sha256",
]
