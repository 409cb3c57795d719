# app/runner/results.py
"""
Result emission.

Result files hold only deterministic content; wall-clock data (timestamp,
stage timings) lives in ``manifest.json``, which also lists every emitted
file with its sha256.
"""

from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import scipy

from common.scripts import file_sha256, write_csv, write_json

PACKAGE_NAME = "igb-lab"
MANIFEST_NAME = "manifest.json"
RESULTS_NAME = "results.json"


def package_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def library_versions() -> dict[str, str]:
    return {
        PACKAGE_NAME: package_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


class ResultWriter:
    """Writes result files below ``out_dir`` and remembers their hashes."""

    def __init__(self, out_dir: Path) -> None:
        self.out_dir = Path(out_dir)
        self.files: dict[str, str] = {}

    def _track(self, path: Path) -> Path:
        self.files[path.relative_to(self.out_dir).as_posix()] = file_sha256(path)
        return path

    def json(self, name: str, payload: Any) -> Path:
        return self._track(write_json(self.out_dir / name, payload))

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self._track(write_csv(self.out_dir / name, header, rows))

    def manifest(
        self,
        resolved_config: dict[str, Any],
        seeds: Any,
        decisions: dict[str, Any],
        timings: Optional[dict[str, float]] = None,
    ) -> Path:
        payload = {
            "resolved_config": resolved_config,
            "seeds": seeds,
            "versions": library_versions(),
            "decisions": decisions,
            "files": dict(sorted(self.files.items())),
            "timings_ms": timings or {},
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        return write_json(self.out_dir / MANIFEST_NAME, payload)


__all__ = [
    "PACKAGE_NAME",
    "MANIFEST_NAME",
    "RESULTS_NAME",
    "package_version",
    "library_versions",
    "ResultWriter",
]
