"""Benchmark artifacts: CSV tables, per-run ``artifact.json`` and the run summary."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
from collections.abc import Iterable, Mapping, Sequence
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

ARTIFACT_FILE = "artifact.json"
SUMMARY_FILE = "summary.json"


class Assertion(BaseModel):
    """One acceptance check evaluated by a benchmark run."""

    model_config = {"frozen": True}

    name: str
    passed: bool
    detail: str = ""


class Artifacts(BaseModel):
    """What a benchmark produced: key numbers, checks, files and the config behind them."""

    benchmark: str
    config: dict[str, Any]
    config_hash: str
    key_numbers: dict[str, Any] = Field(default_factory=dict)
    rows: int = 0
    assertions: list[Assertion] = Field(default_factory=list)
    files: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.assertions)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        """Record an assertion; failures are logged but never raised."""
        self.assertions.append(Assertion(name=name, passed=bool(passed), detail=detail))
        if not passed:
            logger.warning("Check failed: %s (%s)", name, detail)
        return bool(passed)

    def save(self, directory: Path) -> Path:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / ARTIFACT_FILE
        path.write_text(self.model_dump_json(indent=2))
        logger.info("Wrote %s", path)
        return path

    @classmethod
    def load(cls, path: Path) -> Artifacts:
        return cls.model_validate_json(path.read_text())


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float | np.floating):
        return format(float(value), ".17g")
    return str(value)


def write_csv(
    path: Path, fieldnames: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> int:
    """Write comma-separated rows with floats at 17 significant digits; returns the row count."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as fp:
        writer = csv.DictWriter(fp, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _format(row.get(key)) for key in fieldnames})
            count += 1
    logger.debug("Wrote %d rows to %s", count, path)
    return count


def load_artifacts(output_dir: Path) -> list[Artifacts]:
    """Collect every ``artifact.json`` below ``output_dir``, in path order."""
    if not output_dir.is_dir():
        logger.warning("Output directory does not exist: %s", output_dir)
        return []
    return [Artifacts.load(path) for path in sorted(output_dir.rglob(ARTIFACT_FILE))]


def environment() -> dict[str, Any]:
    """Interpreter, library and machine details; timings are only comparable within one."""
    try:
        version = metadata.version("hermsplit")
    except metadata.PackageNotFoundError:
        version = "unknown"
    return {
        "hermsplit": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "note": "absolute CPU seconds are hardware specific; compare ratios only",
    }


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def emit_report(artifacts: Sequence[Artifacts], output_dir: Path) -> Path:
    """Write ``summary.json`` for a set of benchmark runs and return its path."""
    if not artifacts:
        raise ValueError("no benchmark artifacts to report")

    entries = [
        {
            "benchmark": item.benchmark,
            "config_hash": item.config_hash,
            "key_numbers": _jsonable(item.key_numbers),
            "rows": item.rows,
            "files": item.files,
            "assertions": [check.model_dump() for check in item.assertions],
            "passed": item.passed,
        }
        for item in artifacts
    ]
    summary = {
        "environment": environment(),
        "benchmarks": entries,
        "passed": all(item.passed for item in artifacts),
    }

    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / SUMMARY_FILE
    path.write_text(json.dumps(summary, indent=2, allow_nan=False))
    logger.info("Wrote summary of %d benchmark run(s) to %s", len(entries), path)
    return path
