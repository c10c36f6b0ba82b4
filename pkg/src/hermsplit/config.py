"""Resolved run configuration for the benchmark runners."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from .flows import ModelParams
from .seeds import seed_names

logger = logging.getLogger(__name__)

type BenchmarkName = Literal["ground_state", "invariants", "cost_accuracy"]

WORKERS_ENV = "HERMSPLIT_WORKERS"

_MODEL_KEYS = ("beta", "gamma")

_DEFAULTS: dict[str, dict[str, Any]] = {
    "ground_state": {
        "orders": [4],
        "taus": [0.01],
        "c_values": [1.0],
        "seeds": ["paper_seed_1", "h00"],
    },
    "invariants": {
        "orders": [2, 8],
        "taus": [1e-3],
        "c_values": [0.25, 1.0, 2.0],
        "seeds": ["h00"],
    },
    "cost_accuracy": {
        "orders": [2, 4, 6, 8, 10, 12, 14],
        "taus": [2.0**-k for k in range(10)],
        "c_values": [1.0],
        "seeds": ["gaussian"],
        "T": 30.0,
    },
}


def defaults(benchmark: str) -> dict[str, Any]:
    """Parameter matrix used by the published benchmarks."""
    if benchmark not in _DEFAULTS:
        raise ValueError(f"Unknown benchmark: '{benchmark}'")
    return {
        key: list(value) if isinstance(value, list) else value
        for key, value in _DEFAULTS[benchmark].items()
    }


def workers_from_env(environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    """Read the worker count from ``HERMSPLIT_WORKERS`` if it is set."""
    environ = os.environ if environ is None else environ
    raw = environ.get(WORKERS_ENV)
    if raw is None or not raw.strip():
        return {}
    try:
        return {"workers": int(raw)}
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got '{raw}'") from None


class RunConfig(BaseModel):
    """Everything a benchmark run needs; embedded in every artifact it writes."""

    model_config = {"frozen": True, "extra": "forbid"}

    benchmark: BenchmarkName
    model: ModelParams = Field(default_factory=ModelParams)
    M: int = Field(default=16, ge=0)
    orders: list[int]
    taus: list[float]
    c_values: list[float]
    T: float | None = Field(default=None, gt=0)
    seeds: list[str]
    output_dir: Path = Path("results")
    workers: int = Field(default=1, ge=1)
    chain_workers: int = Field(default=1, ge=1)
    repeats: int = Field(default=3, ge=1)
    cell_timeout: float | None = Field(default=None, gt=0)
    gs_tau: float = Field(default=0.01, gt=0)
    gs_order: int = 4
    stagnation_tol: float = Field(default=1e-15, ge=0)
    gs_time: float = Field(default=30.0, gt=0)
    refine_schedule: list[float] = Field(default_factory=list)
    record_every: int | None = Field(default=None, ge=1)
    order_study: bool = False
    comparison_c: float = Field(default=1.0, gt=0)

    @field_validator("orders", "taus", "c_values", "seeds")
    @classmethod
    def _nonempty(cls, value: list[Any]) -> list[Any]:
        if not value:
            raise ValueError("list must not be empty")
        return value

    @field_validator("orders")
    @classmethod
    def _even_orders(cls, value: list[int]) -> list[int]:
        bad = [q for q in value if q < 2 or q % 2]
        if bad:
            raise ValueError(f"orders must be even integers >= 2, got {bad}")
        return value

    @field_validator("gs_order")
    @classmethod
    def _even_gs_order(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError(f"order must be an even integer >= 2, got {value}")
        return value

    @field_validator("taus", "c_values", "refine_schedule")
    @classmethod
    def _positive(cls, value: list[float]) -> list[float]:
        bad = [x for x in value if not x > 0]
        if bad:
            raise ValueError(f"values must be positive, got {bad}")
        return value

    @field_validator("seeds")
    @classmethod
    def _known_seeds(cls, value: list[str]) -> list[str]:
        known = seed_names()
        unknown = [name for name in value if name not in known]
        if unknown:
            raise ValueError(f"unknown seeds {unknown} (known: {', '.join(known)})")
        return value

    @model_validator(mode="after")
    def _final_time(self) -> RunConfig:
        if self.benchmark == "cost_accuracy" and self.T is None:
            raise ValueError("cost_accuracy needs a final time T")
        return self

    @property
    def gamma(self) -> float:
        return self.model.gamma

    @property
    def beta(self) -> float:
        return self.model.beta

    @classmethod
    def from_layers(cls, benchmark: str, *layers: Mapping[str, Any]) -> RunConfig:
        """Merge the benchmark defaults with flat override mappings, later ones winning.

        ``beta`` and ``gamma`` may be given at top level and are folded into ``model``.
        """
        merged = defaults(benchmark)
        for layer in layers:
            merged.update(layer)
        merged.pop("benchmark", None)
        model = dict(merged.pop("model", {}) or {})
        for key in _MODEL_KEYS:
            if key in merged:
                model[key] = merged.pop(key)
        logger.debug("Resolved '%s' configuration keys: %s", benchmark, sorted(merged))
        return cls(benchmark=benchmark, model=ModelParams(**model), **merged)  # type: ignore[arg-type]

    def digest(self) -> str:
        """SHA-256 of the configuration, ignoring where results are written."""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
