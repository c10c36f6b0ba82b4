"""HCL run files: parse ``benchmark`` blocks and ``variable`` declarations.

A run file looks like::

    variable "tau" { value = 0.01 }

    benchmark "ground_state" {
        beta   = 2
        M      = 16
        orders = [4]
        taus   = ["${var.tau}"]
    }
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping
from pathlib import Path
from typing import Any

import hcl2
from hcl2 import SerializationOptions

from .resolve import Resolver

logger = logging.getLogger(__name__)

_SERIALIZATION_OPTS = SerializationOptions(
    strip_string_quotes=True,
    explicit_blocks=False,
    with_comments=False,
)


def _iter_blocks(data: Mapping[str, Any], key: str) -> Iterator[tuple[str, dict[str, Any]]]:
    """Flatten HCL2 labeled blocks, ``{"benchmark": [{"a": {...}}]}``, into pairs."""
    for block in data.get(key, []):
        yield from block.items()


def _extract_variables(data: dict[str, Any], context: Mapping[str, Any]) -> dict[str, Any]:
    """Resolve ``variable`` then ``variables`` blocks, removing them from ``data``.

    Later variables may refer to earlier ones through ``var``.
    """
    resolved: dict[str, Any] = {}

    def _resolve(raw: Any) -> Any:
        return Resolver({**context, "var": resolved}).resolve(raw)

    for name, body in _iter_blocks(data, "variable"):
        if "value" not in body:
            raise ValueError(f"variable '{name}' is missing a 'value' attribute")
        resolved[name] = _resolve(body["value"])
        logger.debug("Resolved variable '%s'", name)
    data.pop("variable", None)

    for block in data.pop("variables", []):
        for name, value in block.items():
            resolved[name] = _resolve(value)
            logger.debug("Resolved variable '%s'", name)

    return resolved


def load(file: Path, *, context: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Load one HCL file and resolve its interpolations."""
    logger.info("Loading run file: %s", file)
    try:
        data = hcl2.loads(file.read_text(), serialization_options=_SERIALIZATION_OPTS)
    except Exception as exc:
        logger.error("Could not load file: %s", file, exc_info=exc)
        raise ValueError(f"{file}: {exc}") from exc

    data = {k: v for k, v in data.items() if not (k.startswith("__") and k.endswith("__"))}
    base = dict(context or {})
    try:
        variables = _extract_variables(data, base)
        if variables:
            if "var" in base:
                logger.warning("context key 'var' is reserved for HCL variables and is replaced")
            base["var"] = variables
        return Resolver(base).resolve(data) if base else data
    except ValueError as exc:
        logger.error("Could not resolve file data: %s", file, exc_info=exc)
        raise ValueError(f"{file}: {exc}") from exc


def parse(file: Path, *, context: Mapping[str, Any] | None = None) -> dict[str, dict[str, Any]]:
    """Return the attributes of every ``benchmark`` block, keyed by block label."""
    data = load(file, context=context)
    blocks: dict[str, dict[str, Any]] = {}
    for block_type in data:
        if block_type != "benchmark":
            raise ValueError(f"{file}: unsupported block type '{block_type}'")
    for name, attrs in _iter_blocks(data, "benchmark"):
        if name in blocks:
            raise ValueError(f"{file}: duplicate benchmark block '{name}'")
        blocks[name] = dict(attrs)
    return blocks
