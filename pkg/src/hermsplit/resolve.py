"""``${...}`` interpolation for values read from run configuration files."""

from __future__ import annotations

import logging
import re
from collections.abc import Mapping
from typing import Any

logger = logging.getLogger(__name__)

# ``[^{}]+`` keeps ``${{ ... }}`` from being treated as a reference
_TOKEN = re.compile(r"(?P<escape>\$\$\{)|\$\{(?P<ref>[^{}]+)\}")
_WHOLE = re.compile(r"\$\{(?P<ref>[^{}]+)\}")


class Resolver:
    """Substitute dotted references such as ``${env.HOME}`` or ``${var.tau}``.

    A string that is exactly one reference becomes the referenced value itself,
    so ``"${var.taus}"`` can yield a list of floats.  Embedded references are
    formatted with ``str``.  ``$${`` produces a literal ``${``.
    """

    def __init__(self, context: Mapping[str, Any] | None = None) -> None:
        self._context: Mapping[str, Any] = context or {}

    def lookup(self, ref: str) -> Any:
        """Walk a dotted reference through mappings and attributes."""
        value: Any = self._context
        for part in ref.strip().split("."):
            if isinstance(value, Mapping) and part in value:
                value = value[part]
            elif hasattr(value, part):
                value = getattr(value, part)
            else:
                raise ValueError(f"undefined variable '{ref.strip()}'")
        if callable(value) and not isinstance(value, type):
            value = value()
        return value

    def substitute(self, text: str) -> Any:
        if "${" not in text:
            return text
        whole = _WHOLE.fullmatch(text)
        if whole:
            return self.lookup(whole["ref"])

        def _replace(match: re.Match[str]) -> str:
            if match["escape"]:
                return "${"
            return str(self.lookup(match["ref"]))

        return _TOKEN.sub(_replace, text)

    def resolve(self, data: Any) -> Any:
        """Return a copy of ``data`` with every string value substituted."""
        if isinstance(data, dict):
            return {key: self.resolve(value) for key, value in data.items()}
        if isinstance(data, list):
            return [self.resolve(item) for item in data]
        if isinstance(data, str):
            return self.substitute(data)
        return data
