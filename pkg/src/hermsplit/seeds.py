"""Named initial states and their registration."""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from .flows import ModelParams
from .hermite import GridField, SpectralBasis

type SeedFactory = Callable[[SpectralBasis, ModelParams], GridField]

_seed_registry: dict[str, SeedFactory] = {}


def seed(name: str):
    """Register a factory that builds a named initial state on a basis grid."""

    def decorator(factory: SeedFactory) -> SeedFactory:
        if name in _seed_registry:
            raise ValueError(f"Duplicate seed: '{name}' is already registered")
        _seed_registry[name] = factory
        return factory

    return decorator


def seed_names() -> list[str]:
    return sorted(_seed_registry)


def make_seed(name: str, basis: SpectralBasis, params: ModelParams) -> GridField:
    """Build the registered seed ``name`` on ``basis``."""
    try:
        factory = _seed_registry[name]
    except KeyError:
        raise ValueError(
            f"Unknown seed: '{name}' (known: {', '.join(seed_names())})"
        ) from None
    return factory(basis, params)


@seed("paper_seed_1")
def near_h11(basis: SpectralBasis, params: ModelParams) -> GridField:
    """``0.01 h00 + 0.1 h01 + 0.1 h10 + h11`` restricted to the grid."""
    return basis.from_coefficients({(0, 0): 0.01, (0, 1): 0.1, (1, 0): 0.1, (1, 1): 1.0})


@seed("h00")
def vacuum(basis: SpectralBasis, params: ModelParams) -> GridField:
    """The linear ground state ``h00``."""
    return basis.sample(0, 0)


@seed("gaussian")
def trap_gaussian(basis: SpectralBasis, params: ModelParams) -> GridField:
    """``exp(-V) / (2 pi^(3/4))``, not renormalized; its norm is ``pi^(-1/4) / 2`` at gamma=1."""
    z = basis.rule.nodes
    potential = 0.5 * params.gamma**2 * (z[:, None] ** 2 + z[None, :] ** 2)
    return GridField(np.exp(-potential) / (2.0 * math.pi**0.75))
