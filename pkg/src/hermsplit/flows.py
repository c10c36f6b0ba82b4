"""Exact propagators for the linear and nonlinear subproblems.

The dissipative regime splits the gradient flow ``d/dt psi = -(H_lin + beta|psi|^2) psi``;
the unitary regime splits the GPE ``i d/dt psi = (H_lin + beta|psi|^2) psi``.  Linear
flows act on Hermite coefficients, nonlinear flows act pointwise on grid samples.
"""

from __future__ import annotations

import logging
import threading
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field

from .hermite import GridField, SpectralBasis, SpectralField, forward, inverse

logger = logging.getLogger(__name__)


class FlowRegime(StrEnum):
    """Whether time derivatives are real (gradient flow) or carry ``i`` (GPE)."""

    DISSIPATIVE = "dissipative"
    UNITARY = "unitary"

    @property
    def reversible(self) -> bool:
        return self is FlowRegime.UNITARY


class ModelParams(BaseModel):
    """Nonlinearity ``beta`` and trap frequency ``gamma`` of ``V = gamma^2 |x|^2 / 2``."""

    model_config = {"frozen": True}

    beta: float = Field(default=2.0, ge=0)
    gamma: float = Field(default=1.0, gt=0)


def _check_tau(tau: float, regime: FlowRegime) -> None:
    if tau < 0 and not regime.reversible:
        raise ValueError(f"negative step {tau} is not allowed for the {regime} regime")


def linear_propagator(
    basis: SpectralBasis, tau: float, regime: FlowRegime
) -> NDArray[np.complex128]:
    """Per-mode multipliers ``exp(-mu tau)`` or ``exp(-i mu tau)``."""
    _check_tau(tau, regime)
    if regime is FlowRegime.DISSIPATIVE:
        return np.exp(-basis.mu * tau).astype(np.complex128)
    return np.exp(-1j * basis.mu * tau)


def linear_flow(
    basis: SpectralBasis, field: GridField, tau: float, regime: FlowRegime
) -> GridField:
    """Exact flow of the harmonic-oscillator part over a step ``tau``."""
    propagator = linear_propagator(basis, tau, regime)
    if tau == 0:
        return field
    return _apply_propagator(basis, field, propagator)


def _apply_propagator(
    basis: SpectralBasis, field: GridField, propagator: NDArray[np.complex128]
) -> GridField:
    coeffs = forward(basis, field).coeffs
    return inverse(basis, SpectralField(coeffs * propagator))


def nonlinear_flow(
    field: GridField, tau: float, params: ModelParams, regime: FlowRegime
) -> GridField:
    """Exact pointwise flow of the cubic term over a step ``tau``."""
    _check_tau(tau, regime)
    if tau == 0 or params.beta == 0:
        return field
    psi = field.values
    density = psi.real**2 + psi.imag**2
    if regime is FlowRegime.DISSIPATIVE:
        return GridField(psi / np.sqrt(1.0 + 2.0 * params.beta * tau * density))
    return GridField(psi * np.exp(-1j * params.beta * tau * density))


class FlowPair:
    """The two subflows bound to one basis, model and regime.

    Every application is counted so callers can check how many basic steps a
    composite scheme issued.  Linear propagators are cached per step size.
    """

    def __init__(self, basis: SpectralBasis, params: ModelParams, regime: FlowRegime) -> None:
        if abs(basis.gamma - params.gamma) > 1e-14 * params.gamma:
            raise ValueError(
                f"basis gamma {basis.gamma} does not match model gamma {params.gamma}"
            )
        self.basis = basis
        self.params = params
        self.regime = regime
        self._propagators: dict[float, NDArray[np.complex128]] = {}
        self._lock = threading.Lock()
        self._applications = 0

    @property
    def applications(self) -> int:
        return self._applications

    def reset_count(self) -> None:
        with self._lock:
            self._applications = 0

    def _count(self) -> None:
        with self._lock:
            self._applications += 1

    def propagator(self, tau: float) -> NDArray[np.complex128]:
        """The cached linear propagator for ``tau``, built once per step size."""
        with self._lock:
            propagator = self._propagators.get(tau)
            if propagator is None:
                propagator = linear_propagator(self.basis, tau, self.regime)
                propagator.setflags(write=False)
                self._propagators[tau] = propagator
        return propagator

    def linear(self, field: GridField, tau: float) -> GridField:
        self._count()
        if tau == 0:
            _check_tau(tau, self.regime)
            return field
        return _apply_propagator(self.basis, field, self.propagator(tau))

    def nonlinear(self, field: GridField, tau: float) -> GridField:
        self._count()
        return nonlinear_flow(field, tau, self.params, self.regime)

    def __repr__(self) -> str:
        return f"FlowPair(regime={self.regime}, M={self.basis.M}, beta={self.params.beta})"
