"""Normalized gradient flow for the ground state under a mass constraint.

Each iteration applies one dissipative composite splitting step and rescales the
result back onto the sphere ``||psi|| = c``.  The descent stops when consecutive
iterates differ by at most ``stagnation_tol`` in the discrete L2 norm.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .context import SolverContext
from .flows import FlowPair, FlowRegime, ModelParams
from .hermite import GridField, SpectralBasis, chemical_potential, hamiltonian, mass_norm
from .splitting import build_scheme, composite_step

logger = logging.getLogger(__name__)

_ENERGY_SLACK = 1e-10
_DIVERGENCE_PATIENCE = 100


class DivergenceError(RuntimeError):
    """The Hamiltonian kept increasing during a descent."""

    def __init__(self, message: str, history: Sequence[DescentRecord]) -> None:
        super().__init__(message)
        self.history = tuple(history)


class GroundStateConfig(BaseModel):
    """Descent parameters; ``max_iters`` defaults to ``ceil(simulated_time / tau)``."""

    model_config = {"frozen": True}

    c: float = Field(default=1.0, gt=0)
    tau: float = Field(default=0.01, gt=0)
    q: int = 4
    max_iters: int | None = Field(default=None, ge=1)
    stagnation_tol: float = Field(default=1e-15, ge=0)
    simulated_time: float = Field(default=30.0, gt=0)

    @field_validator("q")
    @classmethod
    def _even_order(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError(f"order must be an even integer >= 2, got {value}")
        return value

    @property
    def iteration_limit(self) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return max(1, math.ceil(self.simulated_time / self.tau - 1e-9))


@dataclass(frozen=True)
class DescentRecord:
    iteration: int
    sim_time: float
    residual: float
    H: float


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    """Converged (or last) state with its energy, chemical potential and history."""

    state: GridField
    H_min: float
    mu_ch: float
    T_mu: float
    iterations: int
    converged: bool
    residual_history: tuple[DescentRecord, ...]
    refinements: tuple[tuple[float, float], ...] = field(default=())
    extrapolated_H: float | None = None


def phase_fix(values: GridField) -> GridField:
    """Rotate by a unit scalar so the largest-magnitude sample is real and positive."""
    flat = values.values.ravel()
    pivot = flat[int(np.argmax(np.abs(flat)))]
    if pivot == 0:
        return values
    return values * (abs(pivot) / pivot)


def state_distance(a: GridField, b: GridField) -> float:
    """Grid infinity-norm distance after fixing the global phase of both states."""
    return float(np.max(np.abs(phase_fix(a).values - phase_fix(b).values)))


def descend(
    basis: SpectralBasis,
    params: ModelParams,
    config: GroundStateConfig,
    seed: GridField,
    *,
    ctx: SolverContext | None = None,
) -> GroundStateResult:
    """Run the normalized gradient flow from ``seed``."""
    if ctx is None:
        ctx = SolverContext()
    if mass_norm(basis, seed) == 0:
        raise ValueError("seed has zero mass")

    scheme = build_scheme(config.q)
    flows = FlowPair(basis, params, FlowRegime.DISSIPATIVE)
    limit = config.iteration_limit
    logger.info(
        "Descending with q=%d tau=%g c=%g (at most %d iterations)",
        config.q,
        config.tau,
        config.c,
        limit,
    )

    state = seed
    history: list[DescentRecord] = []
    previous_H: float | None = None
    increases = 0
    converged = False

    for j in range(1, limit + 1):
        stepped = composite_step(scheme, config.tau, state, flows, executor=ctx.executor)
        norm = mass_norm(basis, stepped)
        if not math.isfinite(norm) or norm == 0:
            raise DivergenceError(f"state lost its mass at iteration {j}", history)
        updated = stepped * (config.c / norm)

        record = DescentRecord(
            iteration=j,
            sim_time=j * config.tau,
            residual=mass_norm(basis, updated - state),
            H=hamiltonian(basis, updated, params.beta),
        )
        history.append(record)
        ctx.on_iteration(ctx, record)

        if previous_H is not None and record.H > previous_H + _ENERGY_SLACK:
            increases += 1
            if increases > _DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"Hamiltonian increased for {increases} consecutive iterations", history
                )
        else:
            increases = 0
        previous_H = record.H
        state = updated

        if record.residual <= config.stagnation_tol:
            converged = True
            break

    mu = chemical_potential(basis, state, params.beta, config.c)
    last = history[-1]
    logger.info(
        "Descent %s after %d iterations: H=%.15g residual=%.3g",
        "converged" if converged else "stopped",
        last.iteration,
        last.H,
        last.residual,
    )
    return GroundStateResult(
        state=state,
        H_min=last.H,
        mu_ch=mu,
        T_mu=2.0 * math.pi / mu,
        iterations=last.iteration,
        converged=converged,
        residual_history=tuple(history),
    )


def richardson_limit(taus: Sequence[float], energies: Sequence[float]) -> float:
    """Extrapolate ``H(tau) -> H(0)`` from the last three points of a geometric schedule.

    The convergence order is estimated from the same three points.
    """
    if len(taus) != len(energies) or len(taus) < 3:
        raise ValueError("need at least three (tau, H) pairs")
    t1, t2, t3 = taus[-3:]
    e1, e2, e3 = energies[-3:]
    ratio = t1 / t2
    if not math.isclose(ratio, t2 / t3, rel_tol=1e-9) or ratio <= 1:
        raise ValueError("extrapolation needs a geometric, decreasing tau schedule")
    upper, lower = e1 - e2, e2 - e3
    if lower == 0 or upper == 0 or (upper > 0) != (lower > 0):
        return e3
    order = math.log(upper / lower) / math.log(ratio)
    return e3 + (e3 - e2) / (ratio**order - 1.0)


def refine_tau(
    basis: SpectralBasis,
    params: ModelParams,
    base_config: GroundStateConfig,
    tau_schedule: Sequence[float],
    seed: GridField | None = None,
    *,
    ctx: SolverContext | None = None,
) -> GroundStateResult:
    """Descend for each step size of a decreasing schedule, warm-starting each run.

    The result is the last descent, annotated with the ``(tau, H)`` sequence and,
    for geometric schedules of three or more entries, the extrapolated ``tau -> 0``
    energy.
    """
    if not tau_schedule:
        raise ValueError("tau schedule must not be empty")
    if any(t <= 0 for t in tau_schedule):
        raise ValueError(f"tau schedule must be positive, got {list(tau_schedule)}")
    if any(b >= a for a, b in zip(tau_schedule, tau_schedule[1:], strict=False)):
        raise ValueError(f"tau schedule must be strictly decreasing, got {list(tau_schedule)}")

    state = basis.sample(0, 0) if seed is None else seed
    refinements: list[tuple[float, float]] = []
    result: GroundStateResult | None = None
    for tau in tau_schedule:
        config = base_config.model_copy(update={"tau": tau})
        result = descend(basis, params, config, state, ctx=ctx)
        refinements.append((tau, result.H_min))
        state = result.state
        logger.info("Refined tau=%g: H=%.15g", tau, result.H_min)

    assert result is not None
    extrapolated = None
    if len(refinements) >= 3:
        taus, energies = zip(*refinements, strict=True)
        try:
            extrapolated = richardson_limit(taus, energies)
        except ValueError:
            logger.debug("Schedule is not geometric; skipping extrapolation")

    return GroundStateResult(
        state=result.state,
        H_min=result.H_min,
        mu_ch=result.mu_ch,
        T_mu=result.T_mu,
        iterations=result.iterations,
        converged=result.converged,
        residual_history=result.residual_history,
        refinements=tuple(refinements),
        extrapolated_H=extrapolated,
    )
