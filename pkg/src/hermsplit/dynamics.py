"""Real-time GPE propagation with conservation and phase-rotation diagnostics."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from .context import SolverContext
from .flows import FlowPair, FlowRegime, ModelParams
from .hermite import GridField, SpectralBasis, hamiltonian, mass_norm
from .splitting import build_scheme, composite_step

logger = logging.getLogger(__name__)

MAX_RECORDS = 100_000
_STEP_MISMATCH = 1e-9


class EvolutionAborted(RuntimeError):
    """The state stopped being finite; carries the records gathered so far."""

    def __init__(self, message: str, records: Sequence[DiagnosticsRecord]) -> None:
        super().__init__(message)
        self.records = tuple(records)
        self.last_record = self.records[-1] if self.records else None


class PeriodError(ValueError):
    """Too few minima to measure a period."""


class EvolutionConfig(BaseModel):
    """Final time, step and order; ``tau`` may be negative to run backwards in time."""

    model_config = {"frozen": True}

    T: float = Field(gt=0)
    tau: float
    q: int = 2
    record_every: int | None = Field(default=None, ge=1)

    @field_validator("q")
    @classmethod
    def _even_order(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError(f"order must be an even integer >= 2, got {value}")
        return value

    @model_validator(mode="after")
    def _whole_number_of_steps(self) -> EvolutionConfig:
        if self.tau == 0:
            raise ValueError("tau must be nonzero")
        steps = round(self.T / abs(self.tau))
        if steps < 1 or abs(steps * abs(self.tau) - self.T) > _STEP_MISMATCH * abs(self.tau):
            raise ValueError(f"T={self.T} is not a whole number of steps of {abs(self.tau)}")
        return self

    @property
    def steps(self) -> int:
        return round(self.T / abs(self.tau))

    @property
    def record_interval(self) -> int:
        if self.record_every is not None:
            return self.record_every
        return max(1, math.ceil(self.steps / MAX_RECORDS))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E_M: float
    E_H: float
    dist_plain: float
    dist_rotating: float | None = None


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Recorded diagnostics and the final state of one evolution.

    ``stepping_seconds`` is the wall time spent inside composite steps only.
    """

    records: tuple[DiagnosticsRecord, ...]
    final: GridField
    steps: int
    flow_applications: int
    stepping_seconds: float

    @property
    def max_E_M(self) -> float:
        return max(r.E_M for r in self.records)

    @property
    def max_E_H(self) -> float:
        return max(r.E_H for r in self.records)


class _Diagnostics:
    def __init__(
        self,
        basis: SpectralBasis,
        params: ModelParams,
        psi0: GridField,
        mu: float | None,
    ) -> None:
        self.basis = basis
        self.beta = params.beta
        self.psi0 = psi0.values
        self.mu = mu
        self.mass0 = mass_norm(basis, psi0)
        self.energy0 = hamiltonian(basis, psi0, params.beta)

    def __call__(self, t: float, state: GridField) -> DiagnosticsRecord:
        mass = mass_norm(self.basis, state)
        energy = hamiltonian(self.basis, state, self.beta)
        rotating = None
        if self.mu is not None:
            rotating = float(np.max(np.abs(state.values - self.psi0 * np.exp(-1j * self.mu * t))))
        return DiagnosticsRecord(
            t=t,
            E_M=abs((mass - self.mass0) / self.mass0),
            E_H=abs((energy - self.energy0) / self.energy0),
            dist_plain=float(np.max(np.abs(state.values - self.psi0))),
            dist_rotating=rotating,
        )


def evolve(
    basis: SpectralBasis,
    params: ModelParams,
    config: EvolutionConfig,
    psi0: GridField,
    mu_for_rotation: float | None = None,
    *,
    ctx: SolverContext | None = None,
) -> EvolutionResult:
    """Step the unitary composite scheme from ``t = 0`` to ``t = steps * tau``."""
    if ctx is None:
        ctx = SolverContext()
    if mass_norm(basis, psi0) <= 0:
        raise ValueError("initial state has zero mass")

    scheme = build_scheme(config.q)
    flows = FlowPair(basis, params, FlowRegime.UNITARY)
    diagnose = _Diagnostics(basis, params, psi0, mu_for_rotation)
    steps, every = config.steps, config.record_interval
    logger.info(
        "Evolving q=%d tau=%g for %d steps (recording every %d)", config.q, config.tau, steps, every
    )

    records = [diagnose(0.0, psi0)]
    ctx.on_record(ctx, records[0])
    state = psi0
    elapsed = 0.0
    for j in range(1, steps + 1):
        started = time.perf_counter()
        state = composite_step(scheme, config.tau, state, flows, executor=ctx.executor)
        elapsed += time.perf_counter() - started

        if not np.all(np.isfinite(state.values)):
            raise EvolutionAborted(f"non-finite state at step {j}", records)
        t = j * config.tau
        ctx.on_step(ctx, j, t)
        if j % every == 0 or j == steps:
            record = diagnose(t, state)
            records.append(record)
            ctx.on_record(ctx, record)

    logger.info("Evolution finished in %.3f s of stepping", elapsed)
    return EvolutionResult(
        records=tuple(records),
        final=state,
        steps=steps,
        flow_applications=flows.applications,
        stepping_seconds=elapsed,
    )


def measure_period(records: Sequence[DiagnosticsRecord]) -> float:
    """Mean spacing between successive minima of ``dist_plain``.

    Interior minima are refined by a parabola through the three neighbouring
    samples; only minima below half the peak distance count.
    """
    if len(records) < 3:
        raise PeriodError(f"need at least three records, got {len(records)}")
    t = np.array([r.t for r in records])
    d = np.array([r.dist_plain for r in records])
    threshold = 0.5 * float(np.max(d))

    minima: list[float] = []
    if d[0] <= d[1] and d[0] < threshold:
        minima.append(float(t[0]))
    for i in range(1, len(d) - 1):
        if d[i] <= d[i - 1] and d[i] < d[i + 1] and d[i] < threshold:
            curvature = d[i - 1] - 2.0 * d[i] + d[i + 1]
            shift = 0.0
            if curvature > 0:
                shift = 0.5 * (d[i - 1] - d[i + 1]) / curvature
            minima.append(float(t[i] + shift * (t[i + 1] - t[i - 1]) / 2.0))

    if len(minima) < 2:
        raise PeriodError(f"found {len(minima)} minima; need at least 2")
    return float(np.mean(np.diff(minima)))


def rotation_frequency(period: float) -> float:
    """Angular frequency ``2 pi / period`` of a measured phase rotation."""
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    return 2.0 * math.pi / period


@dataclass(frozen=True)
class ConvergenceStudy:
    """Final-time L2 errors per (order, tau) against a reference run, with fitted slopes."""

    errors: dict[int, tuple[tuple[float, float], ...]]
    slopes: dict[int, float]
    reference: GridField


def convergence_slopes(
    basis: SpectralBasis,
    params: ModelParams,
    psi0: GridField,
    orders: Sequence[int],
    taus: Sequence[float],
    T: float,
    *,
    reference_order: int = 8,
    reference_tau: float = 2.0**-10,
    floor: float = 1e-12,
    reference: GridField | None = None,
) -> ConvergenceStudy:
    """Self-convergence study: fit ``log(error)`` against ``log(tau)`` above ``floor``.

    Pass the ``reference`` of an earlier study to compare further orders against the
    same final state without recomputing it.
    """
    if reference is None:
        reference_config = EvolutionConfig(
            T=T, tau=reference_tau, q=reference_order, record_every=10**9
        )
        reference = evolve(basis, params, reference_config, psi0).final

    errors: dict[int, tuple[tuple[float, float], ...]] = {}
    slopes: dict[int, float] = {}
    for q in orders:
        points = []
        for tau in taus:
            config = EvolutionConfig(T=T, tau=tau, q=q, record_every=10**9)
            final = evolve(basis, params, config, psi0).final
            points.append((tau, mass_norm(basis, final - reference)))
        errors[q] = tuple(points)
        usable = [(tau, err) for tau, err in points if err > floor]
        if len(usable) >= 2:
            x, y = np.log([p[0] for p in usable]), np.log([p[1] for p in usable])
            slopes[q] = float(np.polyfit(x, y, 1)[0])
        else:
            slopes[q] = math.nan
        logger.info("Order %d: observed slope %.3f", q, slopes[q])
    return ConvergenceStudy(errors=errors, slopes=slopes, reference=reference)
