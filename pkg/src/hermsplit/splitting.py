"""Symmetric splitting schemes of arbitrary even order with positive substeps.

A scheme of order ``q = 2n`` averages forward and backward Lie chains

    Phi(tau) = sum_m gamma_m (Phi+_m(tau/m) + Phi-_m(tau/m)),   m = 1..n

where ``Phi+_1 = nonlinear o linear`` (the linear flow acts first) and ``Phi-_1``
swaps the order; ``Phi+-_m`` repeats its one-step chain ``m`` times.  The weights
solve ``sum gamma_m = 1/2`` and ``sum m^(-2k) gamma_m = 0`` for ``1 <= k < n``.
Because both orderings are averaged, which flow is called first in ``Phi+`` does not
change the composite result.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import Executor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .flows import FlowPair
from .hermite import GridField

logger = logging.getLogger(__name__)

MAX_ORDER = 16

type Chain = Callable[[int, float, GridField, FlowPair], GridField]


@dataclass(frozen=True)
class SplittingScheme:
    """Order, stage count and extrapolation weights of a symmetric scheme."""

    order: int
    exact_weights: tuple[Fraction, ...]

    @property
    def stages(self) -> int:
        return len(self.exact_weights)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(float(g) for g in self.exact_weights)

    @property
    def step_count(self) -> int:
        """Basic flow applications per composite step, ``4 * sum m`` over nonzero weights."""
        return 4 * sum(m for m, g in enumerate(self.exact_weights, start=1) if g != 0)


def _solve_rational(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination in exact arithmetic."""
    size = len(rhs)
    rows = [row[:] + [value] for row, value in zip(matrix, rhs, strict=True)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            raise ValueError(f"weight system is singular at column {col}")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [value / lead for value in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col], strict=True)]
    return [row[-1] for row in rows]


def build_scheme(q: int) -> SplittingScheme:
    """Build the order-``q`` scheme with ``s = q/2`` stages."""
    if isinstance(q, bool) or not isinstance(q, int):
        raise TypeError(f"order must be an integer, got {type(q).__name__}")
    if q < 2 or q % 2:
        raise ValueError(f"order must be an even integer >= 2, got {q}")
    if q > MAX_ORDER:
        raise ValueError(f"order {q} exceeds the supported maximum {MAX_ORDER}")

    n = q // 2
    matrix = [[Fraction(1, m ** (2 * k)) for m in range(1, n + 1)] for k in range(n)]
    rhs = [Fraction(1, 2)] + [Fraction(0)] * (n - 1)
    scheme = SplittingScheme(order=q, exact_weights=tuple(_solve_rational(matrix, rhs)))
    logger.debug("Built order-%d scheme with weights %s", q, scheme.exact_weights)
    return scheme


def chain_plus(m: int, tau: float, state: GridField, flows: FlowPair) -> GridField:
    """``Phi+_m(tau)``: ``m`` repetitions of linear then nonlinear."""
    if m < 1:
        raise ValueError(f"chain length must be >= 1, got {m}")
    for _ in range(m):
        state = flows.nonlinear(flows.linear(state, tau), tau)
    return state


def chain_minus(m: int, tau: float, state: GridField, flows: FlowPair) -> GridField:
    """``Phi-_m(tau)``: ``m`` repetitions of nonlinear then linear."""
    if m < 1:
        raise ValueError(f"chain length must be >= 1, got {m}")
    for _ in range(m):
        state = flows.linear(flows.nonlinear(state, tau), tau)
    return state


def composite_step(
    scheme: SplittingScheme,
    tau: float,
    state: GridField,
    flows: FlowPair,
    *,
    executor: Executor | None = None,
) -> GridField:
    """Advance ``state`` by one composite step of size ``tau``.

    All ``2s`` chains start from the same state.  With an ``executor`` they run
    concurrently; the weighted sum is always accumulated in the order
    ``m = 1..s``, plus before minus, so results do not depend on scheduling.
    """
    if tau < 0 and not flows.regime.reversible:
        raise ValueError(f"negative step {tau} is not allowed for the {flows.regime} regime")

    jobs: list[tuple[float, Chain, int]] = []
    for m, weight in enumerate(scheme.weights, start=1):
        if weight != 0:
            jobs.extend(((weight, chain_plus, m), (weight, chain_minus, m)))

    if executor is None:
        results = [chain(m, tau / m, state, flows) for _, chain, m in jobs]
    else:
        futures = [executor.submit(chain, m, tau / m, state, flows) for _, chain, m in jobs]
        results = [future.result() for future in futures]

    total = np.zeros(state.shape, dtype=np.complex128)
    for (weight, _, _), result in zip(jobs, results, strict=True):
        total += weight * result.values
    return GridField(total)
