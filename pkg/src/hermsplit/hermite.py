"""Gauss-Hermite quadrature, Hermite-function basis and spectral transforms.

The 1D basis functions for trap frequency ``gamma`` are

    h_n(z) = (gamma/pi)^(1/4) / sqrt(2^n n!) * exp(-gamma z^2 / 2) * H_n(sqrt(gamma) z)

and ``h_{k,l}(x, y) = h_k(x) h_l(y)``.  The argument ``sqrt(gamma) z`` (rather than
``gamma z``) is the only choice that keeps the discrete orthogonality ``G @ E == I``
for ``gamma != 1``; both forms agree at ``gamma == 1``.  The 2D prefactor is the
product of the 1D ones, ``(gamma/pi)^(1/2)``.

Hermite functions are never built from raw factorials or raw polynomials.  The
normalized three-term recurrence carries the Gaussian factor from the first term, so
values stay finite well beyond ``M = 64``.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

_PI_QUARTER = math.pi**-0.25
_MAX_NEWTON = 100
_NEWTON_TOL = 1e-14
_MASS_RTOL = 1e-10


class QuadratureError(RuntimeError):
    """Root finding for a quadrature node did not converge."""


class MassMismatchError(ValueError):
    """A field's discrete norm differs from the requested mass constraint."""


def _readonly(values: NDArray) -> NDArray:
    values.setflags(write=False)
    return values


def _recurrence(n: int, x: float) -> tuple[float, float]:
    """Return ``(psi_n(x), psi_{n-1}(x))`` for the unscaled orthonormal functions."""
    current = _PI_QUARTER * math.exp(-0.5 * x * x)
    previous = 0.0
    for j in range(n):
        current, previous = (
            math.sqrt(2.0 / (j + 1)) * x * current - math.sqrt(j / (j + 1)) * previous,
            current,
        )
    return current, previous


def _tricomi_estimate(n: int, k: int) -> float:
    """Estimate the k-th largest zero of H_n (k = 1 is the largest).

    Solves ``t - sin t = pi (4k - 1) / (2n + 1)`` and maps ``t`` back through
    ``x = sqrt(2n + 1) cos(t / 2)``.
    """
    target = math.pi * (4 * k - 1) / (2 * n + 1)
    t = (6.0 * target) ** (1.0 / 3.0)
    for _ in range(50):
        step = (t - math.sin(t) - target) / (1.0 - math.cos(t))
        t = min(max(t - step, 1e-12), 2.0 * math.pi - 1e-12)
        if abs(step) < 1e-15:
            break
    return math.sqrt(2 * n + 1) * math.cos(0.5 * t)


def _newton_root(n: int, x: float, index: int) -> float:
    for _ in range(_MAX_NEWTON):
        value, lower = _recurrence(n, x)
        slope = math.sqrt(2.0 * n) * lower - x * value
        if slope == 0.0:
            break
        step = value / slope
        x -= step
        if abs(step) <= _NEWTON_TOL * max(1.0, abs(x)):
            return x
    raise QuadratureError(f"Newton iteration for node {index} of H_{n} did not converge")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Scaled Gauss-Hermite nodes and function-space weights.

    The weights already include the ``exp(gamma z^2)`` factor, so
    ``sum(w * f(z))`` approximates ``integral f(z) dz`` directly.
    """

    gamma: float
    M: int
    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]

    @property
    def size(self) -> int:
        return self.M + 1

    def integrate(self, values: ArrayLike) -> float:
        """Approximate ``integral f dz`` from samples of ``f`` at the nodes."""
        return float(np.dot(self.weights, np.asarray(values, dtype=np.float64)))


def build_rule(gamma: float, M: int) -> QuadratureRule:
    """Build the (M+1)-point rule from the zeros of H_{M+1}, scaled by gamma^(-1/2)."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if M < 0:
        raise ValueError(f"M must be non-negative, got {M}")

    n = M + 1
    positive: list[float] = []
    for k in range(1, n // 2 + 1):
        root = _newton_root(n, _tricomi_estimate(n, k), index=n - k)
        if positive and not root < positive[-1]:
            raise QuadratureError(f"node {n - k} of H_{n} collapsed onto its neighbour")
        positive.append(root)

    half = np.array(positive[::-1], dtype=np.float64)
    middle = np.zeros(1) if n % 2 else np.zeros(0)
    unscaled = np.concatenate([-half[::-1], middle, half])

    # w = 1 / ((M+1) psi_M(x)^2) is the Gauss weight times exp(x^2)
    lower = np.array([_recurrence(n, x)[1] for x in unscaled])
    raw_weights = 1.0 / (n * lower * lower)
    raw_weights = 0.5 * (raw_weights + raw_weights[::-1])

    scale = gamma**-0.5
    logger.debug("Built %d-point Gauss-Hermite rule (gamma=%g)", n, gamma)
    return QuadratureRule(
        gamma=gamma,
        M=M,
        nodes=_readonly(scale * unscaled),
        weights=_readonly(scale * raw_weights),
    )


def hermite_function_table(n_max: int, gamma: float, z: ArrayLike) -> NDArray[np.float64]:
    """Evaluate ``h_0 .. h_{n_max}`` at every point of ``z``; the last axis is the order."""
    x = np.sqrt(gamma) * np.asarray(z, dtype=np.float64)
    table = np.empty(x.shape + (n_max + 1,), dtype=np.float64)
    table[..., 0] = gamma**0.25 * _PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        table[..., 1] = math.sqrt(2.0) * x * table[..., 0]
    for j in range(1, n_max):
        table[..., j + 1] = (
            math.sqrt(2.0 / (j + 1)) * x * table[..., j] - math.sqrt(j / (j + 1)) * table[..., j - 1]
        )
    return table


def eval_hermite_function(n: int, gamma: float, z: float) -> float:
    """Evaluate the scaled 1D Hermite function h_n at a single point."""
    if n < 0:
        raise ValueError(f"Hermite order must be non-negative, got {n}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    value, _ = _recurrence(n, math.sqrt(gamma) * z)
    return gamma**0.25 * value


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex samples ``psi(z_r, z_s)`` on the tensor quadrature grid."""

    values: NDArray[np.complex128]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"grid field must be a square matrix, got shape {values.shape}")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    def __add__(self, other: GridField) -> GridField:
        return GridField(self.values + other.values)

    def __sub__(self, other: GridField) -> GridField:
        return GridField(self.values - other.values)

    def __mul__(self, scalar: complex) -> GridField:
        return GridField(self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Hermite coefficients ``a_{k,l}``."""

    coeffs: NDArray[np.complex128]

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
            raise ValueError(f"spectral field must be a square matrix, got shape {coeffs.shape}")
        object.__setattr__(self, "coeffs", _readonly(coeffs))

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Evaluation table ``E[r, k] = h_k(z_r)``, transform ``G[k, r] = h_k(z_r) w_r``
    and eigenvalues ``mu[k, l] = gamma (k + l + 1)``."""

    rule: QuadratureRule
    eval_table: NDArray[np.float64]
    transform: NDArray[np.float64]
    mu: NDArray[np.float64]

    @property
    def gamma(self) -> float:
        return self.rule.gamma

    @property
    def M(self) -> int:
        return self.rule.M

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rule.size, self.rule.size)

    def sample(self, k: int, l: int) -> GridField:  # noqa: E741
        """Grid restriction of ``h_{k,l}``."""
        if not (0 <= k <= self.M and 0 <= l <= self.M):
            raise ValueError(f"mode ({k}, {l}) is outside the basis 0..{self.M}")
        return GridField(np.outer(self.eval_table[:, k], self.eval_table[:, l]))

    def from_coefficients(self, coeffs: dict[tuple[int, int], complex]) -> GridField:
        """Grid samples of ``sum a_{k,l} h_{k,l}`` for a sparse set of modes."""
        dense = np.zeros(self.shape, dtype=np.complex128)
        for (k, l), value in coeffs.items():  # noqa: E741
            dense[k, l] = value
        return inverse(self, SpectralField(dense))


@functools.lru_cache(maxsize=32)
def build_basis(gamma: float, M: int) -> SpectralBasis:
    """Build the spectral basis for ``H_{M,2}``; instances are immutable and cached."""
    rule = build_rule(gamma, M)
    root_w = np.sqrt(rule.weights)[:, None]
    # diag(sqrt w) E is orthogonal in exact arithmetic; replace it by its polar factor
    # so the grid/coefficient round trip has no systematic norm bias
    U, _, Vt = np.linalg.svd(root_w * hermite_function_table(M, gamma, rule.nodes))
    Q = U @ Vt
    table = Q / root_w
    transform = (Q * root_w).T
    index = np.arange(M + 1, dtype=np.float64)
    mu = gamma * (index[:, None] + index[None, :] + 1.0)
    return SpectralBasis(
        rule=rule,
        eval_table=_readonly(table),
        transform=_readonly(np.ascontiguousarray(transform)),
        mu=_readonly(mu),
    )


def _check_shape(basis: SpectralBasis, shape: tuple[int, ...]) -> None:
    if shape != basis.shape:
        raise ValueError(f"field shape {shape} does not match basis shape {basis.shape}")


def forward(basis: SpectralBasis, field: GridField) -> SpectralField:
    """Project grid samples onto Hermite coefficients, ``a = G psi G^T``."""
    _check_shape(basis, field.shape)
    G = basis.transform
    return SpectralField(G @ field.values @ G.T)


def inverse(basis: SpectralBasis, spec: SpectralField) -> GridField:
    """Evaluate the truncated series at the grid, ``psi = E a E^T``."""
    _check_shape(basis, spec.shape)
    E = basis.eval_table
    return GridField(E @ spec.coeffs @ E.T)


def mass_norm(basis: SpectralBasis, field: GridField) -> float:
    """Discrete L2 norm, the Frobenius norm of ``G psi G^T``."""
    return float(np.linalg.norm(forward(basis, field).coeffs))


def quadratic_energy(basis: SpectralBasis, spec: SpectralField) -> float:
    """``<psi, (-1/2 Laplacian + V) psi>`` evaluated as ``sum mu |a|^2``."""
    _check_shape(basis, spec.shape)
    return float(np.sum(basis.mu * np.abs(spec.coeffs) ** 2))


@functools.lru_cache(maxsize=32)
def _refined_grid(gamma: float, M: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    fine = build_rule(gamma, 2 * M + 1)
    return hermite_function_table(M, gamma, fine.nodes), fine.weights


def quartic_integral(basis: SpectralBasis, field: GridField, *, refine: bool = False) -> float:
    """Quadrature of ``|psi|^4``.

    The native rule reuses the field samples with the function-space weights.  With
    ``refine`` the series is re-evaluated on a rule of ``2M + 2`` nodes first.
    """
    _check_shape(basis, field.shape)
    if refine:
        table, weights = _refined_grid(basis.gamma, basis.M)
        coeffs = forward(basis, field).coeffs
        samples = table @ coeffs @ table.T
    else:
        weights = basis.rule.weights
        samples = field.values
    density = np.abs(samples) ** 2
    return float(weights @ (density * density) @ weights)


def hamiltonian(
    basis: SpectralBasis, field: GridField, beta: float, *, refine: bool = False
) -> float:
    """Discrete GPE energy ``sum mu |a|^2 + beta/2 * integral |psi|^4``."""
    energy = quadratic_energy(basis, forward(basis, field))
    if beta:
        energy += 0.5 * beta * quartic_integral(basis, field, refine=refine)
    return energy


def chemical_potential(
    basis: SpectralBasis, field: GridField, beta: float, c: float, *, refine: bool = False
) -> float:
    """Chemical potential of a state with mass ``c``; the quartic term enters with ``beta``."""
    if c <= 0:
        raise ValueError(f"mass constraint must be positive, got {c}")
    spec = forward(basis, field)
    norm = float(np.linalg.norm(spec.coeffs))
    if abs(norm - c) > _MASS_RTOL * c:
        raise MassMismatchError(f"field norm {norm:.17g} does not match mass constraint {c}")
    energy = quadratic_energy(basis, spec)
    if beta:
        energy += beta * quartic_integral(basis, field, refine=refine)
    return energy / (c * c)
