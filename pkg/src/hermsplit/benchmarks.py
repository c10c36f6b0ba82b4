"""Benchmark runners: ground-state convergence, invariant preservation, cost vs accuracy.

Each runner takes a resolved :class:`~hermsplit.config.RunConfig`, writes its CSV
tables and ``artifact.json`` below ``config.output_dir / config.benchmark`` and
returns the :class:`~hermsplit.report.Artifacts` it recorded.  Acceptance checks
against the published numbers only apply when the run uses the published setup.
"""

from __future__ import annotations

import logging
import math
import statistics
import time
from collections.abc import Callable, Iterator
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from .config import RunConfig
from .context import SolverContext
from .dynamics import (
    EvolutionConfig,
    EvolutionResult,
    PeriodError,
    convergence_slopes,
    evolve,
    measure_period,
    rotation_frequency,
)
from .flows import ModelParams
from .ground_state import GroundStateConfig, GroundStateResult, descend, refine_tau, state_distance
from .hermite import build_basis
from .report import Artifacts, write_csv
from .seeds import make_seed
from .splitting import build_scheme

logger = logging.getLogger(__name__)

type BenchmarkRunner = Callable[[RunConfig, SolverContext | None], Artifacts]

_benchmark_registry: dict[str, BenchmarkRunner] = {}

PUBLISHED_H_MIN = {"paper_seed_1": 1.14672998984857, "h00": 1.146729989848536}
PUBLISHED_H_REFINED = 1.146728491833
PUBLISHED_PERIODS = {0.25: 5.834, 1.0: 4.898, 2.0: 4.144}

_H_MIN_TOL = 1e-9
_H_REFINED_TOL = 5e-11
_SEED_DISTANCE_TOL = 1e-13
_PERIOD_TOL = 0.005
_RATIO_FACTOR = 2.0
_CPU_SLOPE_TOL = 0.15
_CPU_SLOPE_MIN_STEPS = 256
_ORDER_STUDY_TAUS = tuple(2.0**-k for k in range(3, 8))
_ORDER_STUDY_MAX_Q = 6
_SLOPE_TOL = 0.5
_ORDER_ERROR_FLOOR = 1e-12

_DESCENT_FIELDS = ("iteration", "sim_time", "residual", "H")
_DIAGNOSTIC_FIELDS = ("t", "E_M", "E_H", "dist_plain", "dist_rotating")
_COST_FIELDS = ("q", "tau", "status", "cpu_seconds", "max_E_M", "max_E_H", "flow_count", "steps")


class CellTimeout(RuntimeError):
    """A benchmark cell ran past its time budget."""


class CostRecord(BaseModel):
    """Cost and accuracy of one ``(q, tau)`` cell."""

    model_config = {"frozen": True}

    q: int
    tau: float
    cpu_seconds: float = Field(gt=0)
    max_E_M: float
    max_E_H: float
    flow_count: int = 0
    steps: int = 0


def benchmark(name: str):
    """Register a runner under a benchmark name."""

    def decorator(runner: BenchmarkRunner) -> BenchmarkRunner:
        if name in _benchmark_registry:
            raise ValueError(f"Duplicate benchmark: '{name}' is already registered")
        _benchmark_registry[name] = runner
        return runner

    return decorator


def benchmark_names() -> list[str]:
    return sorted(_benchmark_registry)


def run(config: RunConfig, *, ctx: SolverContext | None = None) -> Artifacts:
    """Run the benchmark named by ``config.benchmark``."""
    try:
        runner = _benchmark_registry[config.benchmark]
    except KeyError:
        raise ValueError(f"Unknown benchmark: '{config.benchmark}'") from None
    return runner(config, ctx)


def _published_model(config: RunConfig) -> bool:
    return config.beta == 2.0 and config.gamma == 1.0 and config.M == 16


def _new_artifacts(config: RunConfig) -> Artifacts:
    return Artifacts(
        benchmark=config.benchmark,
        config=config.model_dump(mode="json"),
        config_hash=config.digest(),
    )


def _benchmark_dir(config: RunConfig) -> Path:
    path = config.output_dir / config.benchmark
    path.mkdir(parents=True, exist_ok=True)
    return path


@contextmanager
def _chain_executor(workers: int) -> Iterator[Executor | None]:
    """Thread pool for the chains of a composite step, or nothing when single-threaded."""
    if workers <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="chain") as pool:
        yield pool


@contextmanager
def _bound_executor(ctx: SolverContext, workers: int) -> Iterator[None]:
    """Give ``ctx`` a chain pool for the duration, unless the caller already set one."""
    if ctx.executor is not None:
        yield
        return
    with _chain_executor(workers) as executor:
        ctx.executor = executor
        try:
            yield
        finally:
            ctx.executor = None


def _descent_config(config: RunConfig, c: float, *, tau: float, q: int) -> GroundStateConfig:
    return GroundStateConfig(
        c=c,
        tau=tau,
        q=q,
        stagnation_tol=config.stagnation_tol,
        simulated_time=config.gs_time,
    )


@benchmark("ground_state")
def run_benchmark_I(config: RunConfig, ctx: SolverContext | None = None) -> Artifacts:
    """Descend from every configured seed and compare the converged states."""
    if config.benchmark != "ground_state":
        raise ValueError(f"expected a ground_state config, got '{config.benchmark}'")
    ctx = ctx or SolverContext()
    out = _benchmark_dir(config)
    artifacts = _new_artifacts(config)
    basis = build_basis(config.gamma, config.M)
    c, tau, q = config.c_values[0], config.taus[0], config.orders[0]
    gs_config = _descent_config(config, c, tau=tau, q=q)
    published = _published_model(config) and c == 1.0 and tau == 0.01 and q == 4
    logger.info("Benchmark I: %d seed(s), q=%d tau=%g c=%g", len(config.seeds), q, tau, c)

    results: dict[str, GroundStateResult] = {}
    with _bound_executor(ctx, config.chain_workers):
        for name in config.seeds:
            result = descend(basis, config.model, gs_config, make_seed(name, basis, config.model), ctx=ctx)
            results[name] = result
            path = out / f"descent_{name}.csv"
            artifacts.rows += write_csv(
                path, _DESCENT_FIELDS, (asdict(r) for r in result.residual_history)
            )
            artifacts.files.append(str(path))
            artifacts.key_numbers[f"H_min[{name}]"] = result.H_min
            artifacts.key_numbers[f"residual[{name}]"] = result.residual_history[-1].residual
            artifacts.key_numbers[f"iterations[{name}]"] = result.iterations
            artifacts.key_numbers[f"mu_ch[{name}]"] = result.mu_ch
            if published and name in PUBLISHED_H_MIN:
                error = abs(result.H_min - PUBLISHED_H_MIN[name])
                artifacts.check(
                    f"H_min[{name}]", error <= _H_MIN_TOL, f"|H - {PUBLISHED_H_MIN[name]}| = {error:.3g}"
                )

        names = list(results)
        for first, second in zip(names, names[1:], strict=False):
            distance = state_distance(results[first].state, results[second].state)
            artifacts.key_numbers[f"distance[{first},{second}]"] = distance
            artifacts.check(
                f"seed_independence[{first},{second}]",
                distance <= _SEED_DISTANCE_TOL,
                f"grid max distance {distance:.3g}",
            )

        if config.refine_schedule:
            refined = refine_tau(
                basis,
                config.model,
                gs_config,
                config.refine_schedule,
                results[names[0]].state,
                ctx=ctx,
            )
            path = out / "refinement.csv"
            artifacts.rows += write_csv(
                path, ("tau", "H"), ({"tau": t, "H": h} for t, h in refined.refinements)
            )
            artifacts.files.append(str(path))
            artifacts.key_numbers["H_refined"] = refined.H_min
            artifacts.key_numbers["H_extrapolated"] = refined.extrapolated_H
            if _published_model(config) and c == 1.0 and q == 4 and refined.extrapolated_H is not None:
                error = abs(refined.extrapolated_H - PUBLISHED_H_REFINED)
                artifacts.check(
                    "H_extrapolated", error <= _H_REFINED_TOL, f"|H - {PUBLISHED_H_REFINED}| = {error:.3g}"
                )

    artifacts.save(out)
    return artifacts


def _evolution_rows(result: EvolutionResult) -> Iterator[dict[str, float | None]]:
    for record in result.records:
        yield asdict(record)


@benchmark("invariants")
def run_benchmark_II(config: RunConfig, ctx: SolverContext | None = None) -> Artifacts:
    """Propagate ground states in real time and measure their phase-rotation period."""
    if config.benchmark != "invariants":
        raise ValueError(f"expected an invariants config, got '{config.benchmark}'")
    ctx = ctx or SolverContext()
    out = _benchmark_dir(config)
    artifacts = _new_artifacts(config)
    basis = build_basis(config.gamma, config.M)
    tau = config.taus[0]
    seed_name = config.seeds[0]
    logger.info("Benchmark II: c=%s, orders %s, tau=%g", config.c_values, config.orders, tau)

    with _bound_executor(ctx, config.chain_workers):
        for c in config.c_values:
            # c_values are masses; descend normalizes to the L2 norm sqrt(c)
            gs_config = _descent_config(config, math.sqrt(c), tau=config.gs_tau, q=config.gs_order)
            ground = descend(basis, config.model, gs_config, make_seed(seed_name, basis, config.model), ctx=ctx)
            T = config.T if config.T is not None else 3.0 * math.ceil(ground.T_mu)
            label = f"c={c:g}"
            artifacts.key_numbers[f"mu_ch[{label}]"] = ground.mu_ch
            artifacts.key_numbers[f"T_mu[{label}]"] = ground.T_mu
            artifacts.key_numbers[f"H_min[{label}]"] = ground.H_min

            orders = config.orders if math.isclose(c, config.comparison_c) else config.orders[:1]
            maxima: dict[int, tuple[float, float]] = {}
            for q in orders:
                ev_config = EvolutionConfig(T=T, tau=tau, q=q, record_every=config.record_every)
                result = evolve(basis, config.model, ev_config, ground.state, ground.mu_ch, ctx=ctx)
                path = out / f"diagnostics_c{c:g}_q{q}.csv"
                artifacts.rows += write_csv(path, _DIAGNOSTIC_FIELDS, _evolution_rows(result))
                artifacts.files.append(str(path))
                maxima[q] = (result.max_E_M, result.max_E_H)
                artifacts.key_numbers[f"max_E_M[{label},q={q}]"] = result.max_E_M
                artifacts.key_numbers[f"max_E_H[{label},q={q}]"] = result.max_E_H

                try:
                    period = measure_period(result.records)
                except PeriodError as exc:
                    artifacts.check(f"period[{label},q={q}]", False, str(exc))
                    continue
                artifacts.key_numbers[f"period[{label},q={q}]"] = period
                artifacts.key_numbers[f"omega[{label},q={q}]"] = rotation_frequency(period)
                gap = abs(period - ground.T_mu)
                artifacts.check(
                    f"period_matches_mu[{label},q={q}]",
                    gap <= 2.0 * tau,
                    f"|{period:.6f} - {ground.T_mu:.6f}| = {gap:.3g}",
                )
                if q == orders[0] and _published_model(config) and c in PUBLISHED_PERIODS:
                    expected = PUBLISHED_PERIODS[c]
                    artifacts.check(
                        f"published_period[{label}]",
                        abs(period - expected) <= _PERIOD_TOL,
                        f"measured {period:.4f}, published {expected}",
                    )

            base = orders[0]
            for q in orders[1:]:
                better = maxima[q][0] < maxima[base][0] and maxima[q][1] < maxima[base][1]
                artifacts.check(
                    f"conservation[{label},q={q}<q={base}]",
                    better,
                    f"E_M {maxima[q][0]:.3g} vs {maxima[base][0]:.3g}, "
                    f"E_H {maxima[q][1]:.3g} vs {maxima[base][1]:.3g}",
                )

    artifacts.save(out)
    return artifacts


@dataclass(frozen=True)
class CellTask:
    """Everything a worker process needs to time one ``(q, tau)`` cell."""

    q: int
    tau: float
    T: float
    M: int
    model: ModelParams
    seed: str
    repeats: int
    timeout: float | None = None
    chain_workers: int = 1
    record_every: int | None = None


def _deadline_guard(task: CellTask) -> Callable[[SolverContext, int, float], None]:
    assert task.timeout is not None
    deadline = time.monotonic() + task.timeout

    def _check(ctx: SolverContext, step: int, t: float) -> None:
        if time.monotonic() > deadline:
            raise CellTimeout(
                f"cell q={task.q} tau={task.tau:g} exceeded {task.timeout:g} s at step {step}"
            )

    return _check


def run_cell(task: CellTask) -> CostRecord:
    """Evolve one cell ``repeats`` times; the CPU time is the median stepping time."""
    basis = build_basis(task.model.gamma, task.M)
    psi0 = make_seed(task.seed, basis, task.model)
    config = EvolutionConfig(T=task.T, tau=task.tau, q=task.q, record_every=task.record_every)

    timings: list[float] = []
    first: EvolutionResult | None = None
    guard = _deadline_guard(task) if task.timeout is not None else None
    with _chain_executor(task.chain_workers) as executor:
        for _ in range(task.repeats):
            ctx = SolverContext(executor=executor)
            if guard is not None:
                ctx.on_step += guard
            result = evolve(basis, task.model, config, psi0, ctx=ctx)
            timings.append(result.stepping_seconds)
            first = first or result

    assert first is not None
    return CostRecord(
        q=task.q,
        tau=task.tau,
        cpu_seconds=statistics.median(timings),
        max_E_M=first.max_E_M,
        max_E_H=first.max_E_H,
        flow_count=first.flow_applications,
        steps=first.steps,
    )


def _cost_row(task: CellTask, record: CostRecord | None, status: str) -> dict[str, object]:
    if record is None:
        return {"q": task.q, "tau": task.tau, "status": status}
    return {**record.model_dump(), "status": status}


def cpu_ratio_table(records: list[CostRecord]) -> dict[int, tuple[float, float]]:
    """Mean CPU time per order relative to ``q = 2`` over the step sizes both completed.

    Returns ``{q: (observed, theoretical)}`` where the theoretical ratio is the
    step-count ratio ``q(q/2 + 1) / 4``.
    """
    baseline = {r.tau: r.cpu_seconds for r in records if r.q == 2}
    if not baseline:
        return {}
    table: dict[int, tuple[float, float]] = {}
    for q in sorted({r.q for r in records}):
        cells = {r.tau: r.cpu_seconds for r in records if r.q == q and r.tau in baseline}
        if not cells:
            continue
        observed = float(np.mean(list(cells.values())) / np.mean([baseline[t] for t in cells]))
        table[q] = (observed, q * (q // 2 + 1) / 4)
    return table


def _cpu_slope(records: list[CostRecord], q: int) -> float | None:
    points = [(r.tau, r.cpu_seconds) for r in records if r.q == q and r.steps >= _CPU_SLOPE_MIN_STEPS]
    if len(points) < 3:
        return None
    x, y = np.log([p[0] for p in points]), np.log([p[1] for p in points])
    return float(np.polyfit(x, y, 1)[0])


def _collect_cells(
    tasks: list[CellTask], config: RunConfig, ctx: SolverContext
) -> list[tuple[CellTask, CostRecord | None, str]]:
    """Run every cell, in a process pool when more than one worker is configured.

    Results come back in task order whatever the completion order.
    """
    outcomes: list[tuple[CellTask, CostRecord | None, str]] = []

    def _settle(task: CellTask, call: Callable[[], CostRecord]) -> None:
        try:
            record = call()
        except CellTimeout as exc:
            logger.warning("%s; marking the cell absent", exc)
            outcomes.append((task, None, "timeout"))
            return
        except Exception as exc:
            ctx.on_cell_failed(ctx, task, exc)
            if not ctx.continue_on_error:
                raise
            logger.error("Cell q=%d tau=%g failed", task.q, task.tau, exc_info=exc)
            outcomes.append((task, None, "failed"))
            return
        ctx.on_cell_finish(ctx, record)
        logger.info(
            "Cell q=%d tau=%g: %.4g s, E_M=%.3g, E_H=%.3g",
            task.q,
            task.tau,
            record.cpu_seconds,
            record.max_E_M,
            record.max_E_H,
        )
        outcomes.append((task, record, "ok"))

    if config.workers <= 1:
        for task in tasks:
            ctx.on_cell_start(ctx, task)
            _settle(task, lambda task=task: run_cell(task))
        return outcomes

    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        futures = []
        for task in tasks:
            ctx.on_cell_start(ctx, task)
            futures.append(pool.submit(run_cell, task))
        for task, future in zip(tasks, futures, strict=True):
            _settle(task, future.result)
    return outcomes


@benchmark("cost_accuracy")
def run_benchmark_III(config: RunConfig, ctx: SolverContext | None = None) -> Artifacts:
    """Time every ``(q, tau)`` cell and relate its cost to its conservation errors."""
    if config.benchmark != "cost_accuracy":
        raise ValueError(f"expected a cost_accuracy config, got '{config.benchmark}'")
    assert config.T is not None
    ctx = ctx or SolverContext()
    out = _benchmark_dir(config)
    artifacts = _new_artifacts(config)
    seed_name = config.seeds[0]
    tasks = [
        CellTask(
            q=q,
            tau=tau,
            T=config.T,
            M=config.M,
            model=config.model,
            seed=seed_name,
            repeats=config.repeats,
            timeout=config.cell_timeout,
            chain_workers=config.chain_workers,
            record_every=config.record_every,
        )
        for q in config.orders
        for tau in config.taus
    ]
    logger.info("Benchmark III: %d cells with %d worker(s)", len(tasks), config.workers)

    outcomes = _collect_cells(tasks, config, ctx)
    path = out / "cost_accuracy.csv"
    artifacts.rows += write_csv(
        path, _COST_FIELDS, (_cost_row(task, record, status) for task, record, status in outcomes)
    )
    artifacts.files.append(str(path))

    records = [record for _, record, _ in outcomes if record is not None]
    artifacts.key_numbers["cells"] = len(tasks)
    artifacts.key_numbers["absent_cells"] = len(tasks) - len(records)

    for record in records:
        expected = record.steps * build_scheme(record.q).step_count
        artifacts.check(
            f"step_count[q={record.q},tau={record.tau:g}]",
            record.flow_count == expected == record.steps * record.q * (record.q // 2 + 1),
            f"{record.flow_count} flow applications, expected {expected}",
        )

    table = cpu_ratio_table(records)
    if table:
        path = out / "cpu_ratio.csv"
        write_csv(
            path,
            ("q", "observed", "theoretical"),
            ({"q": q, "observed": obs, "theoretical": theo} for q, (obs, theo) in table.items()),
        )
        artifacts.files.append(str(path))
        artifacts.key_numbers["cpu_ratio"] = {str(q): list(pair) for q, pair in table.items()}
        for q, (observed, theoretical) in table.items():
            if q == 2:
                continue
            artifacts.check(
                f"cpu_ratio[q={q}]",
                theoretical / _RATIO_FACTOR <= observed <= theoretical * _RATIO_FACTOR,
                f"observed {observed:.2f}, theoretical {theoretical:.2f}",
            )

    for q in config.orders:
        slope = _cpu_slope(records, q)
        if slope is None:
            continue
        artifacts.key_numbers[f"cpu_slope[q={q}]"] = slope
        artifacts.check(
            f"cpu_scaling[q={q}]",
            abs(slope + 1.0) <= _CPU_SLOPE_TOL,
            f"log-log slope of CPU time against tau is {slope:.3f}",
        )

    if config.order_study:
        _order_study(config, artifacts, out)

    artifacts.save(out)
    return artifacts


def _order_study(config: RunConfig, artifacts: Artifacts, out: Path) -> None:
    """Self-convergence slopes for the low orders, checked against their nominal order.

    Orders above the slope range reach the error floor too quickly for a fit; each is
    instead run at the coarsest step and must be at least as accurate as the highest
    fitted order there.
    """
    assert config.T is not None
    orders = [q for q in config.orders if q <= _ORDER_STUDY_MAX_Q]
    if not orders:
        logger.warning("Order study skipped: no order <= %d configured", _ORDER_STUDY_MAX_Q)
        return
    basis = build_basis(config.gamma, config.M)
    psi0 = make_seed(config.seeds[0], basis, config.model)
    study = convergence_slopes(basis, config.model, psi0, orders, _ORDER_STUDY_TAUS, config.T)

    coarse = _ORDER_STUDY_TAUS[0]
    higher = [q for q in config.orders if q > _ORDER_STUDY_MAX_Q]
    extra = convergence_slopes(
        basis, config.model, psi0, higher, (coarse,), config.T, reference=study.reference
    )

    path = out / "order_study.csv"
    rows = (
        {"q": q, "tau": tau, "error": error}
        for errors in (study.errors, extra.errors)
        for q, points in errors.items()
        for tau, error in points
    )
    write_csv(path, ("q", "tau", "error"), rows)
    artifacts.files.append(str(path))
    for q, slope in study.slopes.items():
        artifacts.key_numbers[f"order_slope[q={q}]"] = slope
        if math.isfinite(slope):
            artifacts.check(
                f"order_slope[q={q}]", abs(slope - q) <= _SLOPE_TOL, f"observed slope {slope:.3f}"
            )

    base = max(orders)
    base_error = study.errors[base][0][1]
    for q, points in extra.errors.items():
        error = points[0][1]
        artifacts.key_numbers[f"order_error[q={q},tau={coarse:g}]"] = error
        artifacts.check(
            f"order_error[q={q}<=q={base}]",
            error <= max(base_error, _ORDER_ERROR_FLOOR),
            f"error at tau={coarse:g}: {error:.3g} vs {base_error:.3g}",
        )
