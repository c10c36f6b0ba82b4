"""Tests for hermsplit.benchmarks."""

from __future__ import annotations

import csv
import math

import pytest

from hermsplit import benchmarks
from hermsplit.benchmarks import (
    CellTask,
    CostRecord,
    benchmark,
    benchmark_names,
    cpu_ratio_table,
    run,
    run_benchmark_I,
    run_cell,
)
from hermsplit.config import RunConfig
from hermsplit.context import SolverContext
from hermsplit.flows import ModelParams
from hermsplit.ground_state import GroundStateConfig, descend
from hermsplit.hermite import build_basis, mass_norm
from hermsplit.report import ARTIFACT_FILE, Artifacts
from hermsplit.seeds import make_seed


def _rows(path):
    with open(path, newline="") as fp:
        return list(csv.DictReader(fp))


def _assertion(artifacts, name):
    return next(a for a in artifacts.assertions if a.name == name)


@pytest.fixture
def cost_config(tmp_path):
    def _make(**overrides):
        layer = {
            "M": 4,
            "orders": [2, 4],
            "taus": [0.5, 0.25],
            "T": 1.0,
            "repeats": 1,
            "output_dir": tmp_path,
        }
        layer.update(overrides)
        return RunConfig.from_layers("cost_accuracy", layer)

    return _make


class TestRegistry:
    def test_names(self):
        assert benchmark_names() == ["cost_accuracy", "ground_state", "invariants"]

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError, match="Duplicate benchmark: 'ground_state'"):

            @benchmark("ground_state")
            def _again(config, ctx=None):
                raise AssertionError

    def test_runner_checks_config(self, tmp_path):
        config = RunConfig.from_layers("invariants", {"output_dir": tmp_path})
        with pytest.raises(ValueError, match="expected a ground_state config"):
            run_benchmark_I(config)


class TestGroundStateBenchmark:
    def test_linear_run(self, tmp_path):
        config = RunConfig.from_layers(
            "ground_state",
            {
                "beta": 0.0,
                "M": 6,
                "taus": [0.05],
                "orders": [2],
                "gs_time": 25.0,
                "refine_schedule": [0.05, 0.025, 0.0125],
                "output_dir": tmp_path,
            },
        )
        artifacts = run(config)
        out = tmp_path / "ground_state"

        for name in ("paper_seed_1", "h00"):
            assert artifacts.key_numbers[f"H_min[{name}]"] == pytest.approx(1.0, abs=1e-10)
            assert (out / f"descent_{name}.csv").is_file()
        assert "H_min[h00]" not in [a.name for a in artifacts.assertions]
        assert _assertion(artifacts, "seed_independence[paper_seed_1,h00]") is not None

        refinement = _rows(out / "refinement.csv")
        assert [float(r["tau"]) for r in refinement] == [0.05, 0.025, 0.0125]
        assert artifacts.key_numbers["H_refined"] == pytest.approx(1.0, abs=1e-10)

        descent_rows = sum(len(_rows(out / f"descent_{n}.csv")) for n in config.seeds)
        assert artifacts.rows == descent_rows + 3

        saved = Artifacts.load(out / ARTIFACT_FILE)
        assert saved.config_hash == config.digest()
        assert saved.config["benchmark"] == "ground_state"

    def test_iteration_events(self, tmp_path):
        config = RunConfig.from_layers(
            "ground_state",
            {"M": 4, "taus": [0.1], "orders": [2], "gs_time": 1.0, "seeds": ["h00"], "output_dir": tmp_path},
        )
        ctx = SolverContext()
        seen = []
        ctx.on_iteration += lambda ctx, record: seen.append(record.iteration)
        artifacts = run(config, ctx=ctx)
        assert seen == list(range(1, artifacts.key_numbers["iterations[h00]"] + 1))
        assert ctx.executor is None


class TestInvariantsBenchmark:
    def test_small_run(self, tmp_path):
        config = RunConfig.from_layers(
            "invariants",
            {
                "M": 6,
                "c_values": [1.0, 0.5],
                "orders": [2, 4],
                "taus": [0.01],
                "gs_tau": 0.05,
                "gs_time": 15.0,
                "output_dir": tmp_path,
            },
        )
        artifacts = run(config)
        out = tmp_path / "invariants"

        assert sorted(p.name for p in out.glob("diagnostics_*.csv")) == [
            "diagnostics_c0.5_q2.csv",
            "diagnostics_c1_q2.csv",
            "diagnostics_c1_q4.csv",
        ]
        for label, q in (("c=1", 2), ("c=1", 4), ("c=0.5", 2)):
            assert _assertion(artifacts, f"period_matches_mu[{label},q={q}]").passed
            period = artifacts.key_numbers[f"period[{label},q={q}]"]
            assert artifacts.key_numbers[f"omega[{label},q={q}]"] == pytest.approx(2 * math.pi / period)
        assert _assertion(artifacts, "conservation[c=1,q=4<q=2]") is not None
        assert not any(a.name.startswith("published_period") for a in artifacts.assertions)

        rows = _rows(out / "diagnostics_c1_q2.csv")
        assert float(rows[0]["t"]) == 0.0
        assert float(rows[0]["E_M"]) == 0.0
        assert rows[0]["dist_rotating"] != ""
        total = sum(len(_rows(p)) for p in out.glob("diagnostics_*.csv"))
        assert artifacts.rows == total

    def test_larger_mass_rotates_faster(self, tmp_path):
        config = RunConfig.from_layers(
            "invariants",
            {
                "M": 6,
                "c_values": [0.5, 2.0],
                "orders": [2],
                "taus": [0.01],
                "gs_tau": 0.05,
                "gs_time": 15.0,
                "output_dir": tmp_path,
            },
        )
        numbers = run(config).key_numbers
        assert numbers["period[c=2,q=2]"] < numbers["period[c=0.5,q=2]"]
        assert numbers["mu_ch[c=2]"] > numbers["mu_ch[c=0.5]"]

    def test_c_values_are_masses(self, tmp_path):
        config = RunConfig.from_layers(
            "invariants",
            {
                "M": 6,
                "c_values": [0.5],
                "orders": [2],
                "taus": [0.01],
                "T": 1.0,
                "gs_tau": 0.05,
                "gs_time": 15.0,
                "output_dir": tmp_path,
            },
        )
        numbers = run(config).key_numbers

        basis = build_basis(1.0, 6)
        params = ModelParams()
        gs_config = GroundStateConfig(c=math.sqrt(0.5), tau=0.05, q=4, simulated_time=15.0)
        ground = descend(basis, params, gs_config, make_seed("h00", basis, params))
        assert numbers["mu_ch[c=0.5]"] == pytest.approx(ground.mu_ch, rel=1e-12)
        assert mass_norm(basis, ground.state) ** 2 == pytest.approx(0.5, rel=1e-12)


class TestCostAccuracyBenchmark:
    def test_small_matrix(self, cost_config):
        config = cost_config()
        artifacts = run(config)
        out = config.output_dir / "cost_accuracy"

        rows = _rows(out / "cost_accuracy.csv")
        assert artifacts.rows == len(rows) == 4
        assert [(int(r["q"]), float(r["tau"])) for r in rows] == [(2, 0.5), (2, 0.25), (4, 0.5), (4, 0.25)]
        assert all(r["status"] == "ok" for r in rows)
        assert [int(r["flow_count"]) for r in rows] == [2 * 4, 4 * 4, 2 * 12, 4 * 12]
        assert all(float(r["cpu_seconds"]) > 0 for r in rows)

        step_checks = [a for a in artifacts.assertions if a.name.startswith("step_count")]
        assert len(step_checks) == 4
        assert all(a.passed for a in step_checks)
        assert set(artifacts.key_numbers["cpu_ratio"]) == {"2", "4"}
        assert artifacts.key_numbers["cpu_ratio"]["4"][1] == 3.0
        assert artifacts.key_numbers["absent_cells"] == 0
        assert (out / "cpu_ratio.csv").is_file()

    def test_cell_events(self, cost_config):
        ctx = SolverContext()
        started, finished = [], []
        ctx.on_cell_start += lambda ctx, task: started.append((task.q, task.tau))
        ctx.on_cell_finish += lambda ctx, record: finished.append((record.q, record.tau))
        run(cost_config(), ctx=ctx)
        assert started == finished == [(2, 0.5), (2, 0.25), (4, 0.5), (4, 0.25)]

    def test_timeout_marks_cells_absent(self, cost_config):
        artifacts = run(cost_config(cell_timeout=1e-9))
        rows = _rows(artifacts.files[0])
        assert [r["status"] for r in rows] == ["timeout"] * 4
        assert all(r["cpu_seconds"] == "" for r in rows)
        assert artifacts.key_numbers["absent_cells"] == 4
        assert "cpu_ratio" not in artifacts.key_numbers
        assert artifacts.passed

    def test_failed_cell_raises(self, cost_config, monkeypatch):
        real = benchmarks.run_cell

        def _flaky(task):
            if task.q == 4:
                raise RuntimeError("boom")
            return real(task)

        monkeypatch.setattr(benchmarks, "run_cell", _flaky)
        with pytest.raises(RuntimeError, match="boom"):
            run(cost_config())

    def test_continue_on_error(self, cost_config, monkeypatch):
        real = benchmarks.run_cell

        def _flaky(task):
            if task.q == 4 and task.tau == 0.25:
                raise RuntimeError("boom")
            return real(task)

        monkeypatch.setattr(benchmarks, "run_cell", _flaky)
        ctx = SolverContext(continue_on_error=True)
        failures = []
        ctx.on_cell_failed += lambda ctx, task, exc: failures.append((task.q, task.tau, str(exc)))
        artifacts = run(cost_config(), ctx=ctx)

        assert failures == [(4, 0.25, "boom")]
        rows = _rows(artifacts.files[0])
        assert [r["status"] for r in rows] == ["ok", "ok", "ok", "failed"]
        assert artifacts.key_numbers["absent_cells"] == 1

    def test_process_pool_keeps_task_order(self, cost_config):
        artifacts = run(cost_config(workers=2))
        rows = _rows(artifacts.files[0])
        assert [(int(r["q"]), float(r["tau"])) for r in rows] == [(2, 0.5), (2, 0.25), (4, 0.5), (4, 0.25)]
        assert all(r["status"] == "ok" for r in rows)

    def test_order_study_compares_higher_orders(self, cost_config):
        config = cost_config(orders=[2, 8], taus=[0.5], order_study=True)
        artifacts = run(config)
        rows = _rows(config.output_dir / "cost_accuracy" / "order_study.csv")

        assert [float(r["tau"]) for r in rows if r["q"] == "2"] == [2.0**-k for k in range(3, 8)]
        assert [float(r["tau"]) for r in rows if r["q"] == "8"] == [0.125]
        assert _assertion(artifacts, "order_slope[q=2]").passed
        assert _assertion(artifacts, "order_error[q=8<=q=2]").passed
        assert "order_slope[q=8]" not in artifacts.key_numbers
        assert artifacts.key_numbers["order_error[q=8,tau=0.125]"] < float(rows[0]["error"])


class TestRunCell:
    def test_record(self):
        task = CellTask(q=4, tau=0.25, T=1.0, M=4, model=ModelParams(), seed="gaussian", repeats=2)
        record = run_cell(task)
        assert record.steps == 4
        assert record.flow_count == 4 * 12
        assert record.cpu_seconds > 0
        assert math.isfinite(record.max_E_M)
        assert math.isfinite(record.max_E_H)

    def test_chain_workers_match_serial(self):
        serial = CellTask(q=6, tau=0.25, T=1.0, M=4, model=ModelParams(), seed="gaussian", repeats=1)
        threaded = CellTask(
            q=6, tau=0.25, T=1.0, M=4, model=ModelParams(), seed="gaussian", repeats=1, chain_workers=3
        )
        a, b = run_cell(serial), run_cell(threaded)
        assert a.max_E_M == b.max_E_M
        assert a.max_E_H == b.max_E_H


class TestCpuRatioTable:
    @staticmethod
    def _record(q, tau, seconds):
        return CostRecord(q=q, tau=tau, cpu_seconds=seconds, max_E_M=0.0, max_E_H=0.0)

    def test_ratios(self):
        records = [
            self._record(2, 0.1, 1.0),
            self._record(2, 0.2, 3.0),
            self._record(4, 0.1, 3.0),
            self._record(4, 0.2, 9.0),
        ]
        table = cpu_ratio_table(records)
        assert table[2] == (1.0, 1.0)
        assert table[4] == (3.0, 3.0)

    def test_uses_common_steps_only(self):
        records = [
            self._record(2, 0.1, 1.0),
            self._record(2, 0.2, 100.0),
            self._record(6, 0.1, 5.0),
        ]
        assert cpu_ratio_table(records)[6] == (5.0, 6.0)

    def test_without_baseline(self):
        assert cpu_ratio_table([self._record(4, 0.1, 1.0)]) == {}
