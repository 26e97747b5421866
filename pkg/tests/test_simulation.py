"""
================================================================================
TESTES UNITÁRIOS - Execuções, lotes e métricas (simulation.py)
================================================================================

Execute com: pytest tests/ -v
"""

import os
import sys
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pandas as pd
import pytest

# Adiciona o diretório src ao path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.agents.dispatchers import (
    CAP,
    DISPATCHER_NAMES,
    LOWEST_COST,
    PRIMAL_PCT,
    STANDARD,
    dispatch_lowest_cost,
    dispatch_standard,
)
from src.core.catalog import DefaultsCatalog
from src.core.clustering import kmeans
from src.core.config import build_scenario, load_config
from src.core.errors import ConfigError, SolverError
from src.core.ingest import ProfileTable, synth_fleet
from src.core.model import HourlySeries, PhysicalConstants, Unit, Vehicle, VehicleKind
from src.core.simulation import (
    METRIC_NAMES,
    arrival_order,
    compute_metrics,
    draw_fleet,
    energy_balance,
    fleet_lower_bound,
    prepare_plan,
    purchase_cost,
    run_batch,
    run_scenario,
    three_hour_scenario,
    vehicles_from_profiles,
)


@lru_cache(maxsize=None)
def plan_for(alpha):
    """Cenário de 48 horas, 200 veículos, 8 clusters."""
    config = load_config(overrides={"HORIZON_HOURS": 48, "FLEET_SIZE": 200, "ALPHA": alpha})
    archetypes = DefaultsCatalog().archetypes()
    training = synth_fleet(120, archetypes, seed=config.seed, stream=0, id_prefix="t")
    clusters = kmeans(training, 8, restarts=2, seed=config.seed)
    return prepare_plan(build_scenario(config), clusters, archetypes)


class TestMetrics:
    """Testes das métricas de uma execução."""

    def setup_method(self):
        self.scenario, self.vehicles, _ = three_hour_scenario()

    def test_zero_mileage_fleet(self):
        params = PhysicalConstants().params_for(VehicleKind.BEV)
        fleet = [Vehicle(f"v{i}", params, HourlySeries(np.zeros(3), Unit.MILES)) for i in range(3)]
        schedules = [dispatch_standard(v) for v in fleet]
        metrics, load = compute_metrics(self.scenario, fleet, schedules)
        assert load.total == 0.0
        assert metrics.total_cost == 0.0
        assert metrics.peak_increase_abs == 0.0
        assert metrics.cost_per_mile == 0.0
        assert metrics.demand_failures == 0

    def test_grid_cost_and_peak(self):
        """Carga padrão do veículo 1: 3.3 kWh nas horas 0 e 1."""
        vehicle = self.vehicles[0]
        schedule = dispatch_standard(vehicle)
        metrics, load = compute_metrics(self.scenario, [vehicle], [schedule])
        np.testing.assert_allclose(load.values, [3.3, 3.3, 0.0], atol=1e-6)
        assert metrics.elec_cost == pytest.approx(0.10 * 3.3 + 0.12 * 3.3, abs=1e-6)
        assert metrics.gas_cost == 0.0
        assert metrics.grid_energy == pytest.approx(6.6 / 1000, abs=1e-9)
        assert metrics.peak_increase_abs == pytest.approx(3.3, abs=1e-6)
        # carga base zero: sem percentual
        assert metrics.peak_increase_pct == 0.0
        assert metrics.cost_per_mile == pytest.approx(metrics.total_cost)

    def test_initial_storage_priced_at_mean(self):
        """A energia inicial gasta entra pelo preço médio da eletricidade."""
        params = PhysicalConstants().params_for(VehicleKind.BEV)
        vehicle = Vehicle("v", params, HourlySeries([0, 0, 10], Unit.MILES))
        schedule = dispatch_lowest_cost(vehicle, self.scenario.elec_price.values)
        metrics, _ = compute_metrics(self.scenario, [vehicle], [schedule])
        assert schedule.charge.total == 0.0
        assert metrics.elec_cost == pytest.approx(3.0 * 0.12)
        assert purchase_cost(self.scenario, [schedule]) == 0.0

    def test_metric_names(self):
        assert METRIC_NAMES[:3] == ("peak_increase_abs", "peak_increase_pct", "grid_energy")
        assert "demand_failures" in METRIC_NAMES


class TestRunScenario:
    """Testes de uma execução completa."""

    def setup_method(self):
        self.plan = plan_for(1.0)

    def test_cap_never_raises_peak(self):
        """Com alpha <= 1 o CAP não aumenta o pico, nem por arredondamento."""
        result = run_scenario(self.plan, CAP, seed=3)
        assert result.metrics.peak_increase_abs == 0.0
        assert result.metrics.cap_overrun == 0.0

    def test_standard_raises_peak(self):
        result = run_scenario(self.plan, STANDARD, seed=3)
        assert result.metrics.peak_increase_abs > 0

    def test_energy_identity(self):
        for name in DISPATCHER_NAMES:
            result = run_scenario(self.plan, name, seed=5)
            for vehicle, schedule in zip(result.vehicles, result.schedules):
                supplied, used = energy_balance(vehicle, schedule)
                assert supplied == pytest.approx(used, abs=1e-6)

    def test_deterministic(self):
        a = run_scenario(self.plan, CAP, seed=9, run=2)
        b = run_scenario(self.plan, CAP, seed=9, run=2)
        assert a.metrics == b.metrics
        np.testing.assert_array_equal(a.fleet_load.values, b.fleet_load.values)

    def test_events(self):
        scenario, vehicles, clusters = three_hour_scenario()
        plan = prepare_plan(scenario, clusters, archetypes=(), fit=False)
        result = run_scenario(plan, CAP, seed=0, fleet=vehicles)
        events = list(result.events())
        kinds = [e["event"] for e in events]
        assert kinds.count("arrival") == 2
        assert kinds.count("cluster") == 2
        assert kinds.count("schedule") == 2
        assert all(e["run"] == 0 for e in events)

    def test_without_schedules(self):
        result = run_scenario(self.plan, LOWEST_COST, seed=1, keep_schedules=False)
        assert result.schedules == ()
        assert len(result.fleet_load) == self.plan.scenario.horizon


class TestFleet:
    """Testes do sorteio da frota de teste."""

    def setup_method(self):
        self.plan = plan_for(1.0)
        self.scenario = self.plan.scenario

    def test_size_and_order(self):
        fleet = draw_fleet(self.scenario, 1, 0, self.plan.archetypes)
        assert len(fleet) == self.scenario.fleet_size
        assert fleet == arrival_order(fleet)
        hours = [v.plug_in_hour for v in fleet]
        assert min(hours) >= 0 and max(hours) < self.scenario.plug_in_window
        assert all(v.horizon == self.scenario.horizon for v in fleet)

    def test_runs_differ(self):
        a = draw_fleet(self.scenario, 1, 0, self.plan.archetypes, count=20)
        b = draw_fleet(self.scenario, 1, 1, self.plan.archetypes, count=20)
        assert [v.id for v in a] != [v.id for v in b]

    def test_not_the_training_stream(self):
        archetypes = self.plan.archetypes
        training = synth_fleet(20, archetypes, seed=1, stream=0)
        fleet = draw_fleet(self.scenario, 1, 0, archetypes, count=20)
        drawn = {tuple(v.profile.values[:24]) for v in fleet}
        assert not drawn & {tuple(row) for row in training.miles}

    def test_from_test_profiles(self):
        table = ProfileTable(("a", "b", "c"), np.zeros((3, 24)))
        fleet = draw_fleet(self.scenario, 1, 0, test_profiles=table, count=3)
        assert sorted(v.id for v in fleet) == ["a", "b", "c"]

    def test_needs_a_source(self):
        with pytest.raises(ConfigError):
            draw_fleet(self.scenario, 1, 0)

    def test_profiles_replicated(self):
        day = np.zeros(24)
        day[8] = 100.0
        table = ProfileTable(("p",), day[None, :])
        (vehicle,) = vehicles_from_profiles(table, self.scenario, [0])
        assert vehicle.params.kind is VehicleKind.PHEV
        assert vehicle.profile.values[32] == 100.0


class TestBatch:
    """Testes do lote de execuções."""

    def setup_method(self):
        self.plan = plan_for(1.0)

    def test_single_run_matches_scenario(self):
        batch = run_batch(self.plan, [CAP], runs=1, seed=4)
        single = run_scenario(self.plan, CAP, seed=4, run=0)
        assert batch.runs[CAP][0] == single.metrics

    def test_threads_do_not_change_result(self):
        serial = run_batch(self.plan, [CAP, STANDARD], runs=3, seed=2, threads=1)
        parallel = run_batch(self.plan, [CAP, STANDARD], runs=3, seed=2, threads=3)
        pd.testing.assert_frame_equal(serial.summary(), parallel.summary())
        np.testing.assert_array_equal(serial.loads[CAP], parallel.loads[CAP])

    def test_summary_layout(self):
        batch = run_batch(self.plan, [CAP, LOWEST_COST], runs=2, seed=1)
        summary = batch.summary()
        assert summary["dispatcher"].tolist() == [CAP, LOWEST_COST]
        assert summary["runs"].tolist() == [2, 2]
        for name in METRIC_NAMES:
            assert name in summary.columns and f"{name}_std" in summary.columns
        assert len(batch.runs_frame()) == 4
        frame = batch.load_frame(CAP)
        assert list(frame.columns) == ["hour", "base_load", "fleet_load", "total_load"]
        np.testing.assert_allclose(frame["total_load"], frame["base_load"] + frame["fleet_load"])

    def test_first_run_events_kept(self):
        """O lote guarda a execução 0 completa; as demais só as métricas."""
        batch = run_batch(self.plan, [CAP, STANDARD], runs=2, seed=5)
        assert set(batch.first_run) == {CAP, STANDARD}
        first = batch.first_run[CAP]
        assert first.run == 0
        assert len(first.schedules) == self.plan.scenario.fleet_size
        assert first.metrics == batch.runs[CAP][0]

        events = list(batch.events())
        assert {e["dispatcher"] for e in events} == {CAP, STANDARD}
        assert all(e["run"] == 0 for e in events)
        single = list(run_scenario(self.plan, CAP, seed=5, run=0).events())
        assert [e for e in events if e["dispatcher"] == CAP] == [
            {"dispatcher": CAP, **record} for record in single
        ]

    def test_invalid_arguments(self):
        with pytest.raises(ConfigError):
            run_batch(self.plan, [CAP], runs=0)
        with pytest.raises(ConfigError):
            run_batch(self.plan, [CAP], threads=0)
        with pytest.raises(ConfigError):
            run_batch(self.plan, ["fifo"])


class TestAcceptance:
    """Lote com os quatro despachantes no cenário de referência reduzido (alpha = 1)."""

    @classmethod
    def setup_class(cls):
        cls.plan = plan_for(1.0)
        batch = run_batch(cls.plan, DISPATCHER_NAMES, runs=3, seed=0)
        cls.batch = batch
        cls.summary = batch.summary().set_index("dispatcher")

    def test_cap_saves_thirty_percent(self):
        """CAP custa no máximo 70% do carregamento padrão (médias do lote)."""
        cap = self.summary.loc[CAP, "total_cost"]
        standard = self.summary.loc[STANDARD, "total_cost"]
        assert cap <= 0.70 * standard

    def test_peak_increase_ordering(self):
        """Aumento do pico: razões primais < padrão < menor preço."""
        peak = self.summary["peak_increase_abs"]
        assert peak[PRIMAL_PCT] < peak[STANDARD] < peak[LOWEST_COST]

    def test_cap_keeps_peak(self):
        assert self.summary.loc[CAP, "peak_increase_abs"] == 0.0


class TestLowerBound:
    """Testes do limite inferior do programa completo."""

    def test_three_hour_bound(self):
        scenario, vehicles, _ = three_hour_scenario()
        assert fleet_lower_bound(vehicles, scenario) == pytest.approx(0.066, abs=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_dispatchers_above_bound(self, seed):
        """Com limite folgado, nenhum despachante compra por menos que o ótimo."""
        plan = plan_for(2.0)
        size = 4 + seed % 5
        drawn = draw_fleet(plan.scenario, seed, 0, plan.archetypes, count=60)
        fleet = [
            Vehicle(v.id, v.params.with_initial(12.0), v.profile, 0)
            for v in drawn if v.params.kind is VehicleKind.BEV
        ][:size]
        assert len(fleet) == size
        bound = fleet_lower_bound(fleet, plan.scenario)
        for name in DISPATCHER_NAMES:
            result = run_scenario(plan, name, seed=seed, fleet=fleet)
            assert result.metrics.demand_failures == 0
            assert result.metrics.cap_overrun == 0.0
            assert purchase_cost(plan.scenario, result.schedules) >= bound - 1e-6

    def test_cap_close_to_lowest_cost_when_slack(self):
        """Frota de centróides com limite folgado: CAP custa o mesmo que o guloso (1%)."""
        plan = plan_for(2.0)
        clusters = plan.cluster_set
        table = ProfileTable(tuple(f"c{i}" for i in range(clusters.k)), clusters.centroids)
        fleet = vehicles_from_profiles(table, plan.scenario, np.zeros(clusters.k, dtype=int))
        cap = run_scenario(plan, CAP, seed=0, fleet=fleet)
        lowest = run_scenario(plan, LOWEST_COST, seed=0, fleet=fleet)
        assert cap.metrics.total_cost == pytest.approx(lowest.metrics.total_cost, rel=0.01, abs=0.01)

    def test_tight_cap_fails_plan(self):
        scenario, _, clusters = three_hour_scenario()
        tight = replace(scenario, charge_cap=HourlySeries(np.full(3, 0.2), Unit.KWH))
        with pytest.raises(SolverError):
            prepare_plan(tight, clusters, archetypes=(), fit=False)


# =============================================================================
# EXECUÇÃO DIRETA
# =============================================================================

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
