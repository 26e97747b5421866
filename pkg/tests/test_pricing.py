"""
================================================================================
TESTES UNITÁRIOS - Preços ajustados e razões primais (pricing.py)
================================================================================

Execute com: pytest tests/ -v
"""

import os
import sys
from dataclasses import replace

import numpy as np
import pytest

# Adiciona o diretório src ao path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.agents.dispatchers import PRIMAL_CHARGE_TOL, cap_charge_order
from src.core.clustering import ClusterSet
from src.core.errors import InputDataError, SolverError
from src.core.lp import LpModel, build_clp, solve
from src.core.model import HourlySeries, PhysicalConstants, Scenario, Unit, VehicleKind
from src.core.pricing import (
    PriceBook,
    compute_prices,
    compute_ratios,
    driving_lift,
    load_books,
    normalize_for_report,
    price_profile_frame,
    save_books,
)
from src.core.simulation import three_hour_scenario


def phev_scenario():
    """Um PHEV que dirige 60 milhas na hora 8, com bateria e tanque cheios."""
    n = 24
    scenario = Scenario(
        horizon=n,
        base_load=HourlySeries(np.ones(n), Unit.KW),
        elec_price=HourlySeries(np.full(n, 0.10), Unit.USD_PER_KWH),
        gas_price=HourlySeries(np.full(n, 3.95), Unit.USD_PER_GALLON),
        charge_cap=HourlySeries(np.full(n, 100.0), Unit.KWH),
        fleet_size=1,
        plug_in_window=1,
    )
    miles = np.zeros((1, n))
    miles[0, 8] = 60.0
    params = PhysicalConstants().params_for(VehicleKind.PHEV)
    clusters = ClusterSet(miles, (VehicleKind.PHEV,), [1], [1.0], (params,))
    return scenario, clusters


def prices_from_duals(sol, scenario, clusters):
    """p_h − c_eff·λ^s_h − θ_h com λ^s = −y_balanço/b e θ = y das linhas de limite."""
    layout = sol.model.layout
    weights = np.asarray(clusters.weights, dtype=float)[:, None]
    lam = -sol.y_eq[layout.balance_rows()] / weights
    theta = sol.y_ub[None, :]
    c_eff = np.array([p.charge_efficiency for p in clusters.params])[:, None]
    return scenario.elec_price.values[None, :] - c_eff * lam - theta


def random_clp(seed):
    """
    Programa agrupado aleatório de 24 horas com baterias vazias e limite
    apertado; o limite é relaxado até o programa ficar viável.
    """
    rng = np.random.default_rng(seed)
    n = 24
    k = int(rng.integers(2, 6))
    constants = PhysicalConstants()
    kinds, params, centroids = [], [], np.zeros((k, n))
    for i in range(k):
        kind = VehicleKind.BEV if rng.random() < 0.6 else VehicleKind.PHEV
        count = int(rng.integers(1, 4)) if kind is VehicleKind.BEV else int(rng.integers(3, 6))
        trips = rng.choice(np.arange(8, n), size=count, replace=False)
        total = rng.uniform(10, 60) if kind is VehicleKind.BEV else rng.uniform(70, 90)
        centroids[i, trips] = total / trips.size
        kinds.append(kind)
        params.append(constants.params_for(kind).with_initial(0.0))
    weights = rng.uniform(1.0, 50.0, size=k)
    prices = rng.uniform(0.05, 0.30, size=n)
    full_rate = float(sum(w * p.max_charge_rate for w, p in zip(weights, params)))
    cap = rng.uniform(0.2, 1.0, size=n) * full_rate
    clusters = ClusterSet(centroids, tuple(kinds), [1] * k, weights, tuple(params))

    for relax in (1.0, 4.0, 16.0):
        scenario = Scenario(
            horizon=n,
            base_load=HourlySeries(np.ones(n), Unit.KW),
            elec_price=HourlySeries(prices, Unit.USD_PER_KWH),
            gas_price=HourlySeries(np.full(n, 3.95), Unit.USD_PER_GALLON),
            charge_cap=HourlySeries(relax * cap, Unit.KWH),
            fleet_size=int(weights.sum()),
            plug_in_window=1,
        )
        sol = solve(build_clp(clusters, scenario))
        if sol.is_optimal:
            return scenario, clusters, sol
    raise AssertionError(f"programa aleatório {seed} inviável mesmo com o limite relaxado")


class TestAdjustedPrices:
    """Testes do vetor d de cada cluster."""

    def setup_method(self):
        self.scenario, _, self.clusters = three_hour_scenario()
        self.sol = solve(build_clp(self.clusters, self.scenario))
        self.book = compute_prices(self.sol, self.scenario, self.clusters)

    def test_shape(self):
        assert self.book.k == 2
        assert self.book.horizon == 3
        assert self.book.for_cluster(0).unit is Unit.USD_PER_KWH

    def test_equals_reduced_cost_when_parked(self):
        """Nas horas estacionadas d = p − c_eff·λ^s − θ, montado direto dos duais."""
        expected = prices_from_duals(self.sol, self.scenario, self.clusters)
        allowed = self.book.charge_allowed
        np.testing.assert_allclose(self.book.d[allowed], expected[allowed], atol=1e-9)
        assert np.all(self.book.fixing[allowed] == 0.0)

    def test_driving_hours_priced_above_parked(self):
        for i in range(self.book.k):
            parked = self.book.d[i, self.book.charge_allowed[i]]
            driving = self.book.d[i, ~self.book.charge_allowed[i]]
            assert driving.min() > parked.max()

    def test_driving_lift_follows_tariff_scale(self):
        """Com spread abaixo de um centavo a elevação acompanha o spread."""
        tiny = replace(
            self.scenario,
            elec_price=HourlySeries(1e-3 * self.scenario.elec_price.values, Unit.USD_PER_KWH),
        )
        sol = solve(build_clp(self.clusters, tiny))
        book = compute_prices(sol, tiny, self.clusters)
        spread = 1e-3 * (0.14 - 0.10)
        reduced = sol.reduced_cost("c") / sol.model.layout.weights[:, None]
        for i in range(book.k):
            allowed = book.charge_allowed[i]
            ceiling = reduced[i, allowed].max()
            driving = book.d[i, ~allowed]
            assert driving.min() >= ceiling + spread - 1e-15
            assert driving.min() < ceiling + 1e-3

    def test_flat_tariff_lift(self):
        assert driving_lift(np.full(24, 0.10), np.zeros((1, 24))) == pytest.approx(0.01)
        assert driving_lift(np.full(24, 0.002), np.zeros((1, 24))) == pytest.approx(0.0002)
        assert driving_lift(np.array([0.1, 0.3]), np.zeros((1, 2))) == pytest.approx(0.2)
        assert driving_lift(np.zeros(3), np.array([[0.0, -2.0, 0.5]])) == 2.0

    def test_complementarity(self):
        """d < 0 só com carga no limite superior; d > 0 só com carga zero."""
        rate = self.clusters.params[0].max_charge_rate
        allowed = self.book.charge_allowed
        charge = self.book.primal_charge
        assert np.all(charge[allowed & (self.book.d > 1e-9)] <= 1e-9)
        assert np.all(charge[allowed & (self.book.d < -1e-9)] >= rate - 1e-9)

    def test_order_reproduces_optimum(self):
        """A primeira hora na ordem do CAP é a hora em que o cluster carrega no ótimo."""
        connected = np.ones(3, dtype=bool)
        connected[2] = False
        order_v1 = cap_charge_order(
            self.book.d[0], self.book.primal_charge[0] > PRIMAL_CHARGE_TOL,
            self.scenario.elec_price.values, connected,
        )
        connected = np.array([True, False, True])
        order_v2 = cap_charge_order(
            self.book.d[1], self.book.primal_charge[1] > PRIMAL_CHARGE_TOL,
            self.scenario.elec_price.values, connected,
        )
        assert order_v1[0] == 1
        assert order_v2[0] == 0

    def test_price_scaling(self):
        """Dobrar todos os preços não muda a hora escolhida nem o ótimo primal."""
        doubled = replace(
            self.scenario,
            elec_price=HourlySeries(2 * self.scenario.elec_price.values, Unit.USD_PER_KWH),
            gas_price=HourlySeries(2 * self.scenario.gas_price.values, Unit.USD_PER_GALLON),
        )
        sol = solve(build_clp(self.clusters, doubled))
        assert sol.objective == pytest.approx(2 * self.sol.objective, abs=1e-9)
        book = compute_prices(sol, doubled, self.clusters)
        np.testing.assert_allclose(book.primal_charge, self.book.primal_charge, atol=1e-9)
        for i in range(book.k):
            allowed = book.charge_allowed[i]
            first = cap_charge_order(book.d[i], book.primal_charge[i] > PRIMAL_CHARGE_TOL,
                                     doubled.elec_price.values, allowed)[0]
            assert book.primal_charge[i, first] > PRIMAL_CHARGE_TOL

    def test_requires_optimal_solution(self):
        infeasible = LpModel.from_arrays([1.0], A_ub=[[1.0], [-1.0]], b_ub=[1.0, -2.0])
        with pytest.raises(SolverError):
            compute_prices(solve(infeasible), self.scenario)

    def test_cluster_count_mismatch(self):
        single = ClusterSet(
            self.clusters.centroids[:1], self.clusters.kinds[:1], [1], [1.0], self.clusters.params[:1]
        )
        with pytest.raises(SolverError):
            compute_prices(self.sol, self.scenario, single)


class TestRandomPrograms:
    """Preços ajustados contra os duais em programas agrupados aleatórios."""

    @pytest.mark.parametrize("seed", range(50))
    def test_prices_match_duals(self, seed):
        scenario, clusters, sol = random_clp(seed)
        book = compute_prices(sol, scenario, clusters)
        allowed = book.charge_allowed
        expected = prices_from_duals(sol, scenario, clusters)
        np.testing.assert_allclose(book.d[allowed], expected[allowed], atol=1e-9)
        assert np.all(sol.y_ub <= 1e-12)

    @pytest.mark.parametrize("seed", range(50))
    def test_sign_dichotomy(self, seed):
        """d < 0 ⇒ carga no limite superior; d > 0 ⇒ carga zero."""
        scenario, clusters, sol = random_clp(seed)
        book = compute_prices(sol, scenario, clusters)
        rate = np.array([p.max_charge_rate for p in clusters.params])[:, None]
        rate = np.broadcast_to(rate, book.d.shape)
        allowed = book.charge_allowed
        charge = book.primal_charge
        positive = allowed & (book.d > 1e-7)
        negative = allowed & (book.d < -1e-7)
        assert np.all(charge[positive] <= 1e-9)
        assert np.all(charge[negative] >= rate[negative] - 1e-9)

    @pytest.mark.parametrize("seed", range(50))
    def test_driving_hours_above_parked(self, seed):
        scenario, clusters, sol = random_clp(seed)
        book = compute_prices(sol, scenario, clusters)
        for i in range(book.k):
            blocked = ~book.charge_allowed[i]
            if blocked.any() and book.charge_allowed[i].any():
                assert book.d[i, blocked].min() > book.d[i, book.charge_allowed[i]].max()


class TestRatios:
    """Testes das razões primais e das participações das fontes."""

    def test_three_hour_ratios(self):
        scenario, _, clusters = three_hour_scenario()
        ratios = compute_ratios(solve(build_clp(clusters, scenario)))
        np.testing.assert_allclose(ratios.rc, [[0, 1, 0], [1, 0, 0]], atol=1e-9)
        assert np.all(ratios.rg == 0.0)
        np.testing.assert_allclose(ratios.alpha_c, [1.0, 1.0])
        assert np.all(ratios.alpha_g == 0.0)

    def test_sums_are_zero_or_one(self):
        scenario, clusters = phev_scenario()
        ratios = compute_ratios(solve(build_clp(clusters, scenario)))
        for series in (ratios.rc, ratios.rg, ratios.rf):
            total = series.sum(axis=1)
            assert np.all(np.isclose(total, 0.0) | np.isclose(total, 1.0))

    def test_phev_generates_with_initial_fuel(self):
        """A bateria cheia não cobre 18 kWh: o resto vem da gasolina do tanque."""
        scenario, clusters = phev_scenario()
        ratios = compute_ratios(solve(build_clp(clusters, scenario)))
        assert ratios.rg[0, 8] == pytest.approx(1.0)
        assert ratios.alpha_g[0] == pytest.approx(1.0)
        assert ratios.alpha_c[0] == pytest.approx(0.0, abs=1e-9)
        assert ratios.alpha_f[0] == pytest.approx(0.0, abs=1e-9)


class TestReportHelpers:
    """Testes da normalização e da tabela de perfis."""

    def test_normalize_by_peak(self):
        assert normalize_for_report([2, 4])[0].tolist() == [0.5, 1.0]

    def test_normalize_negative_peak(self):
        assert normalize_for_report([-2, 1])[0].tolist() == [-1.0, 0.5]

    def test_normalize_all_zero(self):
        assert normalize_for_report([0, 0, 0])[0].tolist() == [0.0, 0.0, 0.0]

    def test_normalize_many(self):
        a, b = normalize_for_report(HourlySeries([1.0, 2.0], Unit.KWH), [3.0, 6.0])
        assert a.tolist() == b.tolist() == [0.5, 1.0]

    def test_price_profile_frame(self):
        scenario, _, clusters = three_hour_scenario()
        book = compute_prices(solve(build_clp(clusters, scenario)), scenario, clusters)
        frame = price_profile_frame(book, scenario, clusters.profiles_for_horizon(3))
        assert len(frame) == 6
        assert list(frame.columns) == [
            "cluster", "hour", "price", "adjusted_price", "charge_allowed", "driving"
        ]
        assert frame["price"].max() == pytest.approx(1.0)
        assert frame["adjusted_price"].abs().max() == pytest.approx(1.0)


class TestBooksFile:
    """Testes do arquivo books.json."""

    def setup_method(self):
        scenario, _, clusters = three_hour_scenario()
        sol = solve(build_clp(clusters, scenario))
        self.prices = compute_prices(sol, scenario, clusters)
        self.ratios = compute_ratios(sol)

    def test_save_and_load(self, tmp_path):
        path = save_books(self.prices, self.ratios, str(tmp_path / "out" / "books.json"))
        prices, ratios = load_books(path)
        assert isinstance(prices, PriceBook)
        np.testing.assert_array_equal(prices.d, self.prices.d)
        np.testing.assert_array_equal(prices.charge_allowed, self.prices.charge_allowed)
        assert prices.charge_allowed.dtype == bool
        np.testing.assert_array_equal(ratios.rc, self.ratios.rc)
        np.testing.assert_array_equal(ratios.alpha_c, self.ratios.alpha_c)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputDataError):
            load_books(str(tmp_path / "books.json"))

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "books.json"
        path.write_text('{"prices": {}}', encoding="utf-8")
        with pytest.raises(InputDataError):
            load_books(str(path))


# =============================================================================
# EXECUÇÃO DIRETA
# =============================================================================

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
