"""
================================================================================
MÓDULO: simulation.py - Simulação da Frota e Métricas de Comparação
================================================================================

Roda os agentes de despacho sobre frotas de teste e mede o que interessa ao
agregador e aos motoristas:

    - aumento do pico de demanda (kW e % do pico da carga base)
    - energia da rede e da gasolina (MWh)
    - custo da eletricidade, da gasolina e total ($), custo por milha
    - falhas de demanda

FLUXO DE UMA EXECUÇÃO:
----------------------
    1. prepare_plan(): ajusta pesos e parâmetros dos clusters ao cenário,
       resolve o programa agrupado uma única vez e calcula preços e razões
    2. draw_fleet(): sorteia a frota de teste (fluxo aleatório diferente do
       treino) e as horas de conexão, uniformes na janela de conexão
    3. run_scenario(): despacha os veículos na ordem de chegada
       (hora de conexão, depois id), cada execução com seu livro de carga
    4. run_batch(): repete para várias frotas em paralelo e agrega
       média e desvio padrão

CONVENÇÃO DE CUSTO:
-------------------
    A energia da bateria inicial que o veículo gastou (s_0 − s_n, se
    positiva) é cobrada pelo preço médio da eletricidade no horizonte; a
    gasolina inicial gasta (s^g_0 − s^g_n), pelo preço médio da gasolina.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from colorama import Fore

from src.agents.dispatchers import (
    CAP,
    DISPATCHER_NAMES,
    DispatchEvent,
    Dispatcher,
    LowestCostDispatcher,
    VehicleSchedule,
    make_dispatcher,
    parse_dispatchers,
)
from src.agents.ledger import ChargeLedger
from src.core.catalog import DefaultsCatalog
from src.core.clustering import ClusterSet, cluster_weights
from src.core.errors import ConfigError
from src.core.ingest import Archetype, ProfileTable, synth_fleet
from src.core.lp import LpSolution, build_clp, build_full_lp, solve
from src.core.model import (
    HourlySeries,
    PhysicalConstants,
    Scenario,
    Unit,
    Vehicle,
    VehicleKind,
    classify_vehicle,
    replicate_day,
)
from src.core.pricing import PriceBook, RatioBook, compute_prices, compute_ratios


# =============================================================================
# CONSTANTES
# =============================================================================

# Fluxos aleatórios: treino usa 0, a frota de teste da execução r usa 1 + r
TRAINING_STREAM = 0
FLEET_STREAM_OFFSET = 1

# Subfluxo das horas de conexão dentro do fluxo da execução
PLUG_IN_SUBSTREAM = 7

KWH_PER_MWH = 1000.0

EXAMPLE_PRICES = (0.10, 0.12, 0.14)
EXAMPLE_MILES = ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0))


# =============================================================================
# MÉTRICAS
# =============================================================================

@dataclass(frozen=True)
class RunMetrics:
    """
    Métricas de uma execução (uma frota, um despachante).

    Attributes:
        peak_increase_abs: Aumento do pico de demanda (kW).
        peak_increase_pct: Aumento em % do pico da carga base.
        grid_energy: Energia tirada da rede (MWh).
        gasoline_energy: Energia da gasolina queimada (MWh equivalentes).
        elec_cost: Carga comprada + bateria inicial gasta ($).
        gas_cost: Gasolina comprada + gasolina inicial gasta ($).
        total_cost: elec_cost + gas_cost ($).
        cost_per_mile: total_cost / milhas da frota ($/milha).
        demand_failures: Veículos com falha de demanda.
        fuel_notifications: Avisos de abastecimento emitidos.
        cap_overrun: Carga feita fora do livro (kWh).
    """

    peak_increase_abs: float
    peak_increase_pct: float
    grid_energy: float
    gasoline_energy: float
    elec_cost: float
    gas_cost: float
    total_cost: float
    cost_per_mile: float
    demand_failures: int
    fuel_notifications: int = 0
    cap_overrun: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


METRIC_NAMES = tuple(f.name for f in fields(RunMetrics))


def compute_metrics(
    scenario: Scenario,
    fleet: Sequence[Vehicle],
    schedules: Sequence[VehicleSchedule],
) -> Tuple[RunMetrics, HourlySeries]:
    """
    Métricas da execução e carga horária da frota (kWh por hora).
    """
    n = scenario.horizon
    fleet_load = np.zeros(n)
    fuel_total = np.zeros(n)
    generated = 0.0
    stored_used = 0.0
    tank_used = 0.0
    failures = 0
    notifications = 0
    overrun = 0.0

    for vehicle, schedule in zip(fleet, schedules):
        fleet_load += schedule.charge.values
        fuel_total += schedule.fuel.values
        generated += schedule.generate.total
        stored_used += max(0.0, vehicle.params.initial_storage - float(schedule.storage.values[-1]))
        tank_used += max(0.0, vehicle.params.initial_fuel - float(schedule.fuel_level.values[-1]))
        failures += int(schedule.demand_failure)
        notifications += len(schedule.notifications)
        overrun += schedule.overrun.total

    base = scenario.base_load.values
    base_peak = float(base.max())
    peak_abs = max(0.0, float((base + fleet_load).max()) - base_peak)
    peak_pct = 100.0 * peak_abs / base_peak if base_peak > 0 else 0.0

    prices = scenario.elec_price.values
    gas = scenario.gas_price.values
    elec_cost = float(prices @ fleet_load) + stored_used * float(prices.mean())
    gas_cost = float(gas @ fuel_total) + tank_used * float(gas.mean())
    total_cost = elec_cost + gas_cost
    miles = float(sum(v.total_miles for v in fleet))

    metrics = RunMetrics(
        peak_increase_abs=peak_abs,
        peak_increase_pct=peak_pct,
        grid_energy=float(fleet_load.sum()) / KWH_PER_MWH,
        gasoline_energy=generated / KWH_PER_MWH,
        elec_cost=elec_cost,
        gas_cost=gas_cost,
        total_cost=total_cost,
        cost_per_mile=total_cost / miles if miles > 0 else 0.0,
        demand_failures=failures,
        fuel_notifications=notifications,
        cap_overrun=overrun,
    )
    return metrics, HourlySeries(fleet_load, Unit.KWH)


def purchase_cost(scenario: Scenario, schedules: Sequence[VehicleSchedule]) -> float:
    """Custo só do que foi comprado: Σ p·carga + Σ p^g·gasolina."""
    prices = scenario.elec_price.values
    gas = scenario.gas_price.values
    return float(sum(prices @ s.charge.values + gas @ s.fuel.values for s in schedules))


def energy_balance(vehicle: Vehicle, schedule: VehicleSchedule) -> Tuple[float, float]:
    """
    Os dois lados do balanço de energia do veículo.

        c_eff·Σcarga + g_eff·Σgeração + Σfalta  =  consumo·Σmilhas + (s_n − s_0)
    """
    p = vehicle.params
    supplied = (
        p.charge_efficiency * schedule.charge.total
        + p.generation_efficiency * schedule.generate.total
        + schedule.shortfall.total
    )
    used = float(vehicle.transport_energy.sum()) + float(schedule.storage.values[-1]) - p.initial_storage
    return supplied, used


# =============================================================================
# PLANO (SOLUÇÃO AGRUPADA)
# =============================================================================

@dataclass(frozen=True, eq=False)
class SimulationPlan:
    """
    Tudo que os despachantes precisam, calculado uma vez por cenário.

    Attributes:
        scenario: Cenário simulado.
        cluster_set: Clusters com pesos e parâmetros do cenário.
        solution: Solução ótima do programa agrupado.
        book: Preços ajustados por restrição.
        ratios: Razões primais.
        archetypes: Arquétipos das frotas sintéticas de teste.
        test_profiles: Perfis de teste lidos de arquivo (opcional).
    """

    scenario: Scenario
    cluster_set: ClusterSet
    solution: Optional[LpSolution]
    book: PriceBook
    ratios: RatioBook
    archetypes: Tuple[Archetype, ...] = ()
    test_profiles: Optional[ProfileTable] = None

    def dispatcher(self, name: str) -> Dispatcher:
        return make_dispatcher(
            name,
            self.scenario.elec_price.values,
            book=self.book,
            ratios=self.ratios,
            cluster_set=self.cluster_set,
        )


def fit_cluster_set(cluster_set: ClusterSet, scenario: Scenario) -> ClusterSet:
    """Pesos b escalados para a frota do cenário e parâmetros das suas constantes."""
    weights = cluster_weights(cluster_set, scenario.fleet_size)
    params = [scenario.constants.params_for(kind) for kind in cluster_set.kinds]
    return cluster_set.with_weights(weights).with_params(params)


def prepare_plan(
    scenario: Scenario,
    cluster_set: ClusterSet,
    archetypes: Optional[Sequence[Archetype]] = None,
    test_profiles: Optional[ProfileTable] = None,
    fit: bool = True,
    verbose: bool = False,
) -> SimulationPlan:
    """
    Resolve o programa agrupado e calcula preços e razões.

    Args:
        scenario: Cenário.
        cluster_set: Clusters de treino.
        archetypes: Arquétipos das frotas de teste (padrão: catálogo).
        test_profiles: Perfis de teste (substituem a frota sintética).
        fit: Ajustar pesos e parâmetros ao cenário (False mantém os do conjunto).
        verbose: Imprime o andamento.

    Raises:
        SolverError: Programa agrupado sem solução ótima (limite apertado demais).
    """
    if fit:
        cluster_set = fit_cluster_set(cluster_set, scenario)
    if verbose:
        print(Fore.CYAN + f"🧮 Resolvendo programa agrupado: {cluster_set.k} clusters, "
                          f"{scenario.horizon} horas")

    solution = solve(build_clp(cluster_set, scenario), verbose=verbose).require_optimal()
    book = compute_prices(solution, scenario, cluster_set)
    ratios = compute_ratios(solution)
    if archetypes is None and test_profiles is None:
        archetypes = DefaultsCatalog().archetypes()
    return SimulationPlan(scenario, cluster_set, solution, book, ratios,
                          tuple(archetypes or ()), test_profiles)


# =============================================================================
# FROTA
# =============================================================================

def arrival_order(fleet: Sequence[Vehicle]) -> List[Vehicle]:
    """Ordem de chegada: hora de conexão, depois id."""
    return sorted(fleet, key=lambda v: (v.plug_in_hour, v.id))


def vehicles_from_profiles(
    table: ProfileTable,
    scenario: Scenario,
    plug_in_hours: Sequence[int],
    constants: Optional[PhysicalConstants] = None,
) -> List[Vehicle]:
    """Veículos com perfis diários repetidos no horizonte e bateria/tanque cheios."""
    constants = constants or scenario.constants
    vehicles = []
    for (vehicle_id, day), plug_in in zip(table, plug_in_hours):
        kind = classify_vehicle(day)
        profile = HourlySeries(replicate_day(day.values, scenario.horizon), Unit.MILES)
        vehicles.append(Vehicle(vehicle_id, constants.params_for(kind), profile, int(plug_in)))
    return vehicles


def draw_fleet(
    scenario: Scenario,
    seed: int,
    run: int = 0,
    archetypes: Sequence[Archetype] = (),
    test_profiles: Optional[ProfileTable] = None,
    count: Optional[int] = None,
) -> List[Vehicle]:
    """
    Sorteia a frota de teste da execução `run`, já na ordem de chegada.

    Perfis vêm de `test_profiles` (amostrados sem reposição enquanto houver
    perfis suficientes) ou de synth_fleet no fluxo 1 + run, nunca no fluxo
    do treino. Horas de conexão são inteiras e uniformes em
    [0, plug_in_window).

    Raises:
        ConfigError: Sem arquétipos e sem perfis de teste.
    """
    count = scenario.fleet_size if count is None else count
    if count <= 0:
        return []
    stream = FLEET_STREAM_OFFSET + run
    rng = np.random.default_rng([seed, stream, PLUG_IN_SUBSTREAM])

    if test_profiles is not None:
        chosen = rng.choice(len(test_profiles), size=count, replace=count > len(test_profiles))
        table = test_profiles.select(np.sort(chosen))
    elif archetypes:
        table = synth_fleet(count, archetypes, seed, stream=stream, id_prefix=f"r{run}v")
    else:
        raise ConfigError("frota de teste sem arquétipos e sem perfis")

    plug_in = rng.integers(0, scenario.plug_in_window, size=count)
    return arrival_order(vehicles_from_profiles(table, scenario, plug_in))


# =============================================================================
# EXECUÇÃO
# =============================================================================

@dataclass(frozen=True, eq=False)
class RunResult:
    """Resultado de um despachante sobre uma frota."""

    dispatcher: str
    run: int
    metrics: RunMetrics
    fleet_load: HourlySeries
    vehicles: Tuple[Vehicle, ...] = ()
    schedules: Tuple[VehicleSchedule, ...] = ()

    def events(self) -> Iterator[Dict[str, Any]]:
        """Log de despacho: chegada, cluster e eventos de cada cronograma."""
        for vehicle, schedule in zip(self.vehicles, self.schedules):
            arrival = DispatchEvent("arrival", vehicle.id, vehicle.plug_in_hour,
                                    {"kind": vehicle.params.kind.value})
            yield {"run": self.run, **arrival.to_dict()}
            if schedule.cluster is not None:
                assigned = DispatchEvent("cluster", vehicle.id, None, {"cluster": schedule.cluster})
                yield {"run": self.run, **assigned.to_dict()}
            for event in schedule.events:
                yield {"run": self.run, **event.to_dict()}


def dispatch_fleet(
    dispatcher: Dispatcher,
    fleet: Sequence[Vehicle],
    ledger: ChargeLedger,
) -> List[VehicleSchedule]:
    """Despacha os veículos um a um, na ordem dada."""
    return [dispatcher.dispatch(vehicle, ledger) for vehicle in fleet]


def run_scenario(
    plan: SimulationPlan,
    dispatcher: str,
    seed: int,
    run: int = 0,
    fleet: Optional[Sequence[Vehicle]] = None,
    keep_schedules: bool = True,
) -> RunResult:
    """
    Uma execução: frota, livro novo, despacho em ordem de chegada, métricas.

    Falhas de demanda entram nas métricas; nada é abortado.
    """
    scenario = plan.scenario
    if fleet is None:
        fleet = draw_fleet(scenario, seed, run, plan.archetypes, plan.test_profiles)
    else:
        fleet = arrival_order(fleet)

    agent = plan.dispatcher(dispatcher)
    schedules = dispatch_fleet(agent, fleet, ChargeLedger(scenario.charge_cap))
    metrics, load = compute_metrics(scenario, fleet, schedules)
    if keep_schedules:
        return RunResult(agent.name, run, metrics, load, tuple(fleet), tuple(schedules))
    return RunResult(agent.name, run, metrics, load)


@dataclass(frozen=True, eq=False)
class BatchResult:
    """
    Resultado de várias execuções por despachante.

    Attributes:
        dispatchers: Despachantes, na ordem pedida.
        runs: Métricas por despachante, na ordem das execuções.
        loads: Carga da frota por despachante (execuções × horas).
        base_load: Carga base do cenário.
        first_run: Resultado completo (veículos e cronogramas) da execução 0.
    """

    dispatchers: Tuple[str, ...]
    runs: Dict[str, List[RunMetrics]]
    loads: Dict[str, np.ndarray]
    base_load: HourlySeries
    first_run: Dict[str, RunResult] = field(default_factory=dict)

    def events(self) -> Iterator[Dict[str, Any]]:
        """Log de despacho da execução 0 de cada despachante (guardada por run_batch)."""
        for name in self.dispatchers:
            result = self.first_run.get(name)
            if result is None:
                continue
            for record in result.events():
                yield {"dispatcher": name, **record}

    @property
    def run_count(self) -> int:
        return len(self.runs[self.dispatchers[0]]) if self.dispatchers else 0

    def runs_frame(self) -> pd.DataFrame:
        rows = [
            {"dispatcher": name, "run": run, **metrics.to_dict()}
            for name in self.dispatchers
            for run, metrics in enumerate(self.runs[name])
        ]
        return pd.DataFrame(rows, columns=["dispatcher", "run", *METRIC_NAMES])

    def summary(self) -> pd.DataFrame:
        """Uma linha por despachante: média e desvio padrão (populacional) de cada métrica."""
        frame = self.runs_frame()
        rows = []
        for name in self.dispatchers:
            subset = frame[frame["dispatcher"] == name]
            row: Dict[str, Any] = {"dispatcher": name, "runs": len(subset)}
            for metric in METRIC_NAMES:
                row[metric] = float(subset[metric].mean())
            for metric in METRIC_NAMES:
                row[f"{metric}_std"] = float(subset[metric].std(ddof=0))
            rows.append(row)
        return pd.DataFrame(rows)

    def mean_load(self, name: str) -> np.ndarray:
        return self.loads[name].mean(axis=0)

    def load_frame(self, name: str) -> pd.DataFrame:
        """Curva horária média: carga base, carga da frota e total (kW)."""
        fleet = self.mean_load(name)
        base = self.base_load.values
        return pd.DataFrame({
            "hour": np.arange(base.size),
            "base_load": base,
            "fleet_load": fleet,
            "total_load": base + fleet,
        })

    def demand_failures(self, name: str) -> int:
        return int(sum(m.demand_failures for m in self.runs.get(name, [])))


def run_batch(
    plan: SimulationPlan,
    dispatchers: Sequence[str] = DISPATCHER_NAMES,
    runs: int = 1,
    seed: int = 0,
    threads: int = 1,
    verbose: bool = False,
) -> BatchResult:
    """
    Várias frotas independentes, todos os despachantes sobre a mesma frota.

    As execuções rodam em paralelo (ThreadPoolExecutor); cada uma tem sua
    frota, seu gerador e seu livro. A agregação segue a ordem das execuções,
    então o resultado não depende de `threads`.

    Raises:
        ConfigError: runs < 1, threads < 1 ou despachante desconhecido.
    """
    names = parse_dispatchers(dispatchers)
    if runs < 1:
        raise ConfigError("runs precisa ser >= 1")
    if threads < 1:
        raise ConfigError("threads precisa ser >= 1")

    scenario = plan.scenario

    def one_run(run: int) -> Dict[str, RunResult]:
        fleet = draw_fleet(scenario, seed, run, plan.archetypes, plan.test_profiles)
        return {
            name: run_scenario(plan, name, seed, run, fleet=fleet, keep_schedules=run == 0)
            for name in names
        }

    if verbose:
        print(Fore.CYAN + f"🚗 {runs} execuções × {len(names)} despachantes, "
                          f"{scenario.fleet_size} veículos, {threads} thread(s)")

    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(one_run, range(runs)))

    batch = BatchResult(
        dispatchers=tuple(names),
        runs={name: [r[name].metrics for r in results] for name in names},
        loads={name: np.array([r[name].fleet_load.values for r in results]) for name in names},
        base_load=scenario.base_load,
        first_run=dict(results[0]),
    )
    if verbose:
        for name in names:
            failures = batch.demand_failures(name)
            colour = Fore.GREEN if failures == 0 else Fore.YELLOW
            print(colour + f"   {name}: {failures} falha(s) de demanda")
    return batch


# =============================================================================
# LIMITE INFERIOR
# =============================================================================

def fleet_lower_bound(fleet: Sequence[Vehicle], scenario: Scenario, verbose: bool = False) -> float:
    """
    Ótimo do programa completo (um bloco por veículo).

    Nenhum cronograma viável sob o limite de carga custa menos (em compras)
    que este valor. Só para frotas pequenas.

    Raises:
        SolverError: Programa completo sem solução ótima.
    """
    return solve(build_full_lp(fleet, scenario), verbose=verbose).require_optimal().objective


# =============================================================================
# CENÁRIO DE TRÊS HORAS
# =============================================================================

@dataclass(frozen=True, eq=False)
class ExampleOutcome:
    """Os dois despachos do cenário de três horas."""

    scenario: Scenario
    vehicles: Tuple[Vehicle, ...]
    cluster_set: ClusterSet
    book: PriceBook
    lowest_cost: Tuple[VehicleSchedule, ...]
    cap: Tuple[VehicleSchedule, ...]
    clp_objective: float


def three_hour_scenario(consumption: float = 0.3) -> Tuple[Scenario, List[Vehicle], ClusterSet]:
    """
    Dois BEVs, três horas, baterias vazias.

    Preços [0.10, 0.12, 0.14]; o veículo 1 dirige 1 milha na hora 2, o
    veículo 2 dirige 1 milha na hora 1; cada hora comporta a energia de uma
    milha. Ambos conectam na hora 0, o veículo 1 primeiro. Cada veículo é
    um cluster de um membro.
    """
    n = len(EXAMPLE_PRICES)
    constants = PhysicalConstants(consumption_kwh_per_mile=consumption, charge_efficiency=1.0)
    params = constants.params_for(VehicleKind.BEV).with_initial(0.0)
    scenario = Scenario(
        horizon=n,
        base_load=HourlySeries(np.zeros(n), Unit.KW),
        elec_price=HourlySeries(EXAMPLE_PRICES, Unit.USD_PER_KWH),
        gas_price=HourlySeries(np.full(n, 3.95), Unit.USD_PER_GALLON),
        charge_cap=HourlySeries(np.full(n, consumption), Unit.KWH),
        fleet_size=len(EXAMPLE_MILES),
        constants=constants,
        plug_in_window=1,
    )
    vehicles = [
        Vehicle(f"veiculo{i + 1}", params, HourlySeries(miles, Unit.MILES), 0)
        for i, miles in enumerate(EXAMPLE_MILES)
    ]
    cluster_set = ClusterSet(
        centroids=np.array(EXAMPLE_MILES),
        kinds=(VehicleKind.BEV, VehicleKind.BEV),
        member_counts=np.ones(2, dtype=int),
        weights=np.ones(2),
        params=(params, params),
        assignments=np.arange(2),
    )
    return scenario, vehicles, cluster_set


def run_three_hour_example(consumption: float = 0.3, verbose: bool = False) -> ExampleOutcome:
    """
    Despacha o cenário de três horas com o guloso de menor preço (respeitando
    o limite por fora) e com preços ajustados por restrição.
    """
    scenario, vehicles, cluster_set = three_hour_scenario(consumption)
    plan = prepare_plan(scenario, cluster_set, archetypes=(), fit=False, verbose=verbose)

    greedy = LowestCostDispatcher(scenario.elec_price.values, respect_ledger=True)
    lowest = dispatch_fleet(greedy, vehicles, ChargeLedger(scenario.charge_cap))
    cap = dispatch_fleet(plan.dispatcher(CAP), vehicles, ChargeLedger(scenario.charge_cap))

    return ExampleOutcome(scenario, tuple(vehicles), plan.cluster_set, plan.book,
                          tuple(lowest), tuple(cap), plan.solution.objective)
