"""
================================================================================
MÓDULO: dispatchers.py - Agentes de Despacho por Veículo
================================================================================

Cada veículo que se conecta ao agregador recebe um cronograma de carga
(e, se for PHEV, de geração e abastecimento) montado por um destes agentes:

    - CapDispatcher:        preços ajustados por restrição (d_ℓ) + livro de carga
    - StandardDispatcher:   carga na potência máxima assim que conecta
    - LowestCostDispatcher: carga nas horas de eletricidade mais barata
    - PrimalPctDispatcher:  repete as proporções horárias do seu cluster

ARQUITETURA DO AGENTE:
----------------------
Todos os agentes usam o mesmo motor de viabilidade:

    ┌─────────────────────────────────────────┐
    │            ScheduleBuilder              │
    ├─────────────────────────────────────────┤
    │  ┌─────────────────────────────────┐    │
    │  │    Alvos do agente (opcional)   │    │
    │  │  Standard: c̄ ao conectar        │    │
    │  │  PrimalPct: razões do cluster   │    │
    │  └─────────────────────────────────┘    │
    │                  │                      │
    │                  ▼                      │
    │  ┌─────────────────────────────────┐    │
    │  │      Reparo de déficits         │    │
    │  │  1. carga nas horas ordenadas   │    │
    │  │  2. geração (PHEV) + gasolina   │    │
    │  │  3. carga extra fora do limite  │    │
    │  │     (apenas PrimalPct)          │    │
    │  │  4. falta de energia registrada │    │
    │  └─────────────────────────────────┘    │
    │                  │                      │
    │                  ▼                      │
    │  ┌─────────────────────────────────┐    │
    │  │   Commit no livro de carga      │    │
    │  └─────────────────────────────────┘    │
    └─────────────────────────────────────────┘

O reparo percorre o traço de armazenamento da bateria: na primeira hora em
que ele fica negativo, o déficit é coberto carregando nas horas conectadas
anteriores, na ordem de preferência do agente. Cada hora recebe no máximo
min(c̄ − já carregado, restante do livro, folga da bateria daqui em diante).

FALHA DE DEMANDA:
-----------------
Quando nem carga nem geração cobrem o déficit, a energia que faltou fica na
série `shortfall` do cronograma (o traço nunca fica negativo) e um evento
"demand_failure" é anotado. Falhas não são exceções.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.agents.ledger import ChargeLedger
from src.core.clustering import ClusterSet, assign_cluster
from src.core.errors import ConfigError, LedgerConflict, ModelError
from src.core.model import (
    ENERGY_QUANTUM,
    ENERGY_TOL,
    HourlySeries,
    Unit,
    Vehicle,
    VehicleKind,
    quantize_down,
    quantize_up,
)
from src.core.pricing import PriceBook, RatioBook


# =============================================================================
# CONSTANTES
# =============================================================================

CAP = "cap"
STANDARD = "standard"
LOWEST_COST = "lowest_cost"
PRIMAL_PCT = "primal_pct"

DISPATCHER_NAMES = (CAP, STANDARD, LOWEST_COST, PRIMAL_PCT)

# Traço de armazenamento abaixo disso (kWh) é déficit
DEFICIT_TOL = 1e-12

# Carga primal por veículo acima disso conta como "o cluster carrega nesta hora"
PRIMAL_CHARGE_TOL = 1e-9

# Casas decimais usadas para comparar valores de d
PRICE_DECIMALS = 9

MAX_COMMIT_RETRIES = 16
MAX_REDISTRIBUTION_ROUNDS = 20


# =============================================================================
# EVENTOS E CRONOGRAMA
# =============================================================================

@dataclass(frozen=True)
class DispatchEvent:
    """Linha do log de despacho (JSON lines)."""

    kind: str
    vehicle_id: str
    hour: Optional[int] = None
    data: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        record = {"event": self.kind, "vehicle": self.vehicle_id}
        if self.hour is not None:
            record["hour"] = self.hour
        record.update(self.data)
        return record


@dataclass(frozen=True, eq=False)
class VehicleSchedule:
    """
    Cronograma de um veículo ao longo do horizonte.

    Attributes:
        vehicle_id: Identificador do veículo.
        kind: BEV ou PHEV.
        dispatcher: Nome do agente que montou o cronograma.
        charge: Energia tirada da rede por hora (kWh).
        generate: Energia gerada com gasolina por hora (kWh).
        fuel: Gasolina abastecida por hora (galões).
        storage: Energia na bateria ao fim de cada hora (kWh).
        fuel_level: Gasolina no tanque ao fim de cada hora (galões).
        shortfall: Energia de transporte não atendida (kWh).
        overrun: Parte de `charge` feita fora do livro de carga (kWh).
        cluster: Cluster atribuído (None para agentes sem cluster).
        notifications: Horas com aviso de abastecimento.
        events: Eventos anotados durante o despacho.
    """

    vehicle_id: str
    kind: VehicleKind
    dispatcher: str
    charge: HourlySeries
    generate: HourlySeries
    fuel: HourlySeries
    storage: HourlySeries
    fuel_level: HourlySeries
    shortfall: HourlySeries
    overrun: HourlySeries
    cluster: Optional[int] = None
    notifications: Tuple[int, ...] = ()
    events: Tuple[DispatchEvent, ...] = ()

    @property
    def horizon(self) -> int:
        return len(self.charge)

    @property
    def demand_failure(self) -> bool:
        return self.shortfall.total > ENERGY_TOL

    @property
    def ledger_charge(self) -> np.ndarray:
        """Carga debitada do livro (exata, na grade)."""
        return self.charge.values - self.overrun.values


# =============================================================================
# MOTOR DE VIABILIDADE
# =============================================================================

def _suffix_min(values: np.ndarray) -> np.ndarray:
    """Mínimo de values[t] para t >= h, em cada h."""
    return np.minimum.accumulate(values[::-1])[::-1]


class ScheduleBuilder:
    """
    Monta o cronograma de um veículo respeitando bateria, tanque e livro.

    Carga fica sempre na grade ENERGY_QUANTUM; geração e abastecimento não
    passam pelo livro e usam valores contínuos.

    Args:
        vehicle: Veículo a ser atendido.
        limit: Restante do livro de carga (None = sem limite de frota).
    """

    def __init__(self, vehicle: Vehicle, limit: Optional[np.ndarray] = None):
        n = vehicle.horizon
        if limit is not None and len(limit) != n:
            raise ModelError(f"livro de carga com {len(limit)} horas, veículo com {n}")

        self.vehicle = vehicle
        self.params = vehicle.params
        self.limit = limit
        self.demand = vehicle.transport_energy
        self.connected = vehicle.connected
        self.driving = vehicle.driving

        self.charge = np.zeros(n)
        self.generate = np.zeros(n)
        self.fuel = np.zeros(n)
        self.shortfall = np.zeros(n)
        self.overrun = np.zeros(n)
        self.notifications: List[int] = []
        self.events: List[DispatchEvent] = []

    # -------------------------------------------------------------------------
    # Traços
    # -------------------------------------------------------------------------

    def storage(self) -> np.ndarray:
        p = self.params
        flow = (
            p.charge_efficiency * self.charge
            + p.generation_efficiency * self.generate
            + self.shortfall
            - self.demand
        )
        return p.initial_storage + np.cumsum(flow)

    def fuel_level(self) -> np.ndarray:
        p = self.params
        return p.initial_fuel + np.cumsum(self.fuel - p.gallon_per_kwh * self.generate)

    def first_deficit(self) -> Optional[int]:
        below = np.flatnonzero(self.storage() < -DEFICIT_TOL)
        return int(below[0]) if below.size else None

    # -------------------------------------------------------------------------
    # Carga
    # -------------------------------------------------------------------------

    def charge_room(self, hour: int, capped: bool = True) -> float:
        """Quanto ainda cabe de carga na hora `hour` (kWh, na grade)."""
        p = self.params
        headroom = _suffix_min(p.battery_capacity - self.storage())[hour]
        room = min(p.max_charge_rate - self.charge[hour], headroom / p.charge_efficiency)
        if capped and self.limit is not None:
            room = min(room, self.limit[hour] - (self.charge[hour] - self.overrun[hour]))
        return float(quantize_down(max(room, 0.0)))

    def add_charge(self, hour: int, amount: float, capped: bool = True) -> None:
        self.charge[hour] += amount
        if not capped:
            self.overrun[hour] += amount

    def charge_at_max_rate(self, hours: Sequence[int]) -> None:
        """Carrega o máximo possível em cada hora, na ordem dada."""
        for hour in hours:
            room = self.charge_room(hour)
            if room > 0:
                self.add_charge(hour, room)

    def charge_by_ratio(self, total: float, ratios: np.ndarray) -> float:
        """
        Distribui `total` kWh de carga pelas horas conforme `ratios`.

        Alvos em horas não conectadas ou cortados pela viabilidade voltam a
        ser distribuídos entre as horas conectadas que ainda têm folga, em
        proporção às razões dessas horas (uniforme se todas forem zero).

        Returns:
            float: Energia que não coube (kWh).
        """
        targets = total * ratios
        placed = 0.0
        for hour in np.flatnonzero((targets > 0) & self.connected):
            amount = min(float(quantize_down(targets[hour])), self.charge_room(int(hour)))
            if amount > 0:
                self.add_charge(int(hour), amount)
                placed += amount

        residual = total - placed
        candidates = np.flatnonzero(self.connected)
        for _ in range(MAX_REDISTRIBUTION_ROUNDS):
            if residual <= ENERGY_QUANTUM or candidates.size == 0:
                break
            rooms = np.array([self.charge_room(int(h)) for h in candidates])
            open_hours = candidates[rooms > 0]
            if open_hours.size == 0:
                break
            weights = ratios[open_hours]
            if weights.sum() <= 0:
                weights = np.ones(open_hours.size)
            shares = residual * weights / weights.sum()

            progress = 0.0
            for hour, share in zip(open_hours, shares):
                amount = min(float(quantize_down(share)), self.charge_room(int(hour)))
                if amount > 0:
                    self.add_charge(int(hour), amount)
                    progress += amount
            if progress <= 0:
                break
            residual -= progress
        return max(residual, 0.0)

    # -------------------------------------------------------------------------
    # Gasolina
    # -------------------------------------------------------------------------

    def _notify_fuel(self, hour: int, gallons: float) -> None:
        if hour not in self.notifications:
            self.notifications.append(hour)
        self.events.append(DispatchEvent(
            "fuel_notification", self.vehicle.id, hour, {"gallons": float(gallons)}
        ))

    def add_fuel(self, hour: int, gallons: float) -> float:
        """Abastece até `gallons` na hora `hour` (limitado por f̄ e pelo tanque)."""
        p = self.params
        tank_room = _suffix_min(p.tank_capacity - self.fuel_level())[hour]
        added = min(gallons, p.max_fuel_rate - self.fuel[hour], tank_room)
        if added <= 0:
            return 0.0
        self.fuel[hour] += added
        self._notify_fuel(hour, added)
        return added

    def generation_room(self, hour: int) -> float:
        """Geração possível na hora `hour` sem abastecer (kWh)."""
        p = self.params
        headroom = _suffix_min(p.battery_capacity - self.storage())[hour]
        fuel = _suffix_min(self.fuel_level())[hour]
        room = min(
            p.max_generation_rate - self.generate[hour],
            headroom / p.generation_efficiency,
            fuel / p.gallon_per_kwh,
        )
        return max(room, 0.0)

    def fuel_by_ratio(self, gallons: float, ratios: np.ndarray) -> None:
        for hour in np.flatnonzero((ratios > 0) & self.driving):
            self.add_fuel(int(hour), gallons * ratios[hour])

    def generate_by_ratio(self, total: float, ratios: np.ndarray) -> None:
        for hour in np.flatnonzero((ratios > 0) & self.driving):
            amount = min(total * ratios[hour], self.generation_room(int(hour)))
            if amount > 0:
                self.generate[hour] += amount

    # -------------------------------------------------------------------------
    # Reparo de déficits
    # -------------------------------------------------------------------------

    def _charge_toward(self, deficit_hour: int, deficit: float, order: Sequence[int], capped: bool) -> float:
        c_eff = self.params.charge_efficiency
        for hour in order:
            if deficit <= DEFICIT_TOL:
                break
            if hour >= deficit_hour:
                continue
            room = self.charge_room(hour, capped)
            if room <= 0:
                continue
            amount = min(float(quantize_up(deficit / c_eff)), room)
            self.add_charge(hour, amount, capped)
            deficit -= c_eff * amount
        return deficit

    def _generate_toward(self, deficit_hour: int, deficit: float) -> float:
        """Gera nas horas de direção até `deficit_hour`, da mais tardia para a mais cedo."""
        p = self.params
        g_eff = p.generation_efficiency
        for hour in range(deficit_hour, -1, -1):
            if deficit <= DEFICIT_TOL:
                break
            if not self.driving[hour]:
                continue
            headroom = _suffix_min(p.battery_capacity - self.storage())[hour]
            desired = min(
                deficit / g_eff,
                p.max_generation_rate - self.generate[hour],
                headroom / g_eff,
            )
            if desired <= 0:
                continue

            available = _suffix_min(self.fuel_level())[hour]
            needed = p.gallon_per_kwh * desired
            if needed > available and p.max_fuel_rate > 0:
                available += self.add_fuel(hour, needed - available)

            amount = min(desired, max(available, 0.0) / p.gallon_per_kwh)
            if amount <= 0:
                continue
            self.generate[hour] += amount
            deficit -= g_eff * amount
        return deficit

    def cover_deficits(self, order: Sequence[int], make_up_order: Optional[Sequence[int]] = None) -> None:
        """
        Elimina os déficits do traço de armazenamento, do primeiro ao último.

        Args:
            order: Horas conectadas na ordem de preferência do agente.
            make_up_order: Se dado, carga fora do livro nessas horas antes de
                registrar falta de energia.
        """
        can_generate = self.params.max_generation_rate > 0
        while True:
            hour = self.first_deficit()
            if hour is None:
                return
            deficit = -self.storage()[hour]
            deficit = self._charge_toward(hour, deficit, order, capped=True)
            if deficit > DEFICIT_TOL and can_generate:
                deficit = self._generate_toward(hour, deficit)
            if deficit > DEFICIT_TOL and make_up_order is not None and self.limit is not None:
                before = float(self.overrun.sum())
                deficit = self._charge_toward(hour, deficit, make_up_order, capped=False)
                extra = float(self.overrun.sum()) - before
                if extra > 0:
                    self.events.append(DispatchEvent(
                        "cap_overrun", self.vehicle.id, hour, {"kwh": extra}
                    ))

            gap = -self.storage()[hour]
            if gap > DEFICIT_TOL:
                self.shortfall[hour] += gap
                if gap > ENERGY_TOL:
                    self.events.append(DispatchEvent(
                        "demand_failure", self.vehicle.id, hour, {"shortfall_kwh": float(gap)}
                    ))

    # -------------------------------------------------------------------------
    # Resultado
    # -------------------------------------------------------------------------

    def finish(self, dispatcher: str, cluster: Optional[int] = None) -> VehicleSchedule:
        p = self.params
        storage = np.clip(self.storage(), 0.0, p.battery_capacity)
        level = np.clip(self.fuel_level(), 0.0, p.tank_capacity)
        summary = DispatchEvent("schedule", self.vehicle.id, None, {
            "dispatcher": dispatcher,
            "cluster": cluster,
            "grid_kwh": float(self.charge.sum()),
            "generated_kwh": float(self.generate.sum()),
            "fuel_gallons": float(self.fuel.sum()),
            "shortfall_kwh": float(self.shortfall.sum()),
        })
        return VehicleSchedule(
            vehicle_id=self.vehicle.id,
            kind=p.kind,
            dispatcher=dispatcher,
            charge=HourlySeries(self.charge, Unit.KWH),
            generate=HourlySeries(self.generate, Unit.KWH),
            fuel=HourlySeries(self.fuel, Unit.GALLONS),
            storage=HourlySeries(storage, Unit.KWH),
            fuel_level=HourlySeries(level, Unit.GALLONS),
            shortfall=HourlySeries(self.shortfall, Unit.KWH),
            overrun=HourlySeries(self.overrun, Unit.KWH),
            cluster=cluster,
            notifications=tuple(sorted(self.notifications)),
            events=tuple(self.events) + (summary,),
        )


# =============================================================================
# ORDENAÇÃO DAS HORAS
# =============================================================================

def cap_charge_order(
    d: np.ndarray,
    primal_charging: np.ndarray,
    prices: np.ndarray,
    connected: np.ndarray,
) -> np.ndarray:
    """
    Horas conectadas por d crescente.

    Empates em d (até 1e-9) preferem horas em que o cluster carrega na
    solução agrupada, depois a eletricidade mais barata, depois a mais cedo.
    """
    hours = np.flatnonzero(connected)
    return hours[np.lexsort((
        hours,
        prices[hours],
        ~primal_charging[hours],
        np.round(d[hours], PRICE_DECIMALS),
    ))]


def price_order(prices: np.ndarray, connected: np.ndarray) -> np.ndarray:
    """Horas conectadas por preço crescente, empate na mais cedo."""
    hours = np.flatnonzero(connected)
    return hours[np.lexsort((hours, prices[hours]))]


def ratio_order(ratios: np.ndarray, connected: np.ndarray) -> np.ndarray:
    """Horas conectadas por razão decrescente, empate na mais cedo."""
    hours = np.flatnonzero(connected)
    return hours[np.lexsort((hours, -ratios[hours]))]


# =============================================================================
# COMMIT
# =============================================================================

def _build_and_commit(
    build: Callable[[Optional[np.ndarray]], ScheduleBuilder],
    ledger: Optional[ChargeLedger],
) -> ScheduleBuilder:
    """
    Monta o cronograma contra um snapshot do livro e debita de uma vez.

    Em conflito (outro veículo consumiu o restante usado) o cronograma é
    refeito com um snapshot novo.
    """
    if ledger is None:
        return build(None)

    for _ in range(MAX_COMMIT_RETRIES):
        version, remaining = ledger.snapshot()
        builder = build(remaining)
        debit = builder.charge - builder.overrun
        if not debit.any():
            return builder
        try:
            ledger.commit(debit, version)
            return builder
        except LedgerConflict:
            continue
    raise LedgerConflict(f"livro de carga mudou {MAX_COMMIT_RETRIES} vezes seguidas")


def _check_horizon(vehicle: Vehicle, hours: int, what: str) -> None:
    if hours < vehicle.horizon:
        raise ModelError(f"{what} cobre {hours} horas, veículo tem {vehicle.horizon}")


# =============================================================================
# OPERAÇÕES
# =============================================================================

def dispatch_cap(
    vehicle: Vehicle,
    book: PriceBook,
    cluster_set: ClusterSet,
    ledger: Optional[ChargeLedger],
    prices: np.ndarray,
) -> VehicleSchedule:
    """
    Despacho por preços ajustados por restrição.

    Atribui o cluster mais próximo, ordena as horas conectadas por d do
    cluster e cobre cada déficit do traço com carga nessa ordem, limitada
    pelo livro. PHEVs completam com geração; o que faltar vira falha de
    demanda.

    Args:
        vehicle: Veículo recém-conectado.
        book: Preços ajustados por cluster.
        cluster_set: Clusters usados para montar o programa agrupado.
        ledger: Livro de carga da frota.
        prices: Preço da eletricidade por hora (desempate).

    Raises:
        ClusteringError: Nenhum cluster do tipo do veículo.
        ModelError: Preços mais curtos que o horizonte do veículo.
        LedgerConflict: Commit falhou repetidamente.
    """
    n = vehicle.horizon
    _check_horizon(vehicle, book.horizon, "tabela de preços")
    prices = np.asarray(prices, dtype=float)
    _check_horizon(vehicle, prices.size, "série de preços")

    cluster = assign_cluster(vehicle.profile, vehicle.params.kind, cluster_set)
    order = cap_charge_order(
        book.d[cluster, :n],
        book.primal_charge[cluster, :n] > PRIMAL_CHARGE_TOL,
        prices[:n],
        vehicle.connected,
    ).tolist()

    def build(limit: Optional[np.ndarray]) -> ScheduleBuilder:
        builder = ScheduleBuilder(vehicle, limit)
        builder.cover_deficits(order)
        return builder

    return _build_and_commit(build, ledger).finish(CAP, cluster)


def dispatch_standard(vehicle: Vehicle, ledger: Optional[ChargeLedger] = None) -> VehicleSchedule:
    """
    Carga padrão: potência máxima em toda hora conectada até a bateria encher.

    O livro é ignorado.
    """
    hours = np.flatnonzero(vehicle.connected).tolist()
    builder = ScheduleBuilder(vehicle)
    builder.charge_at_max_rate(hours)
    builder.cover_deficits(hours)
    return builder.finish(STANDARD)


def dispatch_lowest_cost(
    vehicle: Vehicle,
    prices: np.ndarray,
    ledger: Optional[ChargeLedger] = None,
) -> VehicleSchedule:
    """
    Carga só do necessário, nas horas de eletricidade mais barata.

    Sem livro, ignora o limite da frota. Com livro, o mesmo motor respeita e
    debita o restante (o cenário de três horas mostra a falha desse guloso).
    """
    prices = np.asarray(prices, dtype=float)
    _check_horizon(vehicle, prices.size, "série de preços")
    order = price_order(prices[:vehicle.horizon], vehicle.connected).tolist()

    def build(limit: Optional[np.ndarray]) -> ScheduleBuilder:
        builder = ScheduleBuilder(vehicle, limit)
        builder.cover_deficits(order)
        return builder

    return _build_and_commit(build, ledger).finish(LOWEST_COST)


def dispatch_primal_pct(
    vehicle: Vehicle,
    ratios: RatioBook,
    cluster_set: ClusterSet,
    ledger: Optional[ChargeLedger] = None,
) -> VehicleSchedule:
    """
    Carga, geração e abastecimento nas proporções do cluster.

    Energia necessária N = max(0, consumo·milhas − s_0). Alvos:
        carga     N·α_c/c_eff        distribuída por r^c
        geração   N·(α_g+α_f)/g_eff  distribuída por r^g
        gasolina  N·α_f/g_eff em galões, distribuída por r^f

    Alvos respeitam o livro. Déficits que sobram são reparados primeiro
    dentro do livro e depois com carga extra fora dele (evento cap_overrun).
    """
    n = vehicle.horizon
    _check_horizon(vehicle, ratios.rc.shape[1], "tabela de razões")
    p = vehicle.params
    cluster = assign_cluster(vehicle.profile, p.kind, cluster_set)

    rc = ratios.rc[cluster, :n]
    rg = ratios.rg[cluster, :n]
    rf = ratios.rf[cluster, :n]
    alpha_c = float(ratios.alpha_c[cluster])
    alpha_g = float(ratios.alpha_g[cluster])
    alpha_f = float(ratios.alpha_f[cluster])

    needed = max(0.0, float(vehicle.transport_energy.sum()) - p.initial_storage)
    order = ratio_order(rc, vehicle.connected).tolist()

    def build(limit: Optional[np.ndarray]) -> ScheduleBuilder:
        builder = ScheduleBuilder(vehicle, limit)
        if needed > 0:
            builder.charge_by_ratio(needed * alpha_c / p.charge_efficiency, rc)
            if p.max_generation_rate > 0:
                fuel_kwh = needed * alpha_f / p.generation_efficiency
                builder.fuel_by_ratio(fuel_kwh * p.gallon_per_kwh, rf)
                builder.generate_by_ratio(needed * (alpha_g + alpha_f) / p.generation_efficiency, rg)
        builder.cover_deficits(order, make_up_order=order)
        return builder

    return _build_and_commit(build, ledger).finish(PRIMAL_PCT, cluster)


# =============================================================================
# AGENTES
# =============================================================================

class Dispatcher:
    """
    Agente de despacho: recebe um veículo e devolve seu cronograma.

    Attributes:
        name (str): Nome usado em relatórios e na linha de comando.
        uses_ledger (bool): True se o agente debita o livro de carga.
    """

    name = ""
    uses_ledger = False

    def dispatch(self, vehicle: Vehicle, ledger: Optional[ChargeLedger] = None) -> VehicleSchedule:
        raise NotImplementedError


class CapDispatcher(Dispatcher):
    name = CAP
    uses_ledger = True

    def __init__(self, book: PriceBook, cluster_set: ClusterSet, prices: np.ndarray):
        self.book = book
        self.cluster_set = cluster_set
        self.prices = np.asarray(prices, dtype=float)

    def dispatch(self, vehicle, ledger=None):
        return dispatch_cap(vehicle, self.book, self.cluster_set, ledger, self.prices)


class StandardDispatcher(Dispatcher):
    name = STANDARD

    def dispatch(self, vehicle, ledger=None):
        return dispatch_standard(vehicle)


class LowestCostDispatcher(Dispatcher):
    name = LOWEST_COST

    def __init__(self, prices: np.ndarray, respect_ledger: bool = False):
        self.prices = np.asarray(prices, dtype=float)
        self.uses_ledger = respect_ledger

    def dispatch(self, vehicle, ledger=None):
        return dispatch_lowest_cost(vehicle, self.prices, ledger if self.uses_ledger else None)


class PrimalPctDispatcher(Dispatcher):
    name = PRIMAL_PCT
    uses_ledger = True

    def __init__(self, ratios: RatioBook, cluster_set: ClusterSet):
        self.ratios = ratios
        self.cluster_set = cluster_set

    def dispatch(self, vehicle, ledger=None):
        return dispatch_primal_pct(vehicle, self.ratios, self.cluster_set, ledger)


def parse_dispatchers(names: Sequence[str]) -> List[str]:
    """
    Valida e normaliza uma lista de nomes ("cap", "standard", "lowest-cost", ...).

    Raises:
        ConfigError: Nome desconhecido ou lista vazia.
    """
    result = []
    for raw in names:
        name = raw.strip().lower().replace("-", "_")
        if not name:
            continue
        if name not in DISPATCHER_NAMES:
            raise ConfigError(
                f"despachante desconhecido '{raw}' (use: {', '.join(DISPATCHER_NAMES)})"
            )
        if name not in result:
            result.append(name)
    if not result:
        raise ConfigError("nenhum despachante informado")
    return result


def make_dispatcher(
    name: str,
    prices: np.ndarray,
    book: Optional[PriceBook] = None,
    ratios: Optional[RatioBook] = None,
    cluster_set: Optional[ClusterSet] = None,
) -> Dispatcher:
    """
    Cria o agente `name` com os artefatos que ele precisa.

    Raises:
        ConfigError: Nome desconhecido ou artefato ausente.
    """
    name = parse_dispatchers([name])[0]
    if name == STANDARD:
        return StandardDispatcher()
    if name == LOWEST_COST:
        return LowestCostDispatcher(prices)
    if cluster_set is None:
        raise ConfigError(f"despachante '{name}' precisa do conjunto de clusters")
    if name == CAP:
        if book is None:
            raise ConfigError("despachante 'cap' precisa da tabela de preços ajustados")
        return CapDispatcher(book, cluster_set, prices)
    if ratios is None:
        raise ConfigError("despachante 'primal_pct' precisa da tabela de razões")
    return PrimalPctDispatcher(ratios, cluster_set)
