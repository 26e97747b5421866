"""
================================================================================
MÓDULO: model.py - Tipos de Domínio, Unidades e Cenário
================================================================================

Este módulo define os objetos de valor compartilhados por todo o sistema:

    - HourlySeries: vetor horário com unidade (milhas, kWh, kW, $/kWh, $/galão)
    - VehicleParams: parâmetros físicos de um veículo (BEV ou PHEV)
    - Vehicle: veículo com perfil de direção e hora de conexão
    - Scenario: horizonte, carga base, preços e limite de carga da frota

E duas operações básicas:

    - cap_from_load(): limite horário de carga da frota a partir da carga base
    - classify_vehicle(): BEV se o perfil diário soma menos de 70 milhas

CONVENÇÕES DE UNIDADE:
----------------------
    O limite de carga (charge cap) é guardado como energia por hora (kWh em
    cada slot de 1 hora). Uma potência constante de 1 kW durante uma hora
    equivale a 1 kWh, então carga base em kW e limite em kWh são comparáveis
    diretamente hora a hora.

GRADE DE ENERGIA:
-----------------
    Toda energia que passa pelo livro de carga é múltipla de ENERGY_QUANTUM
    (2^-24 kWh). Somas de múltiplos de uma potência de 2 são exatas em ponto
    flutuante, então "soma da frota <= limite" vale bit a bit em qualquer
    ordem de soma.

Todos os tipos são imutáveis (arrays com write=False) e podem ser
compartilhados entre threads sem sincronização.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================

import math
from dataclasses import dataclass, field, replace, asdict
from enum import Enum
from typing import Any, Dict, Iterable, Union

import numpy as np

from src.core.errors import InputDataError


# =============================================================================
# CONSTANTES
# =============================================================================

HOURS_PER_DAY = 24

# Limite do NHTS para separar BEV de PHEV ("menos de 70 milhas" → BEV)
BEV_DAILY_MILES_LIMIT = 70.0

# Grade de energia do livro de carga (kWh)
ENERGY_QUANTUM = 2.0 ** -24

# Déficit de energia abaixo disso é considerado atendido (kWh)
ENERGY_TOL = 1e-6


class Unit(str, Enum):
    """Unidades aceitas por HourlySeries."""

    MILES = "miles"
    KWH = "kWh"
    KW = "kW"
    USD_PER_KWH = "$/kWh"
    USD_PER_GALLON = "$/gallon"
    GALLONS = "gallons"


# Preços podem ser negativos; milhas, energia, potência e galões não
NON_NEGATIVE_UNITS = frozenset({Unit.MILES, Unit.KWH, Unit.KW, Unit.GALLONS})


class VehicleKind(str, Enum):
    """Tipo do veículo."""

    BEV = "BEV"
    PHEV = "PHEV"


# =============================================================================
# FUNÇÕES DE GRADE
# =============================================================================

def quantize_down(values: Union[float, np.ndarray]) -> np.ndarray:
    """Arredonda para baixo na grade ENERGY_QUANTUM (operação exata)."""
    return np.floor(np.asarray(values, dtype=float) / ENERGY_QUANTUM) * ENERGY_QUANTUM


def quantize_up(values: Union[float, np.ndarray]) -> np.ndarray:
    """Arredonda para cima na grade ENERGY_QUANTUM."""
    return np.ceil(np.asarray(values, dtype=float) / ENERGY_QUANTUM) * ENERGY_QUANTUM


# =============================================================================
# SÉRIE HORÁRIA
# =============================================================================

@dataclass(frozen=True, eq=False)
class HourlySeries:
    """
    Vetor horário imutável com unidade.

    Attributes:
        values (np.ndarray): Valores por hora (somente leitura).
        unit (Unit): Unidade dos valores.

    Raises:
        ValueError: Valores não finitos, ou negativos em milhas/kWh/kW.

    Example:
        >>> load = HourlySeries([2.0, 1.0, 2.0], Unit.KW)
        >>> len(load), load.peak
        (3, 2.0)
    """

    values: np.ndarray
    unit: Unit

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("HourlySeries precisa ser um vetor 1-D")
        if not np.all(np.isfinite(arr)):
            raise ValueError("HourlySeries contém valores não finitos")
        unit = Unit(self.unit)
        if unit in NON_NEGATIVE_UNITS and np.any(arr < 0):
            raise ValueError(f"HourlySeries em {unit.value} não pode ter valores negativos")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "unit", unit)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def peak(self) -> float:
        return float(self.values.max()) if len(self) else 0.0

    def replicate(self, hours: int) -> "HourlySeries":
        """Repete a série até cobrir `hours` horas (perfis diários → horizonte)."""
        return HourlySeries(replicate_day(self.values, hours), self.unit)

    def to_list(self) -> list:
        return [float(v) for v in self.values]


def replicate_day(day_values: Iterable[float], hours: int) -> np.ndarray:
    """
    Repete um perfil diário até completar o horizonte.

    Usado para horizontes de vários dias: o perfil do motorista é o mesmo em
    todos os dias.
    """
    day = np.asarray(day_values, dtype=float)
    if day.size == 0:
        raise ValueError("perfil vazio não pode ser replicado")
    reps = math.ceil(hours / day.size)
    return np.tile(day, reps)[:hours]


# =============================================================================
# PARÂMETROS FÍSICOS
# =============================================================================

@dataclass(frozen=True)
class VehicleParams:
    """
    Parâmetros físicos de um veículo (ou de todos os membros de um cluster).

    Attributes:
        kind: BEV ou PHEV.
        battery_capacity: s̄ em kWh.
        max_charge_rate: c̄ em kWh/hora.
        tank_capacity: s̄^g em galões (0 para BEV).
        max_fuel_rate: f̄ em galões/hora.
        max_generation_rate: ḡ em kWh/hora de gasolina queimada (0 para BEV).
        charge_efficiency: c_eff em (0, 1].
        generation_efficiency: g_eff em (0, 1].
        initial_storage: s_0 em kWh.
        initial_fuel: s^g_0 em galões.
        consumption: kWh por milha.
        gas_energy_density: kWh equivalentes por galão.
    """

    kind: VehicleKind
    battery_capacity: float
    max_charge_rate: float
    tank_capacity: float
    max_fuel_rate: float
    max_generation_rate: float
    charge_efficiency: float
    generation_efficiency: float
    initial_storage: float
    initial_fuel: float
    consumption: float
    gas_energy_density: float

    def __post_init__(self):
        object.__setattr__(self, "kind", VehicleKind(self.kind))
        for name in ("battery_capacity", "max_charge_rate", "tank_capacity", "max_fuel_rate",
                     "max_generation_rate", "initial_storage", "initial_fuel", "consumption"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} precisa ser finito e não negativo (recebido {value})")
        for name in ("charge_efficiency", "generation_efficiency"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} precisa estar em (0, 1] (recebido {value})")
        if not self.gas_energy_density > 0:
            raise ValueError("gas_energy_density precisa ser positiva")
        if self.initial_storage > self.battery_capacity:
            raise ValueError("initial_storage maior que a capacidade da bateria")
        if self.initial_fuel > self.tank_capacity:
            raise ValueError("initial_fuel maior que a capacidade do tanque")
        if self.kind is VehicleKind.BEV and (
            self.tank_capacity or self.max_fuel_rate or self.max_generation_rate
        ):
            raise ValueError("BEV não pode ter tanque, abastecimento ou geração")

    @property
    def gallon_per_kwh(self) -> float:
        """Conversão galão/kWh usada no balanço de combustível."""
        return 1.0 / self.gas_energy_density

    def with_initial(self, storage: float, fuel: float = 0.0) -> "VehicleParams":
        return replace(self, initial_storage=storage, initial_fuel=fuel)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VehicleParams":
        return cls(**data)


@dataclass(frozen=True)
class PhysicalConstants:
    """
    Constantes padrão da frota (valores típicos de veículos de 2011).

    Todas podem ser sobrescritas pelo arquivo de configuração do cenário.
    """

    consumption_kwh_per_mile: float = 0.30
    gas_kwh_per_gallon: float = 33.7
    bev_battery_kwh: float = 24.0
    bev_charger_kw: float = 3.3
    phev_battery_kwh: float = 16.0
    phev_charger_kw: float = 3.3
    phev_tank_gallons: float = 9.0
    phev_fuel_rate_gph: float = 9.0
    phev_generation_kw: float = 20.0
    charge_efficiency: float = 0.90
    generation_efficiency: float = 0.30

    def params_for(self, kind: VehicleKind) -> VehicleParams:
        """Parâmetros de um veículo do tipo `kind` com bateria e tanque cheios."""
        kind = VehicleKind(kind)
        if kind is VehicleKind.BEV:
            return VehicleParams(
                kind=kind,
                battery_capacity=self.bev_battery_kwh,
                max_charge_rate=self.bev_charger_kw,
                tank_capacity=0.0,
                max_fuel_rate=0.0,
                max_generation_rate=0.0,
                charge_efficiency=self.charge_efficiency,
                generation_efficiency=self.generation_efficiency,
                initial_storage=self.bev_battery_kwh,
                initial_fuel=0.0,
                consumption=self.consumption_kwh_per_mile,
                gas_energy_density=self.gas_kwh_per_gallon,
            )
        return VehicleParams(
            kind=kind,
            battery_capacity=self.phev_battery_kwh,
            max_charge_rate=self.phev_charger_kw,
            tank_capacity=self.phev_tank_gallons,
            max_fuel_rate=self.phev_fuel_rate_gph,
            max_generation_rate=self.phev_generation_kw,
            charge_efficiency=self.charge_efficiency,
            generation_efficiency=self.generation_efficiency,
            initial_storage=self.phev_battery_kwh,
            initial_fuel=self.phev_tank_gallons,
            consumption=self.consumption_kwh_per_mile,
            gas_energy_density=self.gas_kwh_per_gallon,
        )


# =============================================================================
# VEÍCULO E CENÁRIO
# =============================================================================

@dataclass(frozen=True, eq=False)
class Vehicle:
    """
    Veículo que se conecta ao agregador.

    Horas com milhas > 0 são de direção; horas com 0 milhas são de
    estacionamento. O veículo fica conectado em toda hora estacionada a
    partir de `plug_in_hour`.
    """

    id: str
    params: VehicleParams
    profile: HourlySeries
    plug_in_hour: int = 0

    def __post_init__(self):
        if self.profile.unit is not Unit.MILES:
            raise ValueError("o perfil de direção precisa estar em milhas")
        if not 0 <= self.plug_in_hour < len(self.profile):
            raise ValueError(
                f"plug_in_hour {self.plug_in_hour} fora de [0, {len(self.profile)})"
            )

    @property
    def horizon(self) -> int:
        return len(self.profile)

    @property
    def driving(self) -> np.ndarray:
        return self.profile.values > 0

    @property
    def parked(self) -> np.ndarray:
        return self.profile.values == 0

    @property
    def connected(self) -> np.ndarray:
        """Horas em que a bateria pode ser carregada."""
        return self.parked & (np.arange(self.horizon) >= self.plug_in_hour)

    @property
    def transport_energy(self) -> np.ndarray:
        """Energia consumida por hora (kWh) = consumo × milhas."""
        return self.params.consumption * self.profile.values

    @property
    def total_miles(self) -> float:
        return self.profile.total


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Cenário de simulação.

    Attributes:
        horizon: n horas.
        base_load: carga agregada sem PEVs (kW).
        elec_price: p ($/kWh).
        gas_price: p^g ($/galão).
        charge_cap: c_cap, energia total permitida à frota por hora (kWh).
        fleet_size: m veículos.
        rng_seed: semente base.
        constants: constantes físicas da frota.
        alpha: fração do pico usada no limite (apenas informativo).
        plug_in_window: janela (horas) em que as conexões acontecem.
    """

    horizon: int
    base_load: HourlySeries
    elec_price: HourlySeries
    gas_price: HourlySeries
    charge_cap: HourlySeries
    fleet_size: int
    rng_seed: int = 0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    alpha: float = 1.0
    plug_in_window: int = 12

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizonte precisa ser positivo")
        for name in ("base_load", "elec_price", "gas_price", "charge_cap"):
            series = getattr(self, name)
            if len(series) != self.horizon:
                raise ValueError(
                    f"{name} tem {len(series)} horas, horizonte é {self.horizon}"
                )
        if np.any(self.charge_cap.values < 0):
            raise ValueError("charge_cap precisa ser não negativo")
        if self.fleet_size < 0:
            raise ValueError("fleet_size não pode ser negativo")
        if not 1 <= self.plug_in_window <= self.horizon:
            raise ValueError("plug_in_window precisa estar em [1, horizonte]")


# =============================================================================
# OPERAÇÕES
# =============================================================================

def cap_from_load(base_load: Union[HourlySeries, Iterable[float]], alpha: float) -> HourlySeries:
    """
    Calcula a "carga total permitida" da frota a cada hora.

    cap_h = max(0, alpha · pico_do_dia − carga_h) · 1 hora

    O pico é calculado por dia de calendário dentro do horizonte. O
    resultado fica na grade ENERGY_QUANTUM e garante, em ponto flutuante,
    carga_h + cap_h <= alpha · pico_do_dia.

    Args:
        base_load: Carga sem PEVs (kW).
        alpha: Fração do pico diário (> 0).

    Returns:
        HourlySeries: Limite de carga por hora (kWh).

    Raises:
        ValueError: Série vazia, valores não finitos/negativos ou alpha <= 0.

    Example:
        >>> cap_from_load(HourlySeries([2, 1, 2], Unit.KW), 1.0).to_list()
        [0.0, 1.0, 0.0]
    """
    values = base_load.values if isinstance(base_load, HourlySeries) else np.asarray(
        list(base_load), dtype=float
    )
    if values.size == 0:
        raise ValueError("carga base vazia")
    if not np.all(np.isfinite(values)):
        raise ValueError("carga base contém valores não finitos")
    if np.any(values < 0):
        raise ValueError("carga base não pode ser negativa")
    if not alpha > 0:
        raise ValueError("alpha precisa ser positivo")

    limits = np.empty_like(values)
    for start in range(0, values.size, HOURS_PER_DAY):
        day = slice(start, start + HOURS_PER_DAY)
        limits[day] = alpha * values[day].max()

    cap = quantize_down(np.maximum(0.0, limits - values))

    # Arredondamento de limits - values pode passar do limite por 1 ulp
    over = (values + cap > limits) & (cap > 0)
    while np.any(over):
        cap[over] = np.maximum(0.0, cap[over] - ENERGY_QUANTUM)
        over = (values + cap > limits) & (cap > 0)

    return HourlySeries(cap, Unit.KWH)


def classify_vehicle(profile: Union[HourlySeries, Iterable[float]]) -> VehicleKind:
    """
    Classifica o veículo pelo total de milhas do primeiro dia.

    BEV se o total diário for menor que 70 milhas; PHEV caso contrário
    (exatamente 70 milhas é PHEV).

    Raises:
        InputDataError: Perfil com menos de 24 horas.
    """
    values = profile.values if isinstance(profile, HourlySeries) else np.asarray(
        list(profile), dtype=float
    )
    if values.size < HOURS_PER_DAY:
        raise InputDataError(
            f"perfil de direção com {values.size} horas; a classificação exige um dia inteiro"
        )
    daily_total = float(values[:HOURS_PER_DAY].sum())
    return VehicleKind.BEV if daily_total < BEV_DAILY_MILES_LIMIT else VehicleKind.PHEV
