"""
================================================================================
MÓDULO: config.py - Arquivo de Configuração do Cenário
================================================================================

O cenário é descrito num arquivo texto no formato KEY=value (o mesmo de um
arquivo .env), lido com python-dotenv. Todas as chaves são opcionais; os
valores ausentes vêm do catálogo de padrões (src/database/defaults.json).

EXEMPLO (config/reference.env):
-------------------------------
    # Cenário de referência: 10.000 PEVs, 5 dias
    HORIZON_HOURS=120
    ALPHA=1.0
    FLEET_SIZE=10000
    CLUSTERS=37
    SEED=2011

CHAVES ACEITAS:
---------------
    Cenário:    HORIZON_HOURS, ALPHA, FLEET_SIZE, TRAINING_PROFILES, CLUSTERS
                (inteiro ou "auto"), K_MIN, K_MAX, VALUATION_RUNS, FLATTEN_TOL,
                KMEANS_RESTARTS, RUNS, SEED, PLUG_IN_WINDOW_HOURS,
                HOUSEHOLDS_PER_PEV, HOUSEHOLD_PEAK_KW
    Arquivos:   PROFILES_CSV, TEST_PROFILES_CSV, LOAD_CSV, PRICE_CSV,
                GAS_PRICE_CSV, CAP_CSV (relativos ao diretório do arquivo)
    Constantes: CONSUMPTION_KWH_PER_MILE, GAS_KWH_PER_GALLON, BEV_BATTERY_KWH,
                BEV_CHARGER_KW, PHEV_BATTERY_KWH, PHEV_CHARGER_KW,
                PHEV_TANK_GALLONS, PHEV_FUEL_RATE_GPH, PHEV_GENERATION_KW,
                CHARGE_EFFICIENCY, GENERATION_EFFICIENCY

Chaves desconhecidas geram ConfigError (erro de digitação não passa em
silêncio).

VARIÁVEIS DE AMBIENTE:
----------------------
    EVDR_THREADS: número de threads das simulações em lote (padrão 1).
    Lida depois de load_dotenv(), então pode vir de um .env do projeto.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

from src.core.catalog import DefaultsCatalog
from src.core.errors import ConfigError
from src.core.ingest import load_series
from src.core.model import Scenario, Unit, cap_from_load


# =============================================================================
# CHAVES
# =============================================================================

INT_KEYS = (
    "HORIZON_HOURS", "FLEET_SIZE", "TRAINING_PROFILES", "K_MIN", "K_MAX",
    "VALUATION_RUNS", "KMEANS_RESTARTS", "RUNS", "SEED", "PLUG_IN_WINDOW_HOURS",
)
FLOAT_KEYS = ("ALPHA", "FLATTEN_TOL", "HOUSEHOLDS_PER_PEV", "HOUSEHOLD_PEAK_KW")
PATH_KEYS = ("PROFILES_CSV", "TEST_PROFILES_CSV", "LOAD_CSV", "PRICE_CSV", "GAS_PRICE_CSV", "CAP_CSV")

# Chave do arquivo → campo de PhysicalConstants
CONSTANT_KEYS = {
    "CONSUMPTION_KWH_PER_MILE": "consumption_kwh_per_mile",
    "GAS_KWH_PER_GALLON": "gas_kwh_per_gallon",
    "BEV_BATTERY_KWH": "bev_battery_kwh",
    "BEV_CHARGER_KW": "bev_charger_kw",
    "PHEV_BATTERY_KWH": "phev_battery_kwh",
    "PHEV_CHARGER_KW": "phev_charger_kw",
    "PHEV_TANK_GALLONS": "phev_tank_gallons",
    "PHEV_FUEL_RATE_GPH": "phev_fuel_rate_gph",
    "PHEV_GENERATION_KW": "phev_generation_kw",
    "CHARGE_EFFICIENCY": "charge_efficiency",
    "GENERATION_EFFICIENCY": "generation_efficiency",
}

KNOWN_KEYS = frozenset(INT_KEYS + FLOAT_KEYS + PATH_KEYS + ("CLUSTERS",) + tuple(CONSTANT_KEYS))

THREADS_ENV = "EVDR_THREADS"


# =============================================================================
# CONFIGURAÇÃO RESOLVIDA
# =============================================================================

@dataclass(frozen=True)
class ScenarioConfig:
    """Configuração do cenário com todos os valores resolvidos."""

    horizon_hours: int
    alpha: float
    fleet_size: int
    training_profiles: int
    clusters: Optional[int]  # None = escolher k pela curva de valoração
    k_min: int
    k_max: int
    valuation_runs: int
    flatten_tol: float
    kmeans_restarts: int
    runs: int
    seed: int
    plug_in_window_hours: int
    households_per_pev: float
    household_peak_kw: float
    paths: Dict[str, Optional[str]] = field(default_factory=dict)
    constants: Dict[str, float] = field(default_factory=dict)
    source: Optional[str] = None

    def path(self, key: str) -> Optional[str]:
        return self.paths.get(key)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("source")
        return data

    def config_hash(self) -> str:
        """sha256 da configuração resolvida (chaves ordenadas)."""
        payload = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ScenarioConfig":
        """Nova configuração com sobrescritas no formato KEY=value."""
        raw = _config_to_raw(self)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        base_dir = os.path.dirname(self.source) if self.source else os.getcwd()
        return _resolve(raw, {}, base_dir, self.source)


def _config_to_raw(config: ScenarioConfig) -> Dict[str, Any]:
    raw: Dict[str, Any] = {key: getattr(config, key.lower()) for key in INT_KEYS + FLOAT_KEYS}
    raw["CLUSTERS"] = "auto" if config.clusters is None else config.clusters
    for key, value in config.paths.items():
        if value is not None:
            raw[key] = value
    reverse = {v: k for k, v in CONSTANT_KEYS.items()}
    for name, value in config.constants.items():
        raw[reverse[name]] = value
    return raw


# =============================================================================
# LEITURA
# =============================================================================

def _as_int(key: str, value: Any) -> int:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: '{value}' não é um inteiro") from None
    if not number.is_integer():
        raise ConfigError(f"{key}: '{value}' não é um inteiro")
    return int(number)


def _as_float(key: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: '{value}' não é um número") from None


def _resolve(
    raw: Mapping[str, Any],
    defaults: Mapping[str, Any],
    base_dir: str,
    source: Optional[str],
) -> ScenarioConfig:
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"chaves desconhecidas na configuração: {', '.join(unknown)}")

    merged = dict(defaults)
    merged.update(raw)

    values: Dict[str, Any] = {}
    for key in INT_KEYS:
        if key not in merged:
            raise ConfigError(f"chave obrigatória sem valor padrão: {key}")
        values[key.lower()] = _as_int(key, merged[key])
    for key in FLOAT_KEYS:
        if key not in merged:
            raise ConfigError(f"chave obrigatória sem valor padrão: {key}")
        values[key.lower()] = _as_float(key, merged[key])

    clusters_raw = str(merged.get("CLUSTERS", "auto")).strip().lower()
    values["clusters"] = None if clusters_raw == "auto" else _as_int("CLUSTERS", clusters_raw)

    paths = {}
    for key in PATH_KEYS:
        value = raw.get(key)
        if value:
            value = str(value)
            paths[key] = value if os.path.isabs(value) else os.path.normpath(os.path.join(base_dir, value))
        else:
            paths[key] = None

    constants = {CONSTANT_KEYS[k]: _as_float(k, raw[k]) for k in CONSTANT_KEYS if k in raw}

    config = ScenarioConfig(paths=paths, constants=constants, source=source, **values)
    _validate(config)
    return config


def _validate(config: ScenarioConfig) -> None:
    if config.horizon_hours < 1:
        raise ConfigError("HORIZON_HOURS precisa ser >= 1")
    if not config.alpha > 0:
        raise ConfigError("ALPHA precisa ser positivo")
    for key in ("fleet_size", "training_profiles", "valuation_runs", "kmeans_restarts", "runs", "k_min"):
        if getattr(config, key) < 1:
            raise ConfigError(f"{key.upper()} precisa ser >= 1")
    if config.k_min > config.k_max:
        raise ConfigError("K_MIN maior que K_MAX")
    if config.clusters is not None and config.clusters < 1:
        raise ConfigError("CLUSTERS precisa ser >= 1 ou 'auto'")
    if config.seed < 0:
        raise ConfigError("SEED precisa ser não negativa")
    if not 1 <= config.plug_in_window_hours <= config.horizon_hours:
        raise ConfigError("PLUG_IN_WINDOW_HOURS precisa estar entre 1 e HORIZON_HOURS")
    if config.flatten_tol < 0:
        raise ConfigError("FLATTEN_TOL não pode ser negativa")


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    catalog: Optional[DefaultsCatalog] = None,
) -> ScenarioConfig:
    """
    Lê o arquivo de configuração e aplica padrões e sobrescritas.

    Args:
        path: Arquivo KEY=value (None = só padrões).
        overrides: Sobrescritas da linha de comando (None é ignorado).
        catalog: Catálogo de padrões (padrão: src/database/defaults.json).

    Raises:
        ConfigError: Arquivo ausente, chave desconhecida ou valor inválido.
    """
    catalog = catalog or DefaultsCatalog()
    raw: Dict[str, Any] = {}
    base_dir = os.getcwd()
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"arquivo de configuração não encontrado: {path}")
        raw.update({k: v for k, v in dotenv_values(path).items() if v is not None})
        base_dir = os.path.dirname(os.path.abspath(path))
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return _resolve(raw, catalog.scenario_defaults(), base_dir, path)


def thread_count() -> int:
    """Lê EVDR_THREADS (padrão 1)."""
    value = os.environ.get(THREADS_ENV, "1")
    count = _as_int(THREADS_ENV, value)
    if count < 1:
        raise ConfigError(f"{THREADS_ENV} precisa ser >= 1")
    return count


# =============================================================================
# MONTAGEM DO CENÁRIO
# =============================================================================

def build_scenario(config: ScenarioConfig, catalog: Optional[DefaultsCatalog] = None) -> Scenario:
    """
    Monta o Scenario a partir da configuração.

    Séries ausentes vêm do catálogo: carga de referência escalada pela frota,
    tarifa TOU de verão, preço constante da gasolina. Sem CAP_CSV, o limite
    é cap_from_load(carga, ALPHA).
    """
    catalog = catalog or DefaultsCatalog()
    n = config.horizon_hours

    if config.path("LOAD_CSV"):
        base_load = load_series(config.path("LOAD_CSV"), n, Unit.KW)
    else:
        base_load = catalog.reference_load(
            config.fleet_size, n, config.households_per_pev, config.household_peak_kw
        )

    elec_price = (load_series(config.path("PRICE_CSV"), n, Unit.USD_PER_KWH)
                  if config.path("PRICE_CSV") else catalog.tou_prices(n))
    gas_price = (load_series(config.path("GAS_PRICE_CSV"), n, Unit.USD_PER_GALLON)
                 if config.path("GAS_PRICE_CSV") else catalog.gas_prices(n))
    charge_cap = (load_series(config.path("CAP_CSV"), n, Unit.KWH)
                  if config.path("CAP_CSV") else cap_from_load(base_load, config.alpha))

    try:
        return Scenario(
            horizon=n,
            base_load=base_load,
            elec_price=elec_price,
            gas_price=gas_price,
            charge_cap=charge_cap,
            fleet_size=config.fleet_size,
            rng_seed=config.seed,
            constants=catalog.constants(config.constants),
            alpha=config.alpha,
            plug_in_window=config.plug_in_window_hours,
        )
    except ValueError as e:
        raise ConfigError(f"cenário inválido: {e}") from e
