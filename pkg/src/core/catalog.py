"""
================================================================================
MÓDULO: catalog.py - Catálogo de Valores Padrão do Simulador
================================================================================

Este módulo carrega o arquivo src/database/defaults.json, que guarda tudo o
que um cenário precisa quando o usuário não fornece dados próprios:

    - Constantes físicas dos veículos (bateria, carregador, tanque, eficiências)
    - Arquétipos de direção para a frota sintética
    - Tarifa de eletricidade por horário de uso (TOU) de verão
    - Preço da gasolina
    - Curva de carga residencial normalizada e a escala de domicílios
    - Valores padrão das chaves do arquivo de configuração

ESTRUTURA DO JSON:
------------------
    {
        "_metadata": { ... },       # Versão e origem dos valores
        "constants": { ... },       # Campos de PhysicalConstants
        "archetypes": { ... },      # nome -> {descricao, weight, trips}
        "tariffs": { ... },         # nome -> {descricao, periods}
        "gas_price": { ... },
        "load_shape": { ... },      # hourly (24 valores), household_peak_kw
        "scenario": { ... }         # padrões das chaves de configuração
    }

EXEMPLO DE USO:
---------------
    catalogo = DefaultsCatalog()
    precos = catalogo.tou_prices(120)
    carga = catalogo.reference_load(fleet_size=10000, hours=120)

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

import json
import os
from typing import Any, Dict, List, Optional

import numpy as np
from colorama import Fore

from src.core.errors import ConfigError
from src.core.ingest import Archetype, implied_bev_share
from src.core.model import HOURS_PER_DAY, HourlySeries, PhysicalConstants, Unit, replicate_day


DEFAULTS_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), "database", "defaults.json")

DEFAULT_TARIFF = "summer_tou"


class DefaultsCatalog:
    """
    Catálogo de valores padrão carregado do JSON.

    Attributes:
        json_path (str): Caminho do arquivo.
        data (dict): Conteúdo completo do JSON.
        metadata (dict): Seção _metadata.

    Raises:
        ConfigError: Arquivo ausente, JSON malformado ou seção obrigatória faltando.
    """

    REQUIRED_SECTIONS = ("constants", "archetypes", "tariffs", "gas_price", "load_shape", "scenario")

    def __init__(self, json_path: str = DEFAULTS_PATH, verbose: bool = False):
        self.json_path = json_path
        self.verbose = verbose
        self.data: Dict[str, Any] = {}
        self.metadata: Dict[str, Any] = {}

        self._load_catalog()

    def _load_catalog(self) -> None:
        if not os.path.exists(self.json_path):
            raise ConfigError(f"catálogo de padrões não encontrado: {self.json_path}")
        try:
            with open(self.json_path, "r", encoding="utf-8") as f:
                self.data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"catálogo de padrões malformado: {e}") from e

        missing = [s for s in self.REQUIRED_SECTIONS if s not in self.data]
        if missing:
            raise ConfigError(f"catálogo sem as seções: {', '.join(missing)}")

        self.metadata = self.data.get("_metadata", {})
        if self.verbose:
            print(Fore.GREEN + f"✅ Catálogo de padrões carregado: {self.json_path}")

    # =========================================================================
    # CONSTANTES E ARQUÉTIPOS
    # =========================================================================

    def constants(self, overrides: Optional[Dict[str, float]] = None) -> PhysicalConstants:
        """Constantes físicas com sobrescritas opcionais (nomes de campo)."""
        values = dict(self.data["constants"])
        values.update(overrides or {})
        try:
            return PhysicalConstants(**values)
        except TypeError as e:
            raise ConfigError(f"constante física desconhecida: {e}") from e

    def archetypes(self) -> List[Archetype]:
        result = []
        for name, info in self.data["archetypes"].items():
            result.append(Archetype(
                name=name,
                weight=float(info["weight"]),
                trips=tuple((int(h), float(m)) for h, m in info["trips"]),
                description=info.get("descricao", ""),
            ))
        return result

    # =========================================================================
    # PREÇOS E CARGA
    # =========================================================================

    def tariff_day(self, name: str = DEFAULT_TARIFF) -> np.ndarray:
        """Preço de eletricidade para cada hora do dia ($/kWh)."""
        tariff = self.data["tariffs"].get(name)
        if tariff is None:
            raise ConfigError(f"tarifa '{name}' não existe no catálogo")
        day = np.full(HOURS_PER_DAY, np.nan)
        for period in tariff["periods"]:
            for hour in period["hours"]:
                day[int(hour)] = float(period["price"])
        if np.any(np.isnan(day)):
            raise ConfigError(f"tarifa '{name}' não cobre todas as horas do dia")
        return day

    def tou_prices(self, hours: int, name: str = DEFAULT_TARIFF) -> HourlySeries:
        return HourlySeries(replicate_day(self.tariff_day(name), hours), Unit.USD_PER_KWH)

    def gas_prices(self, hours: int) -> HourlySeries:
        price = float(self.data["gas_price"]["usd_per_gallon"])
        return HourlySeries(np.full(hours, price), Unit.USD_PER_GALLON)

    def reference_load(
        self,
        fleet_size: int,
        hours: int,
        households_per_pev: Optional[float] = None,
        household_peak_kw: Optional[float] = None,
    ) -> HourlySeries:
        """
        Carga residencial sem PEVs: formato normalizado × domicílios × pico por domicílio.

        Domicílios = fleet_size × households_per_pev (um PEV a cada 3 domicílios).
        """
        shape = self.data["load_shape"]
        per_pev = shape["households_per_pev"] if households_per_pev is None else households_per_pev
        peak_kw = shape["household_peak_kw"] if household_peak_kw is None else household_peak_kw
        if per_pev <= 0 or peak_kw <= 0:
            raise ConfigError("domicílios por PEV e pico por domicílio precisam ser positivos")
        day = np.asarray(shape["hourly"], dtype=float) * fleet_size * per_pev * peak_kw
        return HourlySeries(replicate_day(day, hours), Unit.KW)

    def scenario_defaults(self) -> Dict[str, Any]:
        return dict(self.data["scenario"])

    # =========================================================================
    # ESTATÍSTICAS
    # =========================================================================

    def summary(self) -> Dict[str, Any]:
        """
        Estatísticas do catálogo para o cabeçalho da CLI.

        Returns:
            dict: total_arquetipos, participacao_bev, milhas_medias, spread_tarifa, versao
        """
        archetypes = self.archetypes()
        mean_miles = sum(a.weight * a.total_miles for a in archetypes)
        day = self.tariff_day()
        return {
            "total_arquetipos": len(archetypes),
            "participacao_bev": implied_bev_share(archetypes),
            "milhas_medias": mean_miles,
            "spread_tarifa": float(day.max() - day.min()),
            "versao": self.metadata.get("versao", "desconhecida"),
        }
