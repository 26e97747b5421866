"""
================================================================================
MÓDULO: pricing.py - Preços Ajustados por Restrição e Razões Primais
================================================================================

Transforma a solução do programa agrupado em:

    - PriceBook: vetor d_ℓ de "preços ajustados por restrição" por cluster
    - RatioBook: proporções de carga/geração/abastecimento por hora (r^c, r^g, r^f)
      e participação de cada fonte de energia (α_c, α_g, α_f)

PREÇO AJUSTADO:
---------------
    Nas horas em que o cluster está estacionado, d é o custo reduzido da
    coluna c_ℓh por veículo:

        d_ℓh = p_h − c_eff·λ^s_ℓh − θ_h

    Nas horas em que o cluster dirige, a coluna está fixada em zero e o
    multiplicador da fixação é livre; ele é escolhido para que d fique acima
    de todas as horas estacionadas do cluster (o veículo nunca "prefere"
    carregar enquanto dirige).

    Com d igual ao custo reduzido, a dicotomia de complementaridade vale
    literalmente: d < 0 ⇒ c no limite superior; d > 0 ⇒ c = 0.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from src.core.errors import InputDataError, SolverError
from src.core.lp import LpSolution
from src.core.model import HourlySeries, Scenario, Unit

# Com tarifa plana, a elevação das horas de direção é esta fração do maior preço
FLAT_TARIFF_LIFT_FRACTION = 0.1

REPORT_HOURS = 48


def _stack(data: Dict[str, Any], name: str) -> np.ndarray:
    """Empilha o campo `name` de cada cluster (chaves "0", "1", ...)."""
    return np.array([data[key][name] for key in sorted(data, key=int)], dtype=float)


@dataclass(frozen=True, eq=False)
class PriceBook:
    """
    Preços ajustados por cluster (k × n, $/kWh por veículo).

    Attributes:
        d: Preço ajustado.
        reduced: Custo reduzido da coluna c_ℓh dividido por b_ℓ.
        fixing: Contribuição do multiplicador de fixação (0 nas horas estacionadas).
        charge_allowed: Horas em que o cluster pode carregar.
        primal_charge: Carga por veículo na solução do programa agrupado.
        normalization: Maior |d| de cada cluster (para relatórios).
    """

    d: np.ndarray
    reduced: np.ndarray
    fixing: np.ndarray
    charge_allowed: np.ndarray
    primal_charge: np.ndarray
    normalization: np.ndarray

    @property
    def k(self) -> int:
        return int(self.d.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.d.shape[1])

    def for_cluster(self, index: int) -> HourlySeries:
        return HourlySeries(self.d[index], Unit.USD_PER_KWH)

    def to_dict(self) -> Dict[str, Any]:
        return {
            str(i): {
                "d": self.d[i].tolist(),
                "reduced": self.reduced[i].tolist(),
                "fixing": self.fixing[i].tolist(),
                "charge_allowed": self.charge_allowed[i].astype(int).tolist(),
                "primal_charge": self.primal_charge[i].tolist(),
                "normalization": float(self.normalization[i]),
            }
            for i in range(self.k)
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PriceBook":
        return cls(
            d=_stack(data, "d"),
            reduced=_stack(data, "reduced"),
            fixing=_stack(data, "fixing"),
            charge_allowed=_stack(data, "charge_allowed").astype(bool),
            primal_charge=_stack(data, "primal_charge"),
            normalization=_stack(data, "normalization"),
        )


@dataclass(frozen=True, eq=False)
class RatioBook:
    """
    Razões primais por cluster (k × n) e participação das fontes (k).

    Cada série de razões soma 1 quando o total correspondente é positivo e
    é toda zero caso contrário.
    """

    rc: np.ndarray
    rg: np.ndarray
    rf: np.ndarray
    alpha_c: np.ndarray
    alpha_g: np.ndarray
    alpha_f: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            str(i): {
                "rc": self.rc[i].tolist(),
                "rg": self.rg[i].tolist(),
                "rf": self.rf[i].tolist(),
                "alpha_c": float(self.alpha_c[i]),
                "alpha_g": float(self.alpha_g[i]),
                "alpha_f": float(self.alpha_f[i]),
            }
            for i in range(self.rc.shape[0])
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RatioBook":
        fields = ("rc", "rg", "rf", "alpha_c", "alpha_g", "alpha_f")
        return cls(*(_stack(data, name) for name in fields))


# =============================================================================
# OPERAÇÕES
# =============================================================================

def driving_lift(prices: np.ndarray, reduced: np.ndarray) -> float:
    """
    Quanto as horas de direção ficam acima da maior hora estacionada em d.

    Acompanha a escala da tarifa: a faixa de preços do horizonte, ou uma
    fração do maior preço quando a tarifa é plana. Com todos os preços
    nulos usa a escala dos custos reduzidos (ou 1).
    """
    prices = np.asarray(prices, dtype=float)
    spread = float(prices.max() - prices.min())
    lift = max(spread, FLAT_TARIFF_LIFT_FRACTION * float(np.abs(prices).max()))
    if lift > 0:
        return lift
    return max(float(np.abs(reduced).max()), 1.0)


def compute_prices(sol: LpSolution, scenario: Scenario, cluster_set=None) -> PriceBook:
    """
    Preços ajustados por restrição de cada cluster.

    Args:
        sol: Solução ótima do programa agrupado.
        scenario: Cenário (preços usados na elevação das horas de direção).
        cluster_set: Conjunto de clusters (conferência do número de blocos).

    Raises:
        SolverError: Solução não ótima.
    """
    sol.require_optimal()
    layout = sol.model.layout
    if layout is None:
        raise SolverError("solução sem estrutura de blocos")
    if cluster_set is not None and cluster_set.k != layout.blocks:
        raise SolverError(f"solução com {layout.blocks} blocos para {cluster_set.k} clusters")

    reduced = sol.reduced_cost("c") / layout.weights[:, None]
    allowed = layout.charge_allowed
    prices = scenario.elec_price.values
    lift = driving_lift(prices, reduced)

    d = reduced.copy()
    for i in range(layout.blocks):
        blocked = ~allowed[i]
        if not blocked.any():
            continue
        ceiling = reduced[i, allowed[i]].max() if allowed[i].any() else reduced[i].max()
        d[i, blocked] = np.maximum(reduced[i, blocked], ceiling + lift)
    fixing = d - reduced

    magnitude = np.abs(d).max(axis=1)
    return PriceBook(d, reduced, fixing, allowed.copy(), sol.primal("c"), magnitude)


def _safe_ratio(values: np.ndarray) -> np.ndarray:
    totals = values.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(totals > 0, values / np.where(totals > 0, totals, 1.0), 0.0)
    return ratios


def compute_ratios(sol: LpSolution) -> RatioBook:
    """
    Razões de carga, geração e abastecimento de cada cluster.

    Participações (kWh entregues à bateria):
        α_c = c_eff·Σc
        α_f = g_eff·min(Σg, densidade·Σf)   (geração paga com gasolina comprada)
        α_g = g_eff·Σg − α_f                (geração com a gasolina inicial)
    normalizadas para somar 1 (todas zero se não há energia).
    """
    sol.require_optimal()
    layout = sol.model.layout
    charge = sol.primal("c")
    generate = sol.primal("g")
    fuel = sol.primal("f")

    c_eff = np.array([p.charge_efficiency for p in layout.params])
    g_eff = np.array([p.generation_efficiency for p in layout.params])
    density = np.array([p.gas_energy_density for p in layout.params])

    grid = c_eff * charge.sum(axis=1)
    generated = g_eff * generate.sum(axis=1)
    bought = np.minimum(generate.sum(axis=1), density * fuel.sum(axis=1)) * g_eff
    total = grid + generated
    safe = np.where(total > 0, total, 1.0)

    return RatioBook(
        rc=_safe_ratio(charge),
        rg=_safe_ratio(generate),
        rf=_safe_ratio(fuel),
        alpha_c=np.where(total > 0, grid / safe, 0.0),
        alpha_g=np.where(total > 0, (generated - bought) / safe, 0.0),
        alpha_f=np.where(total > 0, bought / safe, 0.0),
    )


def normalize_for_report(*series: Union[HourlySeries, Sequence[float]]) -> List[np.ndarray]:
    """
    Divide cada série pelo seu elemento de maior magnitude.

    Example:
        >>> normalize_for_report([2, 4])[0].tolist()
        [0.5, 1.0]
    """
    result = []
    for item in series:
        values = item.values if isinstance(item, HourlySeries) else np.asarray(item, dtype=float)
        peak = np.abs(values).max() if values.size else 0.0
        result.append(values / peak if peak > 0 else np.zeros_like(values, dtype=float))
    return result


def price_profile_frame(
    book: PriceBook,
    scenario: Scenario,
    cluster_miles: np.ndarray,
    hours: int = REPORT_HOURS,
) -> pd.DataFrame:
    """
    Tabela dos perfis normalizados das primeiras `hours` horas de cada cluster:
    preço de eletricidade, preço ajustado, carga total permitida e direção.
    """
    hours = min(hours, book.horizon)
    price, allowed_total = normalize_for_report(
        scenario.elec_price.values[:hours], scenario.charge_cap.values[:hours]
    )
    frames = []
    for i in range(book.k):
        d_norm, miles_norm = normalize_for_report(book.d[i, :hours], cluster_miles[i, :hours])
        frames.append(pd.DataFrame({
            "cluster": i,
            "hour": np.arange(hours),
            "price": price,
            "adjusted_price": d_norm,
            "charge_allowed": allowed_total,
            "driving": miles_norm,
        }))
    return pd.concat(frames, ignore_index=True)


# =============================================================================
# PERSISTÊNCIA
# =============================================================================

def save_books(prices: PriceBook, ratios: RatioBook, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"prices": prices.to_dict(), "ratios": ratios.to_dict()}, f)
    return path


def load_books(path: str):
    if not os.path.exists(path):
        raise InputDataError("arquivo de preços não encontrado", path=path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return PriceBook.from_dict(data["prices"]), RatioBook.from_dict(data["ratios"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InputDataError(f"arquivo de preços inválido: {e}", path=path) from e
