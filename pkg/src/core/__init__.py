"""
Pacote core - Módulos centrais do EV Fleet DR.

Contém:
    - Scenario / Vehicle / HourlySeries: tipos de domínio
    - DefaultsCatalog: catálogo de padrões (arquétipos, tarifa, carga)
    - ClusterSet: perfis base de direção (k-means)
    - LpModel / LpSolution: programa linear agrupado e seus duais
    - PriceBook / RatioBook: preços ajustados e razões primais
"""

from .catalog import DefaultsCatalog
from .clustering import ClusterSet
from .lp import LpModel, LpSolution
from .model import HourlySeries, Scenario, Vehicle
from .pricing import PriceBook, RatioBook

__all__ = [
    'DefaultsCatalog', 'ClusterSet', 'LpModel', 'LpSolution',
    'HourlySeries', 'Scenario', 'Vehicle', 'PriceBook', 'RatioBook',
]
