"""
Pacote agents - Agentes de despacho do EV Fleet DR.

Contém:
    - ChargeLedger: livro de carga da frota
    - CapDispatcher e os três agentes de comparação
"""

from .ledger import ChargeLedger
from .dispatchers import (
    CapDispatcher,
    LowestCostDispatcher,
    PrimalPctDispatcher,
    StandardDispatcher,
)

__all__ = [
    'ChargeLedger', 'CapDispatcher', 'LowestCostDispatcher',
    'PrimalPctDispatcher', 'StandardDispatcher',
]
