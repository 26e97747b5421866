"""
================================================================================
MÓDULO: ledger.py - Livro de Carga da Frota
================================================================================

Guarda, para cada hora, quanto do limite de carga da frota ainda pode ser
usado. Todo despacho que respeita o limite passa por aqui:

    1. snapshot()  → (versão, restante)
    2. o despachante monta o cronograma do veículo usando `restante`
    3. commit(quantias, versão) debita o cronograma inteiro de uma vez

Se outro veículo foi confirmado entre o snapshot e o commit, o commit ainda
é aceito quando as quantias cabem no restante atual; caso contrário levanta
LedgerConflict e o despachante refaz o cronograma com um snapshot novo.

GRADE:
------
    O restante começa arredondado para baixo na grade ENERGY_QUANTUM e só
    aceita quantias na mesma grade. Subtração de múltiplos de 2^-24 é exata,
    então a soma do que foi debitado nunca passa do limite original.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================

import threading
from typing import Tuple, Union

import numpy as np

from src.core.errors import LedgerConflict
from src.core.model import HourlySeries, quantize_down


# =============================================================================
# CLASSE PRINCIPAL
# =============================================================================

class ChargeLedger:
    """
    Limite restante de carga da frota, por hora (kWh).

    Seguro para uso entre threads: snapshot e commit rodam sob um lock e
    cada commit aceito incrementa a versão.

    Attributes:
        initial (np.ndarray): Limite original na grade (somente leitura).
        version (int): Número de commits aceitos.

    Example:
        >>> ledger = ChargeLedger(HourlySeries([0.0, 1.0, 0.0], Unit.KWH))
        >>> version, remaining = ledger.snapshot()
        >>> ledger.commit(np.array([0.0, 0.5, 0.0]), version)
        1
        >>> ledger.remaining.tolist()
        [0.0, 0.5, 0.0]

    Raises:
        LedgerConflict: commit maior que o restante atual.
    """

    def __init__(self, cap: Union[HourlySeries, np.ndarray]):
        values = cap.values if isinstance(cap, HourlySeries) else np.asarray(cap, dtype=float)
        if values.ndim != 1:
            raise ValueError("o limite de carga precisa ser um vetor 1-D")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("o limite de carga precisa ser finito e não negativo")

        initial = quantize_down(values)
        initial.setflags(write=False)
        self._initial = initial
        self._remaining = initial.copy()
        self._version = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return int(self._initial.shape[0])

    @property
    def initial(self) -> np.ndarray:
        return self._initial

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    @property
    def remaining(self) -> np.ndarray:
        with self._lock:
            return self._remaining.copy()

    @property
    def used(self) -> np.ndarray:
        """Total debitado por hora."""
        with self._lock:
            return self._initial - self._remaining

    def snapshot(self) -> Tuple[int, np.ndarray]:
        """Versão atual e cópia do restante."""
        with self._lock:
            return self._version, self._remaining.copy()

    def commit(self, amounts: np.ndarray, version: int) -> int:
        """
        Debita `amounts` do restante.

        Args:
            amounts: Carga por hora do veículo (kWh, na grade).
            version: Versão do snapshot usado para montar o cronograma.

        Returns:
            int: Nova versão do livro.

        Raises:
            ValueError: Quantias negativas, fora da grade ou de tamanho errado.
            LedgerConflict: Quantias maiores que o restante atual.
        """
        amounts = np.asarray(amounts, dtype=float)
        if amounts.shape != self._initial.shape:
            raise ValueError(
                f"commit com {amounts.size} horas para um livro de {len(self)} horas"
            )
        if np.any(amounts < 0):
            raise ValueError("commit com quantia negativa")
        if np.any(quantize_down(amounts) != amounts):
            raise ValueError("commit com quantia fora da grade de energia")

        with self._lock:
            over = amounts > self._remaining
            if np.any(over):
                hour = int(np.argmax(over))
                raise LedgerConflict(
                    f"hora {hour}: pedido {amounts[hour]:.6f} kWh, restam "
                    f"{self._remaining[hour]:.6f} kWh (versão {version} → {self._version})"
                )
            self._remaining -= amounts
            self._version += 1
            return self._version
