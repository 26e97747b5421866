"""
================================================================================
MÓDULO: errors.py - Hierarquia de Exceções do EV-DR
================================================================================

Todas as falhas "esperadas" do sistema (arquivo malformado, configuração
inválida, k impossível, modelo inconsistente) levantam uma subclasse de
EvDrError. A CLI converte essas exceções em código de saída 1.

Falhas de atendimento de demanda (um BEV que não pode ser carregado) NÃO são
exceções: viram eventos DemandFailure anexados à agenda do veículo.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

from typing import Optional


class EvDrError(Exception):
    """Raiz de todas as exceções do pacote."""


class InputDataError(EvDrError):
    """
    Arquivo de entrada malformado (CSV de perfis, séries horárias).

    Attributes:
        path (str | None): Arquivo de origem.
        row (int | None): Número da linha no arquivo (1 = cabeçalho).
    """

    def __init__(self, message: str, path: Optional[str] = None, row: Optional[int] = None):
        self.path = path
        self.row = row
        prefix = ""
        if path:
            prefix += f"{path}: "
        if row is not None:
            prefix += f"linha {row}: "
        super().__init__(prefix + message)


class SeriesLengthError(InputDataError):
    """Série horária com comprimento diferente do horizonte."""


class ConfigError(EvDrError):
    """Chave ou valor inválido no arquivo de configuração do cenário."""


class ClusteringError(EvDrError):
    """
    k inviável para o conjunto de perfis.

    Attributes:
        feasible_max (int | None): Maior k que pode ser formado com os dados.
    """

    def __init__(self, message: str, feasible_max: Optional[int] = None):
        self.feasible_max = feasible_max
        if feasible_max is not None:
            message = f"{message} (máximo viável: {feasible_max})"
        super().__init__(message)


class ModelError(EvDrError):
    """Dados inconsistentes para montar o programa linear."""


class SolverError(EvDrError):
    """Solução não ótima usada onde uma solução ótima é exigida."""


class LedgerConflict(EvDrError):
    """O livro de carga mudou entre o snapshot e o commit e a agenda não cabe mais."""
