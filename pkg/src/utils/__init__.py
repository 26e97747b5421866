"""
Pacote utils - Utilitários do EV Fleet DR.

Contém:
    - ReportGenerator: Gerador de relatórios CSV/Excel/JSON
"""

from .exporter import ReportGenerator

__all__ = ['ReportGenerator']
