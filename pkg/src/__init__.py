"""
EV Fleet DR - Resposta à Demanda para Frotas de Veículos Elétricos
"""

__version__ = "1.0.0"
__author__ = "Grande Mestre"
