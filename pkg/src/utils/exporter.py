"""
================================================================================
MÓDULO: exporter.py - Gerador de Relatórios da Simulação
================================================================================

Este módulo grava os resultados das simulações em arquivos que podem ser
abertos em planilhas ou lidos por scripts de gráficos.

ARQUIVOS GERADOS:
-----------------
    comparison.csv          Uma linha por despachante: média e desvio padrão
                            de cada métrica sobre as execuções
    runs.csv                Uma linha por (despachante, execução)
    loads_<despachante>.csv Curva horária média: carga base, frota e total
    comparison.xlsx         Planilha com as abas "comparacao", "execucoes"
                            e "cargas"
    events.jsonl            Log de despacho (uma linha JSON por evento)
    price_profiles.csv      Perfis normalizados de preço das primeiras 48 h
    manifest.json           Hash da configuração, semente e versões

NOMENCLATURA DOS ARQUIVOS:
--------------------------
Os nomes são fixos (sem timestamp): a mesma configuração com a mesma
semente produz CSVs idênticos byte a byte.

DEPENDÊNCIAS:
-------------
    - pandas: tabelas e exportação CSV/Excel
    - openpyxl: engine para escrita de arquivos .xlsx

USO:
----
    from src.utils.exporter import ReportGenerator

    exporter = ReportGenerator(output_folder="out/referencia")
    exporter.gerar_csv(batch)
    exporter.gerar_excel(batch)

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================

import json
import os
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
import scipy
from colorama import Fore

import src


# =============================================================================
# CONSTANTES
# =============================================================================

DEFAULT_OUTPUT_FOLDER = "output_reports"

COMPARISON_FILE = "comparison.csv"
RUNS_FILE = "runs.csv"
EXCEL_FILE = "comparison.xlsx"
EVENTS_FILE = "events.jsonl"
PRICE_PROFILES_FILE = "price_profiles.csv"
MANIFEST_FILE = "manifest.json"

# Formato dos números nos CSVs (estável entre execuções)
FLOAT_FORMAT = "%.10g"


def loads_filename(dispatcher: str) -> str:
    return f"loads_{dispatcher}.csv"


# =============================================================================
# CLASSE PRINCIPAL
# =============================================================================

class ReportGenerator:
    """
    Gerador dos arquivos de resultado de uma execução da linha de comando.

    Attributes:
        output_folder (str): Diretório onde os arquivos são gravados.
        verbose (bool): Imprime uma linha por arquivo gerado.

    Example:
        >>> exporter = ReportGenerator("out/teste", verbose=False)
        >>> exporter.gerar_csv(batch)
        ['out/teste/comparison.csv', 'out/teste/runs.csv', 'out/teste/loads_cap.csv', ...]

    Note:
        - O diretório é criado automaticamente se não existir
        - Arquivos existentes com o mesmo nome são sobrescritos
    """

    def __init__(self, output_folder: str = DEFAULT_OUTPUT_FOLDER, verbose: bool = True):
        self.output_folder = output_folder
        self.verbose = verbose

        if not os.path.exists(output_folder):
            os.makedirs(output_folder, exist_ok=True)
            if verbose:
                print(Fore.BLUE + f"📁 Diretório criado: {output_folder}")

    def _path(self, filename: str) -> str:
        return os.path.join(self.output_folder, filename)

    def _announce(self, path: str, detail: str = "") -> None:
        if self.verbose:
            suffix = f" ({detail})" if detail else ""
            print(Fore.GREEN + f"📊 {path}{suffix}")

    def salvar_tabela(self, df: pd.DataFrame, filename: str) -> str:
        """Grava um DataFrame em CSV com formato numérico fixo."""
        path = self._path(filename)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        self._announce(path, f"{len(df)} linhas")
        return path

    # =========================================================================
    # RESULTADOS DAS SIMULAÇÕES
    # =========================================================================

    def gerar_csv(self, batch) -> List[str]:
        """
        Tabela de comparação, execuções e curvas de carga de cada despachante.

        Args:
            batch: BatchResult de run_batch().

        Returns:
            List[str]: Caminhos gerados, comparison.csv primeiro.
        """
        paths = [
            self.salvar_tabela(batch.summary(), COMPARISON_FILE),
            self.salvar_tabela(batch.runs_frame(), RUNS_FILE),
        ]
        for name in batch.dispatchers:
            paths.append(self.salvar_tabela(batch.load_frame(name), loads_filename(name)))
        return paths

    def gerar_excel(self, batch) -> Optional[str]:
        """
        Planilha com a comparação, as execuções e as curvas médias de carga.

        Returns:
            Optional[str]: Caminho do arquivo ou None se não foi possível gravar.
        """
        if not batch.dispatchers:
            print(Fore.YELLOW + "⚠️  Nenhum despachante para exportar. Planilha não gerada.")
            return None

        base = batch.base_load.values
        loads = pd.DataFrame({"hour": np.arange(base.size), "base_load": base})
        for name in batch.dispatchers:
            loads[name] = batch.mean_load(name)

        path = self._path(EXCEL_FILE)
        try:
            with pd.ExcelWriter(path, engine="openpyxl") as writer:
                batch.summary().to_excel(writer, sheet_name="comparacao", index=False)
                batch.runs_frame().to_excel(writer, sheet_name="execucoes", index=False)
                loads.to_excel(writer, sheet_name="cargas", index=False)
        except PermissionError:
            print(Fore.RED + f"❌ Erro: Arquivo {path} está aberto em outro programa.")
            print(Fore.YELLOW + "   Feche a planilha e tente novamente.")
            return None
        except (OSError, ValueError) as e:
            print(Fore.RED + f"❌ Erro ao salvar Excel: {e}")
            return None

        self._announce(path, f"{len(batch.dispatchers)} despachantes")
        return path

    def gerar_eventos(self, records: Iterable[Dict[str, Any]], filename: str = EVENTS_FILE) -> str:
        """Log de despacho em JSON lines (uma linha por evento)."""
        path = self._path(filename)
        count = 0
        with open(path, "w", encoding="utf-8") as f:
            for record in records:
                f.write(json.dumps(record, sort_keys=True) + "\n")
                count += 1
        self._announce(path, f"{count} eventos")
        return path

    def gerar_perfis_preco(self, frame: pd.DataFrame) -> str:
        """Perfis normalizados de preço (price_profile_frame)."""
        return self.salvar_tabela(frame, PRICE_PROFILES_FILE)

    # =========================================================================
    # MANIFESTO
    # =========================================================================

    def gerar_manifesto(
        self,
        command: str,
        config=None,
        seed: Optional[int] = None,
        files: Iterable[str] = (),
        extra: Optional[Dict[str, Any]] = None,
    ) -> str:
        """
        manifest.json: comando, hash da configuração, semente, versões e arquivos.
        """
        manifest: Dict[str, Any] = {
            "command": command,
            "seed": seed,
            "config_hash": config.config_hash() if config is not None else None,
            "config_source": getattr(config, "source", None),
            "versions": {
                "evfleet_dr": src.__version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "pandas": pd.__version__,
            },
            "files": sorted(os.path.basename(f) for f in files if f),
        }
        if extra:
            manifest.update(extra)

        path = self._path(MANIFEST_FILE)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True, default=str)
        self._announce(path)
        return path
