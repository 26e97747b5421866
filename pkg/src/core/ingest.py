"""
================================================================================
MÓDULO: ingest.py - Leitura de Perfis de Direção e Séries Horárias
================================================================================

Este módulo lê os dados de entrada do simulador e gera frotas sintéticas
quando os dados reais da pesquisa de mobilidade não estão disponíveis.

FORMATOS (detalhes em docs/data-formats.md):
--------------------------------------------
    Perfis de direção (um veículo por linha, 24 horas de milhas):

        id,h0,h1,...,h23[,total]
        v00001,0,0,0,0,0,0,0,12.1,0,...,0

    A coluna opcional `total` é um checksum: se presente, precisa bater com
    a soma das 24 horas.

    Séries horárias (carga, preço de eletricidade, preço da gasolina, limite):

        hour,value
        0,41250.0
        1,38700.5

REGRAS DE VALIDAÇÃO:
--------------------
    - Linhas com aridade errada, valores não numéricos ou negativos geram
      InputDataError com o número da linha (o cabeçalho é a linha 1).
    - Arquivo vazio gera InputDataError.
    - Preços podem ser negativos; cargas e milhas não.

A leitura usa o módulo csv da biblioteca padrão (precisamos do número exato
da linha para cada erro); a escrita usa pandas.

EXEMPLO DE USO:
---------------
    from src.core.ingest import load_profiles, synth_fleet

    tabela = load_profiles("dados/perfis.csv")
    frota = synth_fleet(400, catalogo.archetypes(), seed=2011)

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================

import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from src.core.errors import ConfigError, InputDataError, SeriesLengthError
from src.core.model import (
    BEV_DAILY_MILES_LIMIT,
    HOURS_PER_DAY,
    NON_NEGATIVE_UNITS,
    HourlySeries,
    Unit,
    VehicleKind,
    classify_vehicle,
)


# =============================================================================
# CONSTANTES
# =============================================================================

PROFILE_COLUMNS = ["id"] + [f"h{h}" for h in range(HOURS_PER_DAY)]
CHECKSUM_COLUMN = "total"
SERIES_COLUMNS = ["hour", "value"]

# Dispersão do fator lognormal aplicado às milhas de cada perfil sintético
DEFAULT_MILES_SIGMA = 0.25

# Deslocamento máximo (horas) do dia inteiro de um perfil sintético
DEFAULT_SHIFT_HOURS = 1


# =============================================================================
# TIPOS
# =============================================================================

@dataclass(frozen=True)
class Archetype:
    """
    Padrão de deslocamento usado pelo gerador de frotas sintéticas.

    Attributes:
        name: Nome curto (ex.: "short_commuter").
        weight: Probabilidade de um perfil ser deste arquétipo.
        trips: Pares (hora, milhas) do dia típico.
        description: Texto livre para relatórios.
    """

    name: str
    weight: float
    trips: Tuple[Tuple[int, float], ...]
    description: str = ""

    def day_profile(self) -> np.ndarray:
        day = np.zeros(HOURS_PER_DAY)
        for hour, miles in self.trips:
            if not 0 <= hour < HOURS_PER_DAY:
                raise ConfigError(f"arquétipo '{self.name}': hora {hour} fora do dia")
            if miles < 0:
                raise ConfigError(f"arquétipo '{self.name}': milhas negativas")
            day[hour] += miles
        return day

    @property
    def total_miles(self) -> float:
        return float(sum(miles for _, miles in self.trips))


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """
    Tabela de perfis diários: um id e 24 valores de milhas por linha.

    Attributes:
        ids: Identificadores dos veículos (únicos).
        miles: Matriz m × 24 somente leitura.
    """

    ids: Tuple[str, ...]
    miles: np.ndarray

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        miles = np.array(self.miles, dtype=float).reshape(-1, HOURS_PER_DAY)
        if miles.shape[0] != len(ids):
            raise ValueError(f"{len(ids)} ids para {miles.shape[0]} perfis")
        if not np.all(np.isfinite(miles)) or np.any(miles < 0):
            raise ValueError("perfis precisam ter milhas finitas e não negativas")
        if len(set(ids)) != len(ids):
            raise ValueError("ids de veículos duplicados")
        miles.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "miles", miles)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[Tuple[str, HourlySeries]]:
        for i, vehicle_id in enumerate(self.ids):
            yield vehicle_id, self.profile(i)

    def profile(self, index: int) -> HourlySeries:
        return HourlySeries(self.miles[index], Unit.MILES)

    @property
    def totals(self) -> np.ndarray:
        return self.miles.sum(axis=1)

    def kinds(self) -> List[VehicleKind]:
        return [classify_vehicle(row) for row in self.miles]

    def select(self, indices: Sequence[int]) -> "ProfileTable":
        idx = np.asarray(indices, dtype=int)
        return ProfileTable(tuple(self.ids[i] for i in idx), self.miles[idx])

    def to_frame(self, include_total: bool = False) -> pd.DataFrame:
        frame = pd.DataFrame(self.miles, columns=PROFILE_COLUMNS[1:])
        frame.insert(0, "id", list(self.ids))
        if include_total:
            frame[CHECKSUM_COLUMN] = self.totals
        return frame

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[str, Sequence[float]]]) -> "ProfileTable":
        rows = list(rows)
        return cls(tuple(r[0] for r in rows), np.array([r[1] for r in rows], dtype=float))


# =============================================================================
# LEITURA
# =============================================================================

# Mensagem do parser C do pandas para linhas com campos a mais
_ARITY_PATTERN = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


@dataclass(frozen=True)
class _CsvFrame:
    """
    CSV lido pelo pandas com todas as células como texto.

    Attributes:
        header: Nomes das colunas sem espaços.
        cells: Células sem espaços nas pontas ("" onde faltou campo).
        missing: True onde a linha terminou antes da coluna.
        lines: Número da linha de cada registro no arquivo (1 = cabeçalho).
    """

    header: List[str]
    cells: pd.DataFrame
    missing: np.ndarray
    lines: np.ndarray

    def __len__(self) -> int:
        return len(self.lines)

    def numeric(self, columns: Sequence[str]) -> np.ndarray:
        """Converte colunas para float64; células inválidas viram NaN."""
        converted = self.cells[list(columns)].apply(pd.to_numeric, errors="coerce")
        return converted.to_numpy(dtype=np.float64)


def _read_frame(path: str) -> _CsvFrame:
    """Lê o CSV com pd.read_csv guardando o número de linha de cada registro."""
    if not os.path.exists(path):
        raise InputDataError("arquivo não encontrado", path=path)
    try:
        # header=None: a primeira linha fixa a aridade e o pandas não infere índice
        frame = pd.read_csv(
            path,
            header=None,
            dtype=str,
            encoding="utf-8",
            keep_default_na=False,
            na_values=[],
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise InputDataError("arquivo vazio", path=path) from None
    except pd.errors.ParserError as exc:
        match = _ARITY_PATTERN.search(str(exc))
        if match is None:
            raise InputDataError(f"CSV malformado: {exc}", path=path) from None
        expected, line, found = (int(group) for group in match.groups())
        raise InputDataError(f"esperadas {expected} colunas, encontradas {found}", path, line) from None
    except ValueError as exc:
        raise InputDataError(f"CSV ilegível: {exc}", path=path) from None

    if frame.empty:
        raise InputDataError("arquivo vazio", path=path)
    missing = frame.isna().to_numpy()
    cells = frame.fillna("").apply(lambda column: column.str.strip())
    header = [str(cell) for cell in cells.iloc[0]]
    cells.columns = header
    # Com skip_blank_lines=False a posição i é a linha física i + 1
    lines = np.arange(len(frame)) + 1
    keep = ~(cells == "").all(axis=1).to_numpy()
    keep[0] = False
    return _CsvFrame(header, cells[keep].reset_index(drop=True), missing[keep], lines[keep])


def _check_float(text: str, value: float, path: str, row: int, column: str) -> float:
    if math.isnan(value) and text.lower().lstrip("+-") != "nan":
        raise InputDataError(f"valor não numérico '{text}' na coluna {column}", path, row)
    if not math.isfinite(value):
        raise InputDataError(f"valor não finito na coluna {column}", path, row)
    return value


def load_profiles(path: str) -> ProfileTable:
    """
    Carrega um CSV de perfis de direção.

    Args:
        path (str): Arquivo com cabeçalho `id,h0,...,h23` e coluna opcional `total`.

    Returns:
        ProfileTable: Perfis na ordem do arquivo.

    Raises:
        InputDataError: Arquivo ausente ou vazio, cabeçalho inválido, linha com
            aridade errada, milhas negativas/não numéricas, id duplicado ou
            checksum divergente. A mensagem inclui o número da linha.
    """
    data = _read_frame(path)
    header = data.header

    has_total = header == PROFILE_COLUMNS + [CHECKSUM_COLUMN]
    if header != PROFILE_COLUMNS and not has_total:
        raise InputDataError(
            "cabeçalho inválido; esperado id,h0,...,h23 (e opcionalmente total)", path, 1
        )
    if not len(data):
        raise InputDataError("arquivo sem perfis", path=path)

    arity = len(header)
    hour_columns = PROFILE_COLUMNS[1:]
    miles = data.numeric(hour_columns)
    totals = data.numeric([CHECKSUM_COLUMN])[:, 0] if has_total else None
    texts = data.cells.to_numpy()
    ids: List[str] = []
    seen = set()

    for i, line in enumerate(data.lines):
        line = int(line)
        if data.missing[i].any():
            found = arity - int(data.missing[i].sum())
            raise InputDataError(f"esperadas {arity} colunas, encontradas {found}", path, line)
        vehicle_id = texts[i, 0]
        if not vehicle_id:
            raise InputDataError("id vazio", path, line)
        if vehicle_id in seen:
            raise InputDataError(f"id duplicado '{vehicle_id}'", path, line)
        seen.add(vehicle_id)

        for h in range(HOURS_PER_DAY):
            value = _check_float(texts[i, h + 1], miles[i, h], path, line, f"h{h}")
            if value < 0:
                raise InputDataError(f"milhas negativas na coluna h{h}", path, line)

        if totals is not None:
            total = _check_float(texts[i, -1], totals[i], path, line, CHECKSUM_COLUMN)
            computed = float(miles[i].sum())
            if abs(computed - total) > 1e-6 * max(1.0, abs(total)):
                raise InputDataError(
                    f"checksum divergente: soma {computed:.6f}, total {total:.6f}", path, line
                )
        ids.append(vehicle_id)

    return ProfileTable(tuple(ids), miles)


def write_profiles(table: ProfileTable, path: str, include_total: bool = False) -> str:
    """
    Grava a tabela no formato aceito por load_profiles.

    Returns:
        str: Caminho do arquivo gravado.
    """
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    table.to_frame(include_total).to_csv(path, index=False, float_format="%.10g")
    return path


def load_series(path: str, expected_len: int, unit: Unit) -> HourlySeries:
    """
    Carrega uma série horária `hour,value`.

    As horas precisam aparecer em ordem, começando em 0, e o número de
    linhas precisa ser exatamente `expected_len`.

    Raises:
        SeriesLengthError: Comprimento diferente do esperado.
        InputDataError: Cabeçalho/linha inválidos ou valor negativo numa
            série de carga/energia (preços negativos são aceitos).
    """
    unit = Unit(unit)
    data = _read_frame(path)
    if data.header != SERIES_COLUMNS:
        raise InputDataError("cabeçalho inválido; esperado hour,value", path, 1)
    if len(data) != expected_len:
        raise SeriesLengthError(
            f"série com {len(data)} horas, esperadas {expected_len}", path=path
        )

    numbers = data.numeric(SERIES_COLUMNS)
    texts = data.cells.to_numpy()
    values = np.zeros(expected_len)
    for i, line in enumerate(data.lines):
        line = int(line)
        if data.missing[i].any():
            raise InputDataError("esperadas 2 colunas, encontradas 1", path, line)
        hour = numbers[i, 0]
        if not np.isfinite(hour) or hour != int(hour):
            raise InputDataError(f"hora inválida '{texts[i, 0]}'", path, line)
        if int(hour) != i:
            raise InputDataError(f"hora {int(hour)} fora de ordem (esperada {i})", path, line)
        value = _check_float(texts[i, 1], numbers[i, 1], path, line, "value")
        if unit in NON_NEGATIVE_UNITS and value < 0:
            raise InputDataError(f"valor negativo em série de {unit.value}", path, line)
        values[i] = value

    return HourlySeries(values, unit)


def write_series(series: HourlySeries, path: str) -> str:
    """Grava uma série no formato `hour,value`."""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    frame = pd.DataFrame({"hour": np.arange(len(series)), "value": series.values})
    frame.to_csv(path, index=False, float_format="%.10g")
    return path


# =============================================================================
# FROTA SINTÉTICA
# =============================================================================

def _archetype_probabilities(archetypes: Sequence[Archetype]) -> np.ndarray:
    if not archetypes:
        raise ConfigError("lista de arquétipos vazia")
    weights = np.array([a.weight for a in archetypes], dtype=float)
    if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
        raise ConfigError("pesos de arquétipos precisam ser positivos")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ConfigError(f"pesos de arquétipos somam {weights.sum():.6f}, esperado 1")
    return weights / weights.sum()


def synth_fleet(
    count: int,
    archetypes: Sequence[Archetype],
    seed: int,
    stream: int = 0,
    sigma: float = DEFAULT_MILES_SIGMA,
    max_shift: int = DEFAULT_SHIFT_HOURS,
    id_prefix: str = "v",
) -> ProfileTable:
    """
    Gera `count` perfis diários a partir dos arquétipos.

    Cada perfil i usa o próprio gerador np.random.default_rng([seed, stream, i]):
    sorteia o arquétipo pelo peso, desloca o dia inteiro em até ±max_shift
    horas e escala as milhas por exp(N(0, sigma)). O perfil i não depende de
    `count` nem dos outros perfis.

    Args:
        count: Número de perfis (>= 1).
        archetypes: Arquétipos com pesos positivos somando 1.
        seed: Semente base (>= 0).
        stream: Fluxo independente (treino e frotas de teste usam fluxos diferentes).
        sigma: Dispersão lognormal das milhas.
        max_shift: Deslocamento máximo em horas.
        id_prefix: Prefixo dos ids gerados.

    Raises:
        ConfigError: Lista de arquétipos vazia ou pesos inválidos.
        ValueError: count < 1 ou semente negativa.
    """
    probabilities = _archetype_probabilities(archetypes)
    if count < 1:
        raise ValueError("count precisa ser >= 1")
    if seed < 0 or stream < 0:
        raise ValueError("semente e fluxo precisam ser não negativos")

    days = np.array([a.day_profile() for a in archetypes])
    miles = np.zeros((count, HOURS_PER_DAY))

    for i in range(count):
        rng = np.random.default_rng([seed, stream, i])
        choice = rng.choice(len(archetypes), p=probabilities)
        shift = int(rng.integers(-max_shift, max_shift + 1))
        factor = math.exp(rng.normal(0.0, sigma))
        miles[i] = np.roll(days[choice], shift) * factor

    ids = tuple(f"{id_prefix}{i:05d}" for i in range(count))
    return ProfileTable(ids, miles)


def implied_bev_share(archetypes: Sequence[Archetype], sigma: float = DEFAULT_MILES_SIGMA) -> float:
    """
    Participação esperada de BEVs numa frota sintética.

    Para um arquétipo de total T, P(T · exp(Z) < 70) = Φ(ln(70 / T) / sigma).
    """
    probabilities = _archetype_probabilities(archetypes)
    share = 0.0
    for weight, archetype in zip(probabilities, archetypes):
        total = archetype.total_miles
        if total <= 0:
            share += weight
        elif sigma == 0:
            share += weight * float(total < BEV_DAILY_MILES_LIMIT)
        else:
            share += weight * float(norm.cdf(math.log(BEV_DAILY_MILES_LIMIT / total) / sigma))
    return share

