"""
================================================================================
MÓDULO: clustering.py - Perfis Base de Direção (k-means)
================================================================================

Agrupa os perfis diários de treino em k "perfis base de direção". Cada
cluster representa muitos veículos no programa linear agrupado e recebe um
peso b_ℓ proporcional ao número de membros.

FLUXO:
------
    1. Os perfis são separados em BEV (< 70 milhas/dia) e PHEV antes do k-means
    2. k é dividido entre os tipos proporcionalmente ao número de perfis
    3. Lloyd com distância euclidiana (sklearn.cluster.KMeans), melhor de
       `restarts` inicializações k-means++
    4. Clusters vazios são re-semeados com o ponto mais distante do próprio centróide

ESCOLHA DE k:
-------------
    valuation_curve() mede, para cada k, a distância média membro-centróide
    (média por cluster, depois média entre clusters e entre execuções) em
    log10. select_k() pega o menor k a partir do qual a curva para de cair
    mais que `flatten_tol`.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.cluster import KMeans

from src.core.errors import ClusteringError, InputDataError
from src.core.ingest import ProfileTable
from src.core.model import (
    HourlySeries,
    PhysicalConstants,
    Unit,
    VehicleKind,
    VehicleParams,
    replicate_day,
)


MAX_LLOYD_ITERATIONS = 300

# log10 de distâncias nulas vira este piso
METRIC_FLOOR = math.log10(1e-9)

DEFAULT_FLATTEN_TOL = 0.02


# =============================================================================
# CONJUNTO DE CLUSTERS
# =============================================================================

@dataclass(frozen=True, eq=False)
class ClusterSet:
    """
    Resultado do agrupamento: centróides, tipos, contagens, pesos e parâmetros.

    Attributes:
        centroids: Matriz k × L (milhas por hora; L = 24 para perfis diários).
        kinds: Tipo de cada cluster.
        member_counts: Membros de treino por cluster (todos >= 1).
        weights: b_ℓ (estritamente positivos).
        params: VehicleParams compartilhados pelos membros do cluster.
        assignments: Cluster de cada perfil de treino (ou vazio).
    """

    centroids: np.ndarray
    kinds: Tuple[VehicleKind, ...]
    member_counts: np.ndarray
    weights: np.ndarray
    params: Tuple[VehicleParams, ...]
    assignments: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        centroids = np.array(self.centroids, dtype=float)
        if centroids.ndim != 2 or centroids.shape[0] == 0:
            raise ValueError("centróides precisam formar uma matriz k × L com k >= 1")
        k = centroids.shape[0]
        kinds = tuple(VehicleKind(kind) for kind in self.kinds)
        counts = np.array(self.member_counts, dtype=int)
        weights = np.array(self.weights, dtype=float)
        assignments = np.array(self.assignments, dtype=int)
        if len(kinds) != k or counts.shape != (k,) or weights.shape != (k,) or len(self.params) != k:
            raise ValueError("tamanhos inconsistentes no ClusterSet")
        if np.any(counts < 1):
            raise ValueError("todo cluster precisa ter pelo menos um membro")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("pesos b precisam ser estritamente positivos")
        if any(p.kind is not kind for p, kind in zip(self.params, kinds)):
            raise ValueError("parâmetros com tipo diferente do cluster")
        if assignments.size and (assignments.min() < 0 or assignments.max() >= k):
            raise ValueError("atribuição de treino fora do intervalo de clusters")
        for arr in (centroids, counts, weights, assignments):
            arr.setflags(write=False)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "member_counts", counts)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "assignments", assignments)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def training_size(self) -> int:
        return int(self.member_counts.sum())

    def centroid(self, index: int) -> HourlySeries:
        return HourlySeries(self.centroids[index], Unit.MILES)

    def indices_of(self, kind: VehicleKind) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k is VehicleKind(kind)], dtype=int)

    def profiles_for_horizon(self, hours: int) -> np.ndarray:
        """Centróides repetidos dia a dia até cobrir o horizonte (k × n)."""
        return np.array([replicate_day(c, hours) for c in self.centroids])

    def with_weights(self, weights: Sequence[float]) -> "ClusterSet":
        return ClusterSet(self.centroids, self.kinds, self.member_counts, weights,
                          self.params, self.assignments)

    def with_params(self, params: Sequence[VehicleParams]) -> "ClusterSet":
        return ClusterSet(self.centroids, self.kinds, self.member_counts, self.weights,
                          tuple(params), self.assignments)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "kinds": [kind.value for kind in self.kinds],
            "member_counts": self.member_counts.tolist(),
            "weights": self.weights.tolist(),
            "params": [p.to_dict() for p in self.params],
            "assignments": self.assignments.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClusterSet":
        return cls(
            centroids=np.array(data["centroids"], dtype=float),
            kinds=tuple(data["kinds"]),
            member_counts=np.array(data["member_counts"], dtype=int),
            weights=np.array(data["weights"], dtype=float),
            params=tuple(VehicleParams.from_dict(p) for p in data["params"]),
            assignments=np.array(data.get("assignments", []), dtype=int),
        )


def save_cluster_set(cluster_set: ClusterSet, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cluster_set.to_dict(), f, indent=2)
    return path


def load_cluster_set(path: str) -> ClusterSet:
    if not os.path.exists(path):
        raise InputDataError("arquivo de clusters não encontrado", path=path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ClusterSet.from_dict(json.load(f))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InputDataError(f"arquivo de clusters inválido: {e}", path=path) from e


# =============================================================================
# K-MEANS POR TIPO
# =============================================================================

def _update_centroids(
    points: np.ndarray, labels: np.ndarray, centroids: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Recalcula as médias; cluster vazio recebe o ponto mais distante do seu centróide."""
    k = centroids.shape[0]
    labels = labels.copy()
    own = np.sum((points - centroids[labels]) ** 2, axis=1)
    new = centroids.copy()
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        # Doadores precisam continuar com pelo menos um membro
        donors = np.flatnonzero(np.bincount(labels, minlength=k)[labels] > 1)
        far = donors[np.argmax(own[donors])]
        labels[far] = j
        own[far] = 0.0
    for j in range(k):
        new[j] = points[labels == j].mean(axis=0)
    return new, labels


def _fit_kind(points: np.ndarray, k: int, restarts: int, seed: int, stream: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lloyd do scikit-learn (k-means++, melhor de `restarts` pela inércia),
    até os rótulos pararem de mudar ou MAX_LLOYD_ITERATIONS.

    As médias finais são recalculadas a partir dos rótulos, então os
    centróides dependem só da partição encontrada.
    """
    random_state = int(np.random.default_rng([seed, stream]).integers(2 ** 31))
    model = KMeans(
        n_clusters=k,
        n_init=max(1, restarts),
        max_iter=MAX_LLOYD_ITERATIONS,
        tol=0.0,
        algorithm="lloyd",
        random_state=random_state,
    ).fit(points)
    labels = model.labels_.astype(int)
    return _update_centroids(points, labels, model.cluster_centers_)


def _distinct_count(points: np.ndarray) -> int:
    return int(np.unique(points, axis=0).shape[0]) if points.shape[0] else 0


def _split_k(k: int, counts: Dict[VehicleKind, int], distinct: Dict[VehicleKind, int]) -> Dict[VehicleKind, int]:
    """
    Divide k entre BEV e PHEV proporcionalmente ao número de perfis.

    Um cluster nunca mistura tipos (os parâmetros físicos são do tipo), então
    com os dois tipos presentes k precisa ser ao menos 2; e cada tipo recebe
    no máximo tantos clusters quanto perfis distintos.
    """
    present = [kind for kind in (VehicleKind.BEV, VehicleKind.PHEV) if counts[kind] > 0]
    feasible_max = sum(distinct[kind] for kind in present)
    if k > feasible_max:
        raise ClusteringError(
            f"k={k} excede os perfis distintos disponíveis "
            f"({', '.join(f'{kind.value}: {distinct[kind]}' for kind in present)})",
            feasible_max,
        )
    if k < len(present):
        raise ClusteringError(
            f"k={k} não comporta BEVs e PHEVs em clusters separados; um cluster nunca "
            f"mistura tipos, use k >= {len(present)}",
            feasible_max,
        )
    if len(present) == 1:
        return {present[0]: k}

    total = counts[VehicleKind.BEV] + counts[VehicleKind.PHEV]
    k_bev = int(round(k * counts[VehicleKind.BEV] / total))
    k_bev = min(max(k_bev, 1), k - 1, distinct[VehicleKind.BEV])
    k_phev = k - k_bev
    if k_phev > distinct[VehicleKind.PHEV]:
        k_phev = distinct[VehicleKind.PHEV]
        k_bev = k - k_phev
    return {VehicleKind.BEV: k_bev, VehicleKind.PHEV: k_phev}


# =============================================================================
# OPERAÇÕES
# =============================================================================

def kmeans(
    profiles: ProfileTable,
    k: int,
    restarts: int = 10,
    seed: int = 0,
    constants: Optional[PhysicalConstants] = None,
    fleet_size: Optional[int] = None,
) -> ClusterSet:
    """
    Agrupa os perfis em k clusters (BEVs e PHEVs separadamente).

    Args:
        profiles: Perfis diários de treino.
        k: Número total de clusters.
        restarts: Inicializações k-means++ por tipo; vence a menor soma de
            quadrados intra-cluster.
        seed: Semente; o tipo t usa random_state derivado de default_rng([seed, t]).
        constants: Constantes para os parâmetros de cada cluster.
        fleet_size: Tamanho da frota para os pesos b (padrão: tamanho do treino).

    Returns:
        ClusterSet: Clusters BEV primeiro, depois PHEV; dentro de cada tipo,
        ordenados pelo total diário de milhas do centróide.

    Raises:
        ClusteringError: k maior que o número de perfis distintos (com o máximo
            viável) ou menor que o número de tipos presentes.
    """
    if len(profiles) == 0:
        raise ClusteringError("nenhum perfil para agrupar", 0)
    if k < 1:
        raise ClusteringError(f"k={k} inválido", _distinct_count(profiles.miles))
    constants = constants or PhysicalConstants()

    kinds = np.array([kind.value for kind in profiles.kinds()])
    by_kind = {kind: np.flatnonzero(kinds == kind.value) for kind in VehicleKind}
    counts = {kind: len(idx) for kind, idx in by_kind.items()}
    distinct = {kind: _distinct_count(profiles.miles[idx]) for kind, idx in by_kind.items()}
    k_per_kind = _split_k(k, counts, distinct)

    centroids: List[np.ndarray] = []
    cluster_kinds: List[VehicleKind] = []
    member_counts: List[int] = []
    assignments = np.zeros(len(profiles), dtype=int)

    for stream, kind in enumerate((VehicleKind.BEV, VehicleKind.PHEV)):
        if kind not in k_per_kind:
            continue
        idx = by_kind[kind]
        points = profiles.miles[idx]
        kind_centroids, labels = _fit_kind(points, k_per_kind[kind], restarts, seed, stream)

        order = np.argsort(kind_centroids.sum(axis=1), kind="stable")
        relabel = np.empty_like(order)
        relabel[order] = np.arange(order.size)
        offset = len(centroids)
        assignments[idx] = relabel[labels] + offset
        for j in order:
            centroids.append(kind_centroids[j])
            cluster_kinds.append(kind)
            member_counts.append(int(np.sum(labels == j)))

    member_counts_arr = np.array(member_counts, dtype=int)
    weights = cluster_weights(member_counts_arr, fleet_size if fleet_size is not None else len(profiles))
    params = tuple(constants.params_for(kind) for kind in cluster_kinds)
    return ClusterSet(np.array(centroids), tuple(cluster_kinds), member_counts_arr, weights,
                      params, assignments)


def mean_member_distance(points: np.ndarray, cluster_set: ClusterSet) -> float:
    """Média entre clusters da distância média membro-centróide."""
    per_cluster = []
    for j in range(cluster_set.k):
        members = points[cluster_set.assignments == j]
        dist = np.sqrt(np.sum((members - cluster_set.centroids[j]) ** 2, axis=1))
        per_cluster.append(dist.mean())
    return float(np.mean(per_cluster))


def valuation_curve(
    profiles: ProfileTable,
    k_range: Sequence[int],
    runs: int,
    seed: int,
    restarts: int = 1,
    sample_size: Optional[int] = None,
) -> List[Tuple[int, float]]:
    """
    Métrica de valoração dos clusters para cada k.

    Cada execução sorteia (sem reposição) `sample_size` perfis, roda o
    k-means e mede a distância média membro-centróide de cada cluster;
    essas médias são promediadas entre clusters e entre execuções. A métrica
    é o log10 do resultado, com piso em log10(1e-9).

    Raises:
        ValueError: runs < 1.
        ClusteringError: k inviável para a amostra.
    """
    if runs < 1:
        raise ValueError("runs precisa ser >= 1")
    size = len(profiles) if sample_size is None else min(sample_size, len(profiles))
    curve = []
    for k in k_range:
        values = []
        for run in range(runs):
            rng = np.random.default_rng([seed, k, run])
            sample = profiles.select(np.sort(rng.choice(len(profiles), size=size, replace=False)))
            cluster_set = kmeans(sample, k, restarts=restarts, seed=int(rng.integers(2 ** 31)))
            values.append(mean_member_distance(sample.miles, cluster_set))
        mean = float(np.mean(values))
        curve.append((int(k), math.log10(mean) if mean > 1e-9 else METRIC_FLOOR))
    return curve


def select_k(curve: Sequence[Tuple[int, float]], flatten_tol: float = DEFAULT_FLATTEN_TOL) -> int:
    """
    Menor k a partir do qual a métrica não cai mais que `flatten_tol`.

    Example:
        >>> select_k([(1, -1.0), (2, -1.5), (3, -1.51), (4, -1.515)], 0.05)
        2
    """
    if not curve:
        raise ValueError("curva de valoração vazia")
    ks = [k for k, _ in curve]
    if ks != sorted(ks):
        raise ValueError("curva precisa estar ordenada por k")
    metrics = np.array([m for _, m in curve], dtype=float)
    for i, k in enumerate(ks):
        if np.all(metrics[i] - metrics[i + 1:] < flatten_tol):
            return int(k)
    return int(ks[-1])


def cluster_weights(cluster_set: Union[ClusterSet, Sequence[int]], fleet_size: int) -> np.ndarray:
    """
    Pesos b_ℓ = (membros_ℓ / tamanho do treino) · fleet_size.

    Example:
        >>> cluster_weights([300, 100], 10000).tolist()
        [7500.0, 2500.0]
    """
    counts = cluster_set.member_counts if isinstance(cluster_set, ClusterSet) else cluster_set
    counts = np.asarray(counts, dtype=float)
    if fleet_size <= 0:
        raise ValueError("fleet_size precisa ser positivo")
    if counts.size == 0 or np.any(counts <= 0):
        raise ValueError("contagens de membros precisam ser positivas")
    return counts / counts.sum() * fleet_size


def assign_cluster(
    profile: Union[HourlySeries, Sequence[float]],
    kind: VehicleKind,
    cluster_set: ClusterSet,
) -> int:
    """
    Índice do centróide mais próximo (euclidiano) entre os clusters do mesmo tipo.

    Compara as primeiras L horas (L = comprimento do centróide). Empates
    ficam com o menor índice.

    Raises:
        ClusteringError: Nenhum cluster do tipo pedido.
    """
    values = profile.values if isinstance(profile, HourlySeries) else np.asarray(profile, dtype=float)
    candidates = cluster_set.indices_of(kind)
    if candidates.size == 0:
        raise ClusteringError(f"nenhum cluster do tipo {VehicleKind(kind).value}")
    length = min(values.size, cluster_set.centroids.shape[1])
    diff = cluster_set.centroids[candidates, :length] - values[:length]
    return int(candidates[np.argmin(np.einsum("ij,ij->i", diff, diff))])
