"""
================================================================================
MÓDULO: lp.py - Programa Linear Agrupado (CLP), Programa Completo e Duais
================================================================================

Monta e resolve o programa linear da frota em forma padrão com variáveis
limitadas:

    min  cᵀx
    s.a. A_eq x  = b_eq     (balanço da bateria e do tanque)
         A_ub x <= b_ub     (limite de carga da frota, uma linha por hora)
         l <= x <= u

ESTRUTURA DAS COLUNAS:
----------------------
    Cada bloco (um cluster no CLP, um veículo no programa completo) tem 5
    famílias de n variáveis, na ordem s, c, sg, f, g:

        coluna(bloco, família, h) = bloco·5n + família·n + h

    s_h  = energia na bateria ao fim da hora h (kWh)
    c_h  = energia comprada da rede na hora h (kWh)
    sg_h = gasolina no tanque ao fim da hora h (galões)
    f_h  = gasolina abastecida na hora h (galões)
    g_h  = energia de gasolina queimada pelo gerador na hora h (kWh)

    O estado inicial (s_0, sg_0) entra no lado direito da linha da hora 0.

LINHAS:
-------
    bateria (ℓ,h), linha ℓ·n + h:
        s_h − s_{h−1} − c_eff·c_h − g_eff·g_h = −(kWh/milha)·t_h
    tanque (ℓ,h), linha k·n + ℓ·n + h:
        sg_h − sg_{h−1} − f_h + (galão/kWh)·g_h = 0
    limite (h):
        Σ_ℓ b_ℓ·c_ℓh <= c_cap,h

    As implicações "só carrega estacionado" e "só abastece/gera dirigindo"
    são fixações de variável (limite superior 0), sem big-M.

CONVENÇÃO DE SINAIS DOS DUAIS:
------------------------------
    y = ∂(objetivo)/∂(lado direito), como o HiGHS reporta:
        θ_h = y da linha de limite (θ <= 0)
        λ^s_ℓh = −y_bateria(ℓ,h) / b_ℓ   (valor por veículo da energia guardada)
        r = c − Aᵀy (custos reduzidos, calculados aqui nas unidades originais)

    Para a coluna c_ℓh:  r / b_ℓ = p_h − c_eff·λ^s_ℓh − θ_h

RESOLUÇÃO:
----------
    scipy.optimize.linprog com o simplex dual do HiGHS (duais básicos
    exatos), depois de equilibrar linhas e colunas com potências de 2 (a
    escala é exata e é desfeita antes de qualquer cálculo). O resultado é
    verificado nas unidades originais: resíduo primal, gap de dualidade e
    folgas complementares formam o certificado da solução.

Autor: Grande Mestre
Versão: 1.0
================================================================================
"""

import json
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from colorama import Fore
from scipy import sparse
from scipy.optimize import linprog

from src.core.errors import InputDataError, ModelError, SolverError
from src.core.model import HOURS_PER_DAY, Scenario, Vehicle, VehicleParams


# =============================================================================
# CONSTANTES
# =============================================================================

FAMILIES = ("s", "c", "sg", "f", "g")

# Tolerâncias do HiGHS (no problema escalado)
SOLVER_TOL = 1e-9

# Resíduo primal máximo aceito em cada linha, absoluto (unidades originais)
PRIMAL_TOL = 1e-7

# Certificado: gap <= GAP_TOL·(1 + |obj|), folga complementar <= CS_TOL
GAP_TOL = 1e-6
CS_TOL = 1e-8


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


# =============================================================================
# MODELO
# =============================================================================

@dataclass(frozen=True, eq=False)
class BlockLayout:
    """
    Mapa de índices de um programa com blocos por cluster/veículo.

    Attributes:
        horizon: n horas.
        weights: b de cada bloco (1 no programa completo).
        params: VehicleParams de cada bloco.
        miles: Milhas por hora de cada bloco (blocos × n).
        charge_allowed: Horas em que c pode ser positivo (blocos × n).
        labels: Rótulo de cada bloco (índice do cluster ou id do veículo).
    """

    horizon: int
    weights: np.ndarray
    params: Tuple[VehicleParams, ...]
    miles: np.ndarray
    charge_allowed: np.ndarray
    labels: Tuple[str, ...]

    @property
    def blocks(self) -> int:
        return int(self.weights.shape[0])

    @property
    def driving(self) -> np.ndarray:
        return self.miles > 0

    def column(self, block: int, family: str, hour: int) -> int:
        n = self.horizon
        return block * len(FAMILIES) * n + FAMILIES.index(family) * n + hour

    def family_columns(self, family: str) -> np.ndarray:
        """Índices das colunas de uma família, na forma blocos × n."""
        n = self.horizon
        base = np.arange(self.blocks)[:, None] * len(FAMILIES) * n
        return base + FAMILIES.index(family) * n + np.arange(n)[None, :]

    def balance_rows(self) -> np.ndarray:
        return np.arange(self.blocks * self.horizon).reshape(self.blocks, self.horizon)

    def fuel_rows(self) -> np.ndarray:
        return self.blocks * self.horizon + self.balance_rows()


@dataclass(frozen=True, eq=False)
class LpModel:
    """
    Programa linear em forma padrão com variáveis limitadas.

    Attributes:
        c: Custos.
        A_eq, b_eq: Igualdades (CSR).
        A_ub, b_ub: Desigualdades <= (CSR).
        lower, upper: Limites das variáveis.
        fixed: Colunas fixadas em 0 pelas implicações dirigindo/estacionado.
        layout: Mapa de blocos (None para modelos genéricos).
        name: Nome usado na exportação.
    """

    c: np.ndarray
    A_eq: sparse.csr_matrix
    b_eq: np.ndarray
    A_ub: sparse.csr_matrix
    b_ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    fixed: np.ndarray
    layout: Optional[BlockLayout] = None
    name: str = "lp"

    def __post_init__(self):
        nvars = self.c.shape[0]
        if self.A_eq.shape != (self.b_eq.shape[0], nvars) or self.A_ub.shape != (self.b_ub.shape[0], nvars):
            raise ModelError("dimensões inconsistentes entre matrizes e vetores")
        if self.lower.shape != (nvars,) or self.upper.shape != (nvars,) or self.fixed.shape != (nvars,):
            raise ModelError("limites com tamanho diferente do número de variáveis")
        if np.any(self.lower > self.upper):
            raise ModelError("limite inferior maior que o superior")
        for arr in (self.c, self.b_eq, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise ModelError("coeficientes não finitos no modelo")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ModelError("limites indefinidos no modelo")

    @property
    def num_vars(self) -> int:
        return int(self.c.shape[0])

    @property
    def num_eq(self) -> int:
        return int(self.b_eq.shape[0])

    @property
    def num_ub(self) -> int:
        return int(self.b_ub.shape[0])

    @classmethod
    def from_arrays(
        cls,
        c: Sequence[float],
        A_eq: Optional[Any] = None,
        b_eq: Optional[Sequence[float]] = None,
        A_ub: Optional[Any] = None,
        b_ub: Optional[Sequence[float]] = None,
        lower: Optional[Sequence[float]] = None,
        upper: Optional[Sequence[float]] = None,
        name: str = "lp",
    ) -> "LpModel":
        """Modelo genérico (sem blocos) a partir de arrays densos ou esparsos."""
        c = np.asarray(c, dtype=float)
        n = c.shape[0]

        def matrix(A):
            if A is None:
                return sparse.csr_matrix((0, n))
            return sparse.csr_matrix(A, dtype=float)

        A_eq_m = matrix(A_eq)
        A_ub_m = matrix(A_ub)
        return cls(
            c=c,
            A_eq=A_eq_m,
            b_eq=np.asarray(b_eq if b_eq is not None else [], dtype=float),
            A_ub=A_ub_m,
            b_ub=np.asarray(b_ub if b_ub is not None else [], dtype=float),
            lower=np.zeros(n) if lower is None else np.asarray(lower, dtype=float),
            upper=np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float),
            fixed=np.zeros(n, dtype=bool),
            name=name,
        )


def _build_blocks(
    miles: np.ndarray,
    params: Sequence[VehicleParams],
    weights: np.ndarray,
    plug_in: np.ndarray,
    scenario: Scenario,
    labels: Sequence[str],
    name: str,
) -> LpModel:
    k, n = miles.shape
    nf = len(FAMILIES)
    nvars = k * nf * n

    hours = np.arange(n)
    driving = miles > 0
    charge_allowed = ~driving & (hours[None, :] >= plug_in[:, None])
    layout = BlockLayout(n, weights, tuple(params), miles, charge_allowed, tuple(labels))

    col = {fam: layout.family_columns(fam) for fam in FAMILIES}
    bal = layout.balance_rows()
    fuel = layout.fuel_rows()

    c_eff = np.array([p.charge_efficiency for p in params])[:, None]
    g_eff = np.array([p.generation_efficiency for p in params])[:, None]
    gpk = np.array([p.gallon_per_kwh for p in params])[:, None]
    cons = np.array([p.consumption for p in params])[:, None]
    ones = np.ones((k, n))

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []

    def add(r, cl, v):
        rows.append(np.ravel(r))
        cols.append(np.ravel(cl))
        vals.append(np.ravel(np.broadcast_to(v, np.shape(r))))

    # Balanço da bateria
    add(bal, col["s"], 1.0)
    add(bal[:, 1:], col["s"][:, :-1], -1.0)
    add(bal, col["c"], -c_eff * ones)
    add(bal, col["g"], -g_eff * ones)
    # Balanço do tanque
    add(fuel, col["sg"], 1.0)
    add(fuel[:, 1:], col["sg"][:, :-1], -1.0)
    add(fuel, col["f"], -1.0)
    add(fuel, col["g"], gpk * ones)

    A_eq = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * k * n, nvars),
    ).tocsr()

    b_bal = -cons * miles
    b_bal[:, 0] += np.array([p.initial_storage for p in params])
    b_fuel = np.zeros((k, n))
    b_fuel[:, 0] = np.array([p.initial_fuel for p in params])
    b_eq = np.concatenate([b_bal.ravel(), b_fuel.ravel()])

    cap_rows = np.broadcast_to(hours[None, :], (k, n))
    A_ub = sparse.coo_matrix(
        (np.broadcast_to(weights[:, None], (k, n)).ravel(), (cap_rows.ravel(), col["c"].ravel())),
        shape=(n, nvars),
    ).tocsr()
    b_ub = scenario.charge_cap.values.astype(float).copy()

    cost = np.zeros(nvars)
    cost[col["c"].ravel()] = (weights[:, None] * scenario.elec_price.values[None, :]).ravel()
    cost[col["f"].ravel()] = (weights[:, None] * scenario.gas_price.values[None, :]).ravel()

    natural = {
        "s": np.array([p.battery_capacity for p in params]),
        "c": np.array([p.max_charge_rate for p in params]),
        "sg": np.array([p.tank_capacity for p in params]),
        "f": np.array([p.max_fuel_rate for p in params]),
        "g": np.array([p.max_generation_rate for p in params]),
    }
    allowed = {"s": ones > 0, "c": charge_allowed, "sg": ones > 0, "f": driving, "g": driving}

    upper = np.zeros(nvars)
    fixed = np.zeros(nvars, dtype=bool)
    for fam in FAMILIES:
        nat = np.broadcast_to(natural[fam][:, None], (k, n))
        upper[col[fam].ravel()] = np.where(allowed[fam], nat, 0.0).ravel()
        fixed[col[fam].ravel()] = (~allowed[fam] & (nat > 0)).ravel()

    return LpModel(cost, A_eq, b_eq, A_ub, b_ub, np.zeros(nvars), upper, fixed, layout, name)


def build_clp(cluster_set, scenario: Scenario) -> LpModel:
    """
    Programa linear agrupado: um bloco por cluster, objetivo ponderado por b_ℓ.

    Centróides diários (24 horas) são repetidos até o horizonte.

    Raises:
        ModelError: Centróides com comprimento diferente de 24 e de n.
    """
    n = scenario.horizon
    length = cluster_set.centroids.shape[1]
    if length not in (HOURS_PER_DAY, n):
        raise ModelError(f"centróides com {length} horas; esperado {HOURS_PER_DAY} ou {n}")
    miles = cluster_set.profiles_for_horizon(n)
    labels = [str(i) for i in range(cluster_set.k)]
    return _build_blocks(
        miles, cluster_set.params, np.asarray(cluster_set.weights, dtype=float),
        np.zeros(cluster_set.k, dtype=int), scenario, labels, "clp",
    )


def build_full_lp(fleet: Sequence[Vehicle], scenario: Scenario) -> LpModel:
    """
    Programa completo (um bloco por veículo, pesos 1). Só para validação em
    frotas pequenas: a carga respeita também a hora de conexão de cada veículo.

    Raises:
        ModelError: Frota vazia ou perfil com comprimento diferente de n.
    """
    if not fleet:
        raise ModelError("frota vazia")
    n = scenario.horizon
    for vehicle in fleet:
        if vehicle.horizon != n:
            raise ModelError(f"veículo {vehicle.id}: perfil com {vehicle.horizon} horas, horizonte {n}")
    miles = np.array([v.profile.values for v in fleet])
    plug_in = np.array([v.plug_in_hour for v in fleet], dtype=int)
    return _build_blocks(
        miles, [v.params for v in fleet], np.ones(len(fleet)), plug_in, scenario,
        [v.id for v in fleet], "full",
    )


# =============================================================================
# SOLUÇÃO
# =============================================================================

@dataclass(frozen=True)
class Certificate:
    """Verificação da solução nas unidades originais."""

    primal_residual: float
    dual_objective: float
    duality_gap: float
    complementarity_residual: float
    dual_infeasibility: float
    certified: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "primal_residual": self.primal_residual,
            "dual_objective": self.dual_objective,
            "duality_gap": self.duality_gap,
            "complementarity_residual": self.complementarity_residual,
            "dual_infeasibility": self.dual_infeasibility,
            "certified": self.certified,
        }


@dataclass(frozen=True, eq=False)
class LpSolution:
    """
    Solução primal e dual de um LpModel.

    Attributes:
        model: Modelo resolvido.
        status: Optimal, Infeasible, Unbounded ou NumericalFailure.
        objective: Valor ótimo ($) ou nan.
        x: Solução primal.
        y_eq, y_ub: Duais das linhas (∂obj/∂rhs).
        reduced_costs: c − Aᵀy.
        certificate: Resíduos e gap (None se não ótima).
        infeasibility: Soma mínima das violações (fase 1) quando inviável.
        message: Mensagem do solver.
        iterations: Iterações do simplex.
    """

    model: LpModel
    status: SolveStatus
    objective: float
    x: np.ndarray
    y_eq: np.ndarray
    y_ub: np.ndarray
    reduced_costs: np.ndarray
    certificate: Optional[Certificate] = None
    infeasibility: Optional[float] = None
    message: str = ""
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def require_optimal(self) -> "LpSolution":
        if not self.is_optimal:
            raise SolverError(f"solução {self.status.value}: {self.message}")
        return self

    def _layout(self) -> BlockLayout:
        if self.model.layout is None:
            raise ModelError("modelo sem estrutura de blocos")
        return self.model.layout

    def primal(self, family: str) -> np.ndarray:
        """Valores de uma família (s, c, sg, f, g) na forma blocos × n."""
        return self.x[self._layout().family_columns(family)]

    def reduced_cost(self, family: str) -> np.ndarray:
        return self.reduced_costs[self._layout().family_columns(family)]

    @property
    def theta(self) -> np.ndarray:
        """Dual das linhas de limite (<= 0)."""
        return self.y_ub

    @property
    def lambda_s(self) -> np.ndarray:
        layout = self._layout()
        return -self.y_eq[layout.balance_rows()] / layout.weights[:, None]

    def nu(self, family: str) -> np.ndarray:
        """Parte do custo reduzido (por veículo) em colunas no limite inferior."""
        r = self.reduced_cost(family) / self._layout().weights[:, None]
        free = ~self.model.fixed[self._layout().family_columns(family)]
        return np.where(free, np.maximum(r, 0.0), 0.0)

    def gamma(self, family: str) -> np.ndarray:
        """Parte do custo reduzido (por veículo) em colunas no limite superior."""
        r = self.reduced_cost(family) / self._layout().weights[:, None]
        free = ~self.model.fixed[self._layout().family_columns(family)]
        return np.where(free, np.maximum(-r, 0.0), 0.0)

    def eta(self) -> Dict[str, np.ndarray]:
        """
        Multiplicadores das fixações, por veículo:
            eta1: carga enquanto dirige; eta2: abastecimento parado; eta3: geração parado.
        """
        layout = self._layout()
        result = {}
        for key, family in (("eta1", "c"), ("eta2", "f"), ("eta3", "g")):
            cols = layout.family_columns(family)
            r = self.reduced_costs[cols] / layout.weights[:, None]
            result[key] = np.where(self.model.fixed[cols], r, 0.0)
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "x": self.x.tolist(),
            "y_eq": self.y_eq.tolist(),
            "y_ub": self.y_ub.tolist(),
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "infeasibility": self.infeasibility,
            "message": self.message,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], model: LpModel) -> "LpSolution":
        x = np.array(data["x"], dtype=float)
        y_eq = np.array(data["y_eq"], dtype=float)
        y_ub = np.array(data["y_ub"], dtype=float)
        if x.shape != (model.num_vars,) or y_eq.shape != (model.num_eq,) or y_ub.shape != (model.num_ub,):
            raise ModelError("solução gravada não corresponde ao modelo")
        cert = data.get("certificate")
        return cls(
            model=model,
            status=SolveStatus(data["status"]),
            objective=float(data["objective"]),
            x=x,
            y_eq=y_eq,
            y_ub=y_ub,
            reduced_costs=_reduced_costs(model, y_eq, y_ub),
            certificate=Certificate(**cert) if cert else None,
            infeasibility=data.get("infeasibility"),
            message=data.get("message", ""),
            iterations=int(data.get("iterations", 0)),
        )


def save_solution(solution: LpSolution, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(solution.to_dict(), f)
    return path


def load_solution(path: str, model: LpModel) -> LpSolution:
    if not os.path.exists(path):
        raise InputDataError("arquivo de solução não encontrado", path=path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InputDataError(f"arquivo de solução inválido: {e}", path=path) from e
    return LpSolution.from_dict(data, model)


# =============================================================================
# RESOLUÇÃO
# =============================================================================

def _power_of_two(values: np.ndarray) -> np.ndarray:
    values = np.where(values > 0, values, 1.0)
    return np.exp2(-np.round(np.log2(values)))


def _scale(A: sparse.csr_matrix, rows: np.ndarray, cols: np.ndarray) -> sparse.csr_matrix:
    """R·A·C com R, C diagonais (potências de 2, portanto exato)."""
    scaled = A.tocoo(copy=True)
    scaled.data = scaled.data * rows[scaled.row] * cols[scaled.col]
    return scaled.tocsr()


def _equilibrate(model: LpModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Escalas de linha (igualdades, desigualdades) e de coluna em potências de 2."""
    stacked = sparse.vstack([model.A_eq, model.A_ub]).tocsr()
    if stacked.shape[0] == 0 or stacked.nnz == 0:
        return np.ones(model.num_eq), np.ones(model.num_ub), np.ones(model.num_vars)
    row_scale = _power_of_two(abs(stacked).max(axis=1).toarray().ravel())
    scaled = _scale(stacked, row_scale, np.ones(model.num_vars))
    col_scale = _power_of_two(abs(scaled).max(axis=0).toarray().ravel())
    return row_scale[:model.num_eq], row_scale[model.num_eq:], col_scale


def _reduced_costs(model: LpModel, y_eq: np.ndarray, y_ub: np.ndarray) -> np.ndarray:
    return model.c - model.A_eq.T @ y_eq - model.A_ub.T @ y_ub


def _certify(model: LpModel, x: np.ndarray, y_eq: np.ndarray, y_ub: np.ndarray,
             r: np.ndarray, objective: float) -> Certificate:
    eq_res = np.abs(model.A_eq @ x - model.b_eq) if model.num_eq else np.zeros(0)
    ub_slack = model.b_ub - model.A_ub @ x if model.num_ub else np.zeros(0)
    ub_res = np.maximum(-ub_slack, 0.0)
    primal_residual = float(max(eq_res.max(initial=0.0), ub_res.max(initial=0.0)))

    finite_lo = np.isfinite(model.lower)
    finite_up = np.isfinite(model.upper)
    pos = np.maximum(r, 0.0)
    neg = np.minimum(r, 0.0)
    dual_infeasibility = float(max(
        np.max(pos[~finite_lo], initial=0.0),
        np.max(-neg[~finite_up], initial=0.0),
        np.max(y_ub, initial=0.0),
    ))
    dual_objective = float(
        model.b_eq @ y_eq + model.b_ub @ y_ub
        + np.sum(np.where(finite_lo, model.lower, 0.0) * pos)
        + np.sum(np.where(finite_up, model.upper, 0.0) * neg)
    )
    gap = abs(objective - dual_objective)

    at_lower = np.where(finite_lo, x - model.lower, 0.0)
    at_upper = np.where(finite_up, model.upper - x, 0.0)
    cs_cols = pos * at_lower - neg * at_upper
    cs_rows = np.abs(y_ub * ub_slack) if model.num_ub else np.zeros(0)
    cs = float(max(cs_cols.max(initial=0.0), cs_rows.max(initial=0.0)))

    certified = (
        primal_residual <= PRIMAL_TOL
        and gap <= GAP_TOL * (1.0 + abs(objective))
        and cs <= CS_TOL
        and dual_infeasibility <= CS_TOL
    )
    return Certificate(primal_residual, dual_objective, gap, cs, dual_infeasibility, certified)


def _highs(c, A_ub, b_ub, A_eq, b_eq, lower, upper):
    return linprog(
        c,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=np.column_stack([lower, upper]),
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": SOLVER_TOL,
            "dual_feasibility_tolerance": SOLVER_TOL,
        },
    )


def _phase_one(model: LpModel) -> float:
    """Menor soma de violações das linhas (elástico), para modelos inviáveis."""
    m_eq, m_ub, nv = model.num_eq, model.num_ub, model.num_vars
    c = np.concatenate([np.zeros(nv), np.ones(2 * m_eq + m_ub)])
    eye_eq = sparse.identity(m_eq, format="csr")
    eye_ub = sparse.identity(m_ub, format="csr")
    A_eq = sparse.hstack([model.A_eq, eye_eq, -eye_eq, sparse.csr_matrix((m_eq, m_ub))]).tocsr()
    A_ub = sparse.hstack([model.A_ub, sparse.csr_matrix((m_ub, 2 * m_eq)), -eye_ub]).tocsr()
    lower = np.concatenate([model.lower, np.zeros(2 * m_eq + m_ub)])
    upper = np.concatenate([model.upper, np.full(2 * m_eq + m_ub, np.inf)])
    result = _highs(c, A_ub, model.b_ub, A_eq, model.b_eq, lower, upper)
    return float(result.fun) if result.status == 0 else float("nan")


def solve(model: LpModel, verbose: bool = False) -> LpSolution:
    """
    Resolve o modelo e devolve primal, duais e certificado.

    Returns:
        LpSolution: Optimal (com certificado), Infeasible (com o ótimo da
        fase 1 em `infeasibility`), Unbounded ou NumericalFailure. Uma
        solução cujo resíduo primal passa de PRIMAL_TOL nas unidades
        originais é marcada como NumericalFailure, nunca como ótima.
    """
    row_eq, row_ub, col = _equilibrate(model)
    A_eq_s = _scale(model.A_eq, row_eq, col)
    A_ub_s = _scale(model.A_ub, row_ub, col)

    result = _highs(
        model.c * col, A_ub_s, model.b_ub * row_ub, A_eq_s, model.b_eq * row_eq,
        model.lower / col, model.upper / col,
    )
    iterations = int(getattr(result, "nit", 0) or 0)
    empty = np.full(model.num_vars, np.nan)

    def failed(status: SolveStatus, infeasibility: Optional[float] = None) -> LpSolution:
        return LpSolution(model, status, float("nan"), empty, np.full(model.num_eq, np.nan),
                          np.full(model.num_ub, np.nan), empty, None, infeasibility,
                          str(result.message), iterations)

    if result.status == 2:
        infeasibility = _phase_one(model)
        if verbose:
            print(Fore.YELLOW + f"⚠️  Modelo {model.name} inviável (violação mínima {infeasibility:.6g})")
        return failed(SolveStatus.INFEASIBLE, infeasibility)
    if result.status == 3:
        return failed(SolveStatus.UNBOUNDED)
    if result.status != 0:
        if verbose:
            print(Fore.RED + f"❌ Falha numérica no modelo {model.name}: {result.message}")
        return failed(SolveStatus.NUMERICAL_FAILURE)

    x = np.clip(np.asarray(result.x) * col, model.lower, model.upper)
    y_eq = np.asarray(result.eqlin.marginals) * row_eq if model.num_eq else np.zeros(0)
    y_ub = np.asarray(result.ineqlin.marginals) * row_ub if model.num_ub else np.zeros(0)
    r = _reduced_costs(model, y_eq, y_ub)
    objective = float(model.c @ x)
    certificate = _certify(model, x, y_eq, y_ub, r, objective)

    status = SolveStatus.OPTIMAL
    if certificate.primal_residual > PRIMAL_TOL:
        status = SolveStatus.NUMERICAL_FAILURE

    if verbose:
        if status is SolveStatus.OPTIMAL:
            flag = "certificado" if certificate.certified else "NÃO certificado"
            colour = Fore.GREEN if certificate.certified else Fore.YELLOW
            print(colour + f"✅ {model.name}: ótimo {objective:.6f} ({iterations} iterações, {flag})")
        else:
            print(Fore.RED + f"❌ {model.name}: resíduo primal {certificate.primal_residual:.2e}")

    return LpSolution(model, status, objective if status is SolveStatus.OPTIMAL else float("nan"),
                      x, y_eq, y_ub, r, certificate, None, str(result.message), iterations)


# =============================================================================
# EXPORTAÇÃO
# =============================================================================

def _column_names(model: LpModel) -> List[str]:
    if model.layout is None:
        return [f"x{j}" for j in range(model.num_vars)]
    layout = model.layout
    names = [""] * model.num_vars
    for block in range(layout.blocks):
        for fam in FAMILIES:
            for h in range(layout.horizon):
                names[layout.column(block, fam, h)] = f"{fam}_{block}_{h}"
    return names


def _format_terms(row: sparse.csr_matrix, names: List[str]) -> str:
    parts = []
    for j, v in zip(row.indices, row.data):
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v):.12g} {names[j]}")
    text = " ".join(parts) if parts else "0 x0"
    return text[2:] if text.startswith("+ ") else text


def write_lp_file(model: LpModel, path: str) -> str:
    """
    Exporta o modelo no formato texto LP (estilo CPLEX) para conferência
    com outros solvers.
    """
    names = _column_names(model)
    lines = [f"\\ Modelo {model.name}: {model.num_vars} variáveis", "Minimize"]
    objective = sparse.csr_matrix(model.c.reshape(1, -1))
    lines.append(" obj: " + _format_terms(objective, names))
    lines.append("Subject To")
    for i in range(model.num_eq):
        lines.append(f" eq{i}: {_format_terms(model.A_eq[i], names)} = {model.b_eq[i]:.12g}")
    for i in range(model.num_ub):
        lines.append(f" ub{i}: {_format_terms(model.A_ub[i], names)} <= {model.b_ub[i]:.12g}")
    lines.append("Bounds")
    for j in range(model.num_vars):
        lo, up = model.lower[j], model.upper[j]
        if lo == up:
            lines.append(f" {names[j]} = {lo:.12g}")
        elif np.isinf(up):
            lines.append(f" {names[j]} >= {lo:.12g}")
        else:
            lines.append(f" {lo:.12g} <= {names[j]} <= {up:.12g}")
    lines.append("End")

    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return path
