"""
================================================================================
EV FLEET DR - Resposta à Demanda Automatizada para Frotas de PEVs
================================================================================

Este é o módulo principal (entry point) da linha de comando.

O agregador recebe um limite horário de carga para a frota inteira e precisa
atribuir, no momento em que cada veículo conecta, um cronograma de carga que
cubra as viagens do motorista sem estourar o limite.

ARQUITETURA DO SISTEMA:
-----------------------
O sistema funciona em etapas (pipeline), cada uma com um subcomando:

    1. synth:    gera perfis diários de treino e as séries do cenário (CSV)
    2. cluster:  agrupa os perfis de treino (k-means)      → clusters.json
    3. solve:    resolve o programa agrupado                → solution.json
    4. prices:   preços ajustados e razões primais          → books.json
    5. simulate: despacha frotas de teste com os artefatos  → comparison.csv
    6. compare:  todas as etapas + os quatro despachantes   → comparison.csv,
                 loads_<despachante>.csv, comparison.xlsx, manifest.json
    7. example-3hour: o cenário de dois veículos e três horas

    `simulate` nunca resolve o programa de novo: usa os artefatos JSON
    gravados em --out pelas etapas anteriores.

CÓDIGOS DE SAÍDA:
-----------------
    0  sucesso
    1  erro de entrada (arquivo, configuração, modelo, solver)
    2  falha de demanda com o despachante CAP (limite mal dimensionado)

Autor: Grande Mestre
Versão: 1.0
Licença: MIT
================================================================================
"""

# =============================================================================
# IMPORTS
# =============================================================================
import argparse
import os
import sys
from typing import List, Optional, Sequence

import pandas as pd
from colorama import Fore, init
from dotenv import load_dotenv

# Adiciona o diretório pai ao path para imports funcionarem
# Isso permite rodar tanto "python run.py" da raiz quanto "python main.py" de src/
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.agents.dispatchers import CAP, DISPATCHER_NAMES, LOWEST_COST, parse_dispatchers
from src.core.catalog import DefaultsCatalog
from src.core.clustering import (
    ClusterSet,
    kmeans,
    load_cluster_set,
    save_cluster_set,
    select_k,
    valuation_curve,
)
from src.core.config import ScenarioConfig, build_scenario, load_config, thread_count
from src.core.errors import ConfigError, EvDrError
from src.core.ingest import ProfileTable, load_profiles, synth_fleet, write_profiles, write_series
from src.core.lp import build_clp, load_solution, save_solution, solve, write_lp_file
from src.core.model import Scenario
from src.core.pricing import (
    compute_prices,
    compute_ratios,
    load_books,
    price_profile_frame,
    save_books,
)
from src.core.simulation import (
    TRAINING_STREAM,
    BatchResult,
    SimulationPlan,
    fit_cluster_set,
    prepare_plan,
    run_batch,
    run_three_hour_example,
)
from src.utils.exporter import ReportGenerator

# =============================================================================
# INICIALIZAÇÃO
# =============================================================================
init(autoreset=True)
load_dotenv()

# =============================================================================
# CONSTANTES DE CONFIGURAÇÃO
# =============================================================================

OUTPUT_DIR = "output_reports"

CLUSTERS_FILE = "clusters.json"
SOLUTION_FILE = "solution.json"
BOOKS_FILE = "books.json"
PROFILES_FILE = "profiles.csv"
VALUATION_FILE = "valuation.csv"
LP_FILE = "clp.lp"

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_DEMAND_FAILURE = 2


# =============================================================================
# FUNÇÕES AUXILIARES
# =============================================================================

def print_header(command: str) -> None:
    """Imprime o cabeçalho visual do sistema."""
    print(Fore.CYAN + "=" * 60)
    print(Fore.CYAN + f"🚀 EV FLEET DR - {command.upper()}")
    print(Fore.CYAN + "=" * 60 + "\n")


def print_catalog(catalog: DefaultsCatalog) -> None:
    """Resumo do catálogo de padrões usado na execução."""
    stats = catalog.summary()
    print(Fore.WHITE + f"📚 Catálogo v{stats['versao']}: {stats['total_arquetipos']} arquétipos, "
                       f"{stats['participacao_bev']:.0%} BEV, "
                       f"{stats['milhas_medias']:.1f} milhas/dia, "
                       f"spread da tarifa $ {stats['spread_tarifa']:.3f}/kWh\n")


def print_summary(batch: BatchResult) -> None:
    """Imprime a tabela de comparação (médias)."""
    summary = batch.summary()
    print("\n" + Fore.GREEN + "=" * 60)
    print(Fore.WHITE + f"📈 COMPARAÇÃO ({batch.run_count} execuções)")
    print(Fore.GREEN + "=" * 60)
    for _, row in summary.iterrows():
        print(Fore.CYAN + f"\n   {row['dispatcher']}:")
        print(Fore.WHITE + f"   • Aumento do pico: {row['peak_increase_abs']:.3f} kW "
                           f"({row['peak_increase_pct']:.3f}%)")
        print(Fore.WHITE + f"   • Energia da rede: {row['grid_energy']:.3f} MWh")
        print(Fore.WHITE + f"   • Energia da gasolina: {row['gasoline_energy']:.3f} MWh")
        print(Fore.WHITE + f"   • Custo total: $ {row['total_cost']:.2f} "
                           f"($ {row['cost_per_mile']:.4f}/milha)")
        print(Fore.WHITE + f"   • Falhas de demanda: {row['demand_failures']:.1f}")


class _Parser(argparse.ArgumentParser):
    """Erros de argumento saem com o código de erro de entrada."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(Fore.RED + f"❌ {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="evfleet-dr",
        description="Resposta à demanda para frotas de veículos elétricos com "
                    "preços ajustados por restrição.",
        epilog="Variável de ambiente EVDR_THREADS: threads das simulações em lote (padrão 1).",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="arquivo KEY=value do cenário (padrões do catálogo se omitido)")
    common.add_argument("--out", default=OUTPUT_DIR, help=f"diretório de saída (padrão: {OUTPUT_DIR})")
    common.add_argument("--alpha", type=float, help="fração do pico diário usada no limite de carga")
    common.add_argument("--fleet-size", type=int, help="veículos por execução")
    common.add_argument("--runs", type=int, help="execuções por despachante")
    common.add_argument("--seed", type=int, help="semente base")
    common.add_argument(
        "--dispatchers",
        help=f"lista separada por vírgulas ({', '.join(DISPATCHER_NAMES)})",
    )

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("synth", parents=[common], help="gera perfis de treino e séries do cenário")
    sub.add_parser("cluster", parents=[common], help="agrupa os perfis de treino")
    solve_cmd = sub.add_parser("solve", parents=[common], help="resolve o programa agrupado")
    solve_cmd.add_argument("--lp-file", action="store_true", help=f"grava também {LP_FILE}")
    sub.add_parser("prices", parents=[common], help="calcula preços ajustados e razões")
    sub.add_parser("simulate", parents=[common], help="despacha frotas com os artefatos gravados")
    sub.add_parser("compare", parents=[common], help="pipeline completo com os quatro despachantes")
    sub.add_parser("example-3hour", parents=[common], help="cenário de dois veículos e três horas")
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    """Arquivo de configuração com as opções da linha de comando por cima."""
    return load_config(args.config).with_overrides({
        "ALPHA": args.alpha,
        "FLEET_SIZE": args.fleet_size,
        "RUNS": args.runs,
        "SEED": args.seed,
    })


def artifact(out: str, filename: str, step: str) -> str:
    """Caminho de um artefato de etapa anterior (erro se não existir)."""
    path = os.path.join(out, filename)
    if not os.path.exists(path):
        raise ConfigError(f"{path} não encontrado; rode o subcomando '{step}' antes")
    return path


# =============================================================================
# ETAPAS DO PIPELINE
# =============================================================================

def training_profiles(config: ScenarioConfig, catalog: DefaultsCatalog) -> ProfileTable:
    """Perfis de treino: PROFILES_CSV ou frota sintética no fluxo de treino."""
    if config.path("PROFILES_CSV"):
        return load_profiles(config.path("PROFILES_CSV"))
    return synth_fleet(config.training_profiles, catalog.archetypes(), config.seed,
                       stream=TRAINING_STREAM, id_prefix="t")


def load_test_profiles(config: ScenarioConfig) -> Optional[ProfileTable]:
    path = config.path("TEST_PROFILES_CSV")
    return load_profiles(path) if path else None


def cluster_profiles(
    profiles: ProfileTable,
    config: ScenarioConfig,
    scenario: Scenario,
    exporter: Optional[ReportGenerator] = None,
) -> ClusterSet:
    """
    k-means com k da configuração ou escolhido pela curva de valoração.
    """
    k = config.clusters
    if k is None:
        k_max = min(config.k_max, len(profiles))
        curve = valuation_curve(profiles, range(config.k_min, k_max + 1),
                                config.valuation_runs, config.seed)
        k = select_k(curve, config.flatten_tol)
        print(Fore.CYAN + f"📉 Curva de valoração: k escolhido = {k}")
        if exporter is not None:
            exporter.salvar_tabela(pd.DataFrame(curve, columns=["k", "metric"]), VALUATION_FILE)

    cluster_set = kmeans(profiles, k, restarts=config.kmeans_restarts, seed=config.seed,
                         constants=scenario.constants, fleet_size=scenario.fleet_size)
    print(Fore.GREEN + f"✅ {cluster_set.k} clusters a partir de {len(profiles)} perfis")
    return cluster_set


def load_plan(config: ScenarioConfig, scenario: Scenario, out: str, catalog: DefaultsCatalog) -> SimulationPlan:
    """Monta o plano a partir dos artefatos gravados (sem resolver nada)."""
    cluster_set = fit_cluster_set(load_cluster_set(artifact(out, CLUSTERS_FILE, "cluster")), scenario)
    book, ratios = load_books(artifact(out, BOOKS_FILE, "prices"))
    if book.k != cluster_set.k or book.horizon < scenario.horizon:
        raise ConfigError(
            f"{BOOKS_FILE} ({book.k} clusters, {book.horizon} horas) não corresponde ao "
            f"cenário ({cluster_set.k} clusters, {scenario.horizon} horas); rode 'prices' de novo"
        )
    profiles = load_test_profiles(config)
    archetypes = catalog.archetypes() if profiles is None else ()
    return SimulationPlan(scenario, cluster_set, None, book, ratios, tuple(archetypes), profiles)


def simulate(
    plan: SimulationPlan,
    config: ScenarioConfig,
    dispatchers: Sequence[str],
    exporter: ReportGenerator,
    command: str,
) -> int:
    """Roda o lote, grava os arquivos e decide o código de saída."""
    batch = run_batch(plan, dispatchers, runs=config.runs, seed=config.seed,
                      threads=thread_count(), verbose=True)
    files = exporter.gerar_csv(batch)
    files.append(exporter.gerar_excel(batch))

    files.append(exporter.gerar_eventos(batch.events()))
    exporter.gerar_manifesto(command, config, config.seed, files,
                             {"dispatchers": list(batch.dispatchers), "runs": config.runs})
    print_summary(batch)

    if CAP in batch.dispatchers and batch.demand_failures(CAP) > 0:
        print(Fore.RED + f"\n🚨 {batch.demand_failures(CAP)} falha(s) de demanda com o despachante CAP")
        print(Fore.YELLOW + "   O limite de carga está apertado demais para a frota.")
        return EXIT_DEMAND_FAILURE
    print(Fore.GREEN + "\n✅ Simulação concluída.")
    return EXIT_OK


# =============================================================================
# SUBCOMANDOS
# =============================================================================

def cmd_synth(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    scenario = build_scenario(config, catalog)
    exporter = ReportGenerator(args.out)
    profiles = training_profiles(config, catalog)
    files = [
        write_profiles(profiles, os.path.join(args.out, PROFILES_FILE), include_total=True),
        write_series(scenario.base_load, os.path.join(args.out, "load.csv")),
        write_series(scenario.elec_price, os.path.join(args.out, "price.csv")),
        write_series(scenario.gas_price, os.path.join(args.out, "gas_price.csv")),
        write_series(scenario.charge_cap, os.path.join(args.out, "cap.csv")),
    ]
    print(Fore.GREEN + f"✅ {len(profiles)} perfis e 4 séries gravados em {args.out}")
    exporter.gerar_manifesto("synth", config, config.seed, files)
    return EXIT_OK


def cmd_cluster(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    scenario = build_scenario(config, catalog)
    exporter = ReportGenerator(args.out)
    cluster_set = cluster_profiles(training_profiles(config, catalog), config, scenario, exporter)
    path = save_cluster_set(cluster_set, os.path.join(args.out, CLUSTERS_FILE))
    exporter.gerar_manifesto("cluster", config, config.seed, [path], {"k": cluster_set.k})
    return EXIT_OK


def cmd_solve(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    scenario = build_scenario(config, catalog)
    exporter = ReportGenerator(args.out)
    cluster_set = fit_cluster_set(load_cluster_set(artifact(args.out, CLUSTERS_FILE, "cluster")), scenario)
    model = build_clp(cluster_set, scenario)
    files = []
    if args.lp_file:
        files.append(write_lp_file(model, os.path.join(args.out, LP_FILE)))

    solution = solve(model, verbose=True).require_optimal()
    files.append(save_solution(solution, os.path.join(args.out, SOLUTION_FILE)))
    exporter.gerar_manifesto("solve", config, config.seed, files,
                             {"objective": solution.objective,
                              "certificate": solution.certificate.to_dict()})
    return EXIT_OK


def cmd_prices(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    scenario = build_scenario(config, catalog)
    exporter = ReportGenerator(args.out)
    cluster_set = fit_cluster_set(load_cluster_set(artifact(args.out, CLUSTERS_FILE, "cluster")), scenario)
    solution = load_solution(artifact(args.out, SOLUTION_FILE, "solve"), build_clp(cluster_set, scenario))

    book = compute_prices(solution, scenario, cluster_set)
    ratios = compute_ratios(solution)
    files = [
        save_books(book, ratios, os.path.join(args.out, BOOKS_FILE)),
        exporter.gerar_perfis_preco(price_profile_frame(
            book, scenario, cluster_set.profiles_for_horizon(scenario.horizon))),
    ]
    print(Fore.GREEN + f"✅ Preços ajustados de {book.k} clusters")
    exporter.gerar_manifesto("prices", config, config.seed, files)
    return EXIT_OK


def cmd_simulate(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    scenario = build_scenario(config, catalog)
    plan = load_plan(config, scenario, args.out, catalog)
    dispatchers = parse_dispatchers(args.dispatchers.split(",")) if args.dispatchers else [CAP]
    return simulate(plan, config, dispatchers, ReportGenerator(args.out), "simulate")


def cmd_compare(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    scenario = build_scenario(config, catalog)
    exporter = ReportGenerator(args.out)
    dispatchers = (parse_dispatchers(args.dispatchers.split(","))
                   if args.dispatchers else list(DISPATCHER_NAMES))

    cluster_set = cluster_profiles(training_profiles(config, catalog), config, scenario, exporter)
    save_cluster_set(cluster_set, os.path.join(args.out, CLUSTERS_FILE))

    profiles = load_test_profiles(config)
    plan = prepare_plan(scenario, cluster_set,
                        archetypes=catalog.archetypes() if profiles is None else (),
                        test_profiles=profiles, verbose=True)
    save_solution(plan.solution, os.path.join(args.out, SOLUTION_FILE))
    save_books(plan.book, plan.ratios, os.path.join(args.out, BOOKS_FILE))
    exporter.gerar_perfis_preco(price_profile_frame(
        plan.book, scenario, plan.cluster_set.profiles_for_horizon(scenario.horizon)))

    return simulate(plan, config, dispatchers, exporter, "compare")


def cmd_example(config: ScenarioConfig, args, catalog: DefaultsCatalog) -> int:
    outcome = run_three_hour_example()
    prices = outcome.scenario.elec_price.to_list()
    print(Fore.WHITE + f"   Preços: {prices}  Limite por hora: {outcome.scenario.charge_cap.to_list()}")
    print(Fore.WHITE + "   Veículo 1 dirige na hora 2, veículo 2 dirige na hora 1; baterias vazias.\n")

    print(Fore.CYAN + "📋 Menor preço, com limite de carga:")
    for schedule in outcome.lowest_cost:
        _print_example_schedule(schedule)

    print(Fore.CYAN + f"\n📋 Preços ajustados por restrição (ótimo agrupado $ {outcome.clp_objective:.4f}):")
    for i in range(outcome.book.k):
        values = ", ".join(f"{v:.3f}" for v in outcome.book.d[i])
        print(Fore.WHITE + f"   d_{i + 1} = [{values}]")
    for schedule in outcome.cap:
        _print_example_schedule(schedule)

    # O exemplo não sorteia nada e não lê a configuração: semente nula
    scenario = outcome.scenario
    ReportGenerator(args.out).gerar_manifesto("example-3hour", extra={
        "dispatchers": [LOWEST_COST, CAP],
        "scenario": {
            "horizon": scenario.horizon,
            "elec_price": scenario.elec_price.to_list(),
            "charge_cap": scenario.charge_cap.to_list(),
            "vehicles": [vehicle.id for vehicle in outcome.vehicles],
        },
        "clp_objective": outcome.clp_objective,
    })

    failures = [s.vehicle_id for s in outcome.cap if s.demand_failure]
    if failures:
        print(Fore.RED + f"\n🚨 CAP não atendeu: {', '.join(failures)}")
        return EXIT_DEMAND_FAILURE
    print(Fore.GREEN + "\n✅ CAP atendeu os dois veículos.")
    return EXIT_OK


def _print_example_schedule(schedule) -> None:
    charge = ", ".join(f"{v:.3f}" for v in schedule.charge.values)
    if schedule.demand_failure:
        print(Fore.RED + f"   {schedule.vehicle_id}: carga [{charge}] ❌ faltaram "
                         f"{schedule.shortfall.total:.3f} kWh")
    else:
        print(Fore.GREEN + f"   {schedule.vehicle_id}: carga [{charge}] ✅")


COMMANDS = {
    "synth": cmd_synth,
    "cluster": cmd_cluster,
    "solve": cmd_solve,
    "prices": cmd_prices,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "example-3hour": cmd_example,
}


# =============================================================================
# FUNÇÃO PRINCIPAL
# =============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    """
    Executa um subcomando e devolve o código de saída.
    """
    args = build_parser().parse_args(argv)
    print_header(args.command)
    try:
        config = resolve_config(args)
        catalog = DefaultsCatalog()
        print_catalog(catalog)
        return COMMANDS[args.command](config, args, catalog)
    except EvDrError as e:
        print(Fore.RED + f"❌ {e}")
        return EXIT_INPUT_ERROR


# =============================================================================
# PONTO DE ENTRADA DO PROGRAMA
# =============================================================================

if __name__ == "__main__":
    sys.exit(main())
