"""
================================================================================
TESTES DE INTEGRAÇÃO - Linha de comando (main.py)
================================================================================

Execute com: pytest tests/ -v
"""

import json
import os
import sys

import pandas as pd
import pytest

# Adiciona o diretório src ao path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.main import (
    BOOKS_FILE,
    CLUSTERS_FILE,
    EXIT_DEMAND_FAILURE,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    LP_FILE,
    SOLUTION_FILE,
    build_parser,
    main,
)
from src.utils.exporter import COMPARISON_FILE, EVENTS_FILE, EXCEL_FILE, MANIFEST_FILE

TINY_CONFIG = """\
# cenário mínimo para os testes
HORIZON_HOURS=48
ALPHA=1.5
FLEET_SIZE=30
TRAINING_PROFILES=40
CLUSTERS=4
KMEANS_RESTARTS=1
RUNS=2
SEED=3
PLUG_IN_WINDOW_HOURS=6
"""


def tiny_config(tmp_path):
    path = tmp_path / "tiny.env"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return str(path)


def read_manifest(folder):
    with open(os.path.join(folder, MANIFEST_FILE), encoding="utf-8") as f:
        return json.load(f)


class TestParser:
    """Testes dos argumentos."""

    def test_common_options(self):
        args = build_parser().parse_args(["simulate", "--alpha", "0.75", "--runs", "5", "--out", "x"])
        assert args.command == "simulate"
        assert args.alpha == 0.75
        assert args.runs == 5
        assert args.out == "x"

    def test_unknown_flag_exits_with_input_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["compare", "--nao-existe"])
        assert excinfo.value.code == EXIT_INPUT_ERROR

    def test_missing_command(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == EXIT_INPUT_ERROR


class TestCommands:
    """Testes dos subcomandos."""

    def test_example_three_hour(self, tmp_path):
        """O exemplo grava manifesto com cenário e despachantes."""
        out = tmp_path / "exemplo"
        assert main(["example-3hour", "--out", str(out)]) == EXIT_OK

        manifest_path = out / MANIFEST_FILE
        assert manifest_path.exists()
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert manifest["command"] == "example-3hour"
        assert manifest["dispatchers"] == ["lowest_cost", "cap"]
        assert manifest["seed"] is None
        assert manifest["scenario"]["horizon"] == 3
        assert manifest["scenario"]["elec_price"] == pytest.approx([0.10, 0.12, 0.14])
        assert manifest["clp_objective"] == pytest.approx(0.066, abs=1e-9)

    def test_banner_shows_catalog(self, tmp_path, capsys):
        main(["example-3hour", "--out", str(tmp_path)])
        assert "Catálogo v" in capsys.readouterr().out

    def test_simulate_without_artifacts(self, tmp_path):
        code = main(["simulate", "--config", tiny_config(tmp_path), "--out", str(tmp_path / "vazio")])
        assert code == EXIT_INPUT_ERROR

    def test_unknown_dispatcher(self, tmp_path):
        code = main(["compare", "--config", tiny_config(tmp_path), "--out", str(tmp_path / "out"),
                     "--dispatchers", "cap,fifo"])
        assert code == EXIT_INPUT_ERROR

    def test_missing_config_file(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "nada.env")]) == EXIT_INPUT_ERROR

    def test_staged_pipeline(self, tmp_path):
        """synth → cluster → solve → prices → simulate no mesmo diretório."""
        config = tiny_config(tmp_path)
        out = str(tmp_path / "out")
        common = ["--config", config, "--out", out]

        assert main(["synth", *common]) == EXIT_OK
        assert os.path.exists(os.path.join(out, "profiles.csv"))
        assert os.path.exists(os.path.join(out, "cap.csv"))

        assert main(["cluster", *common]) == EXIT_OK
        assert read_manifest(out)["k"] == 4

        assert main(["solve", *common, "--lp-file"]) == EXIT_OK
        assert os.path.exists(os.path.join(out, LP_FILE))
        assert read_manifest(out)["objective"] > 0

        assert main(["prices", *common]) == EXIT_OK
        assert os.path.exists(os.path.join(out, BOOKS_FILE))

        code = main(["simulate", *common, "--dispatchers", "cap,standard"])
        assert code in (EXIT_OK, EXIT_DEMAND_FAILURE)
        summary = pd.read_csv(os.path.join(out, COMPARISON_FILE))
        assert summary["dispatcher"].tolist() == ["cap", "standard"]
        assert summary["runs"].tolist() == [2, 2]
        manifest = read_manifest(out)
        assert manifest["command"] == "simulate"
        assert COMPARISON_FILE in manifest["files"]

    def test_simulate_reuses_artifacts_with_new_seed(self, tmp_path):
        config = tiny_config(tmp_path)
        out = str(tmp_path / "out")
        common = ["--config", config, "--out", out]
        for command in ("cluster", "solve", "prices"):
            assert main([command, *common]) == EXIT_OK

        code = main(["simulate", *common, "--seed", "99", "--runs", "1"])
        assert code in (EXIT_OK, EXIT_DEMAND_FAILURE)
        assert read_manifest(out)["seed"] == 99

    def test_books_from_other_horizon_rejected(self, tmp_path):
        """books.json de outro horizonte não serve para o cenário atual."""
        config = tiny_config(tmp_path)
        out = str(tmp_path / "out")
        common = ["--config", config, "--out", out]
        for command in ("cluster", "solve", "prices"):
            assert main([command, *common]) == EXIT_OK

        other = tmp_path / "longo.env"
        other.write_text(TINY_CONFIG.replace("HORIZON_HOURS=48", "HORIZON_HOURS=72"), encoding="utf-8")
        assert main(["simulate", "--config", str(other), "--out", out]) == EXIT_INPUT_ERROR

    def test_compare_writes_everything(self, tmp_path):
        out = str(tmp_path / "out")
        code = main(["compare", "--config", tiny_config(tmp_path), "--out", out])
        assert code in (EXIT_OK, EXIT_DEMAND_FAILURE)
        for name in (CLUSTERS_FILE, SOLUTION_FILE, BOOKS_FILE, COMPARISON_FILE, EXCEL_FILE,
                     EVENTS_FILE, "price_profiles.csv", "loads_cap.csv", "loads_primal_pct.csv"):
            assert os.path.exists(os.path.join(out, name)), name

        summary = pd.read_csv(os.path.join(out, COMPARISON_FILE))
        assert summary["dispatcher"].tolist() == ["cap", "standard", "lowest_cost", "primal_pct"]
        cap = summary.set_index("dispatcher").loc["cap"]
        assert cap["peak_increase_abs"] >= 0
        assert cap["cap_overrun"] == 0

        with open(os.path.join(out, EVENTS_FILE), encoding="utf-8") as f:
            first = json.loads(f.readline())
        assert first["event"] == "arrival"
        assert first["run"] == 0


# =============================================================================
# EXECUÇÃO DIRETA
# =============================================================================

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
