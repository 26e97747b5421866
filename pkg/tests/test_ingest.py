"""
================================================================================
TESTES UNITÁRIOS - Leitura de dados e frota sintética (ingest.py)
================================================================================

Execute com: pytest tests/ -v
"""

import os
import sys

import numpy as np
import pandas as pd
import pytest

# Adiciona o diretório src ao path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core.catalog import DefaultsCatalog
from src.core.errors import ConfigError, InputDataError, SeriesLengthError
from src.core.ingest import (
    Archetype,
    ProfileTable,
    implied_bev_share,
    load_profiles,
    load_series,
    synth_fleet,
    write_profiles,
    write_series,
)
from src.core.model import HourlySeries, Unit, VehicleKind

HEADER = "id," + ",".join(f"h{h}" for h in range(24))


def write_text(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestLoadProfiles:
    """Testes do leitor de perfis."""

    def test_single_zero_row(self, tmp_path):
        path = write_text(tmp_path / "p.csv", [HEADER, "v1," + ",".join(["0"] * 24)])
        table = load_profiles(path)
        assert len(table) == 1
        assert table.ids == ("v1",)
        assert table.miles.sum() == 0.0

    def test_short_row_names_line(self, tmp_path):
        """Linha com 23 horas gera erro com o número da linha."""
        path = write_text(tmp_path / "p.csv", [
            HEADER,
            "v1," + ",".join(["0"] * 24),
            "v2," + ",".join(["0"] * 23),
        ])
        with pytest.raises(InputDataError) as excinfo:
            load_profiles(path)
        assert excinfo.value.row == 3
        assert "linha 3" in str(excinfo.value)

    def test_negative_miles_rejected(self, tmp_path):
        values = ["0"] * 24
        values[5] = "-1"
        path = write_text(tmp_path / "p.csv", [HEADER, "v1," + ",".join(values)])
        with pytest.raises(InputDataError) as excinfo:
            load_profiles(path)
        assert excinfo.value.row == 2

    def test_non_numeric_rejected(self, tmp_path):
        values = ["0"] * 24
        values[0] = "abc"
        path = write_text(tmp_path / "p.csv", [HEADER, "v1," + ",".join(values)])
        with pytest.raises(InputDataError):
            load_profiles(path)

    def test_empty_file(self, tmp_path):
        path = write_text(tmp_path / "p.csv", [""])
        with pytest.raises(InputDataError):
            load_profiles(path)

    def test_header_only(self, tmp_path):
        path = write_text(tmp_path / "p.csv", [HEADER])
        with pytest.raises(InputDataError):
            load_profiles(path)

    def test_duplicate_ids(self, tmp_path):
        row = ",".join(["0"] * 24)
        path = write_text(tmp_path / "p.csv", [HEADER, "v1," + row, "v1," + row])
        with pytest.raises(InputDataError):
            load_profiles(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputDataError):
            load_profiles(str(tmp_path / "nada.csv"))

    def test_checksum_column_verified(self, tmp_path):
        """Arquivo de 400 perfis com coluna total calculada por fora."""
        rng = np.random.default_rng(42)
        miles = np.round(rng.uniform(0, 5, size=(400, 24)), 3)
        frame = pd.DataFrame(miles, columns=[f"h{h}" for h in range(24)])
        frame.insert(0, "id", [f"p{i}" for i in range(400)])
        frame["total"] = miles.sum(axis=1)
        path = tmp_path / "p.csv"
        frame.to_csv(path, index=False)

        table = load_profiles(str(path))
        assert len(table) == 400
        np.testing.assert_allclose(table.totals, miles.sum(axis=1), rtol=1e-9)

    def test_checksum_mismatch(self, tmp_path):
        values = ["1"] * 24
        path = write_text(tmp_path / "p.csv", [HEADER + ",total", "v1," + ",".join(values) + ",25"])
        with pytest.raises(InputDataError) as excinfo:
            load_profiles(path)
        assert excinfo.value.row == 2

    def test_long_row_names_line(self, tmp_path):
        """Campo a mais vira InputDataError com a linha, não erro do pandas."""
        path = write_text(tmp_path / "p.csv", [
            HEADER,
            "v1," + ",".join(["0"] * 24),
            "v2," + ",".join(["0"] * 25),
        ])
        with pytest.raises(InputDataError) as excinfo:
            load_profiles(path)
        assert excinfo.value.row == 3
        assert "esperadas 25 colunas, encontradas 26" in str(excinfo.value)

    def test_non_numeric_names_line_and_column(self, tmp_path):
        values = ["0"] * 24
        values[7] = "x1"
        path = write_text(tmp_path / "p.csv", [
            HEADER,
            "v1," + ",".join(["0"] * 24),
            "v2," + ",".join(values),
        ])
        with pytest.raises(InputDataError) as excinfo:
            load_profiles(path)
        assert excinfo.value.row == 3
        assert "valor não numérico 'x1' na coluna h7" in str(excinfo.value)

    def test_blank_lines_keep_numbering(self, tmp_path):
        """Linhas em branco são ignoradas sem deslocar a numeração."""
        values = ["0"] * 24
        values[2] = "-3"
        path = write_text(tmp_path / "p.csv", [
            HEADER,
            "v1," + ",".join(["1"] * 24),
            "",
            "v2," + ",".join(values),
        ])
        with pytest.raises(InputDataError) as excinfo:
            load_profiles(path)
        assert excinfo.value.row == 4

    def test_blank_lines_skipped(self, tmp_path):
        path = write_text(tmp_path / "p.csv", [
            HEADER, "", "v1," + ",".join(["1"] * 24), "", "v2," + ",".join(["2"] * 24),
        ])
        table = load_profiles(path)
        assert table.ids == ("v1", "v2")
        assert table.totals.tolist() == [24.0, 48.0]

    def test_ids_stay_text(self, tmp_path):
        """Ids numéricos continuam texto (zeros à esquerda preservados)."""
        path = write_text(tmp_path / "p.csv", [HEADER, "007," + ",".join(["0"] * 24)])
        assert load_profiles(path).ids == ("007",)

    def test_write_then_load(self, tmp_path):
        """O arquivo gravado é lido de volta com os mesmos valores."""
        table = synth_fleet(20, DefaultsCatalog().archetypes(), seed=5)
        path = write_profiles(table, str(tmp_path / "out" / "p.csv"), include_total=True)
        loaded = load_profiles(path)
        assert loaded.ids == table.ids
        np.testing.assert_allclose(loaded.miles, table.miles, rtol=1e-9)


class TestLoadSeries:
    """Testes do leitor de séries horárias."""

    def series_file(self, tmp_path, values, name="s.csv"):
        lines = ["hour,value"] + [f"{h},{v}" for h, v in enumerate(values)]
        return write_text(tmp_path / name, lines)

    def test_exact_length(self, tmp_path):
        path = self.series_file(tmp_path, [1.0] * 120)
        series = load_series(path, 120, Unit.KW)
        assert len(series) == 120
        assert series.unit is Unit.KW

    def test_length_mismatch(self, tmp_path):
        path = self.series_file(tmp_path, [1.0] * 119)
        with pytest.raises(SeriesLengthError):
            load_series(path, 120, Unit.KW)

    def test_negative_price_only(self, tmp_path):
        """Preço negativo é aceito; carga negativa não."""
        path = self.series_file(tmp_path, [0.1, -0.01, 0.2])
        prices = load_series(path, 3, Unit.USD_PER_KWH)
        assert prices.values[1] == -0.01
        with pytest.raises(InputDataError):
            load_series(path, 3, Unit.KW)

    def test_hours_out_of_order(self, tmp_path):
        path = write_text(tmp_path / "s.csv", ["hour,value", "0,1", "2,1", "1,1"])
        with pytest.raises(InputDataError) as excinfo:
            load_series(path, 3, Unit.KW)
        assert excinfo.value.row == 3

    def test_bad_hour_names_line(self, tmp_path):
        path = write_text(tmp_path / "s.csv", ["hour,value", "0,1", "um,1"])
        with pytest.raises(InputDataError) as excinfo:
            load_series(path, 2, Unit.KW)
        assert excinfo.value.row == 3
        assert "hora inválida 'um'" in str(excinfo.value)

    def test_non_numeric_value_names_line(self, tmp_path):
        path = write_text(tmp_path / "s.csv", ["hour,value", "0,1", "1,abc"])
        with pytest.raises(InputDataError) as excinfo:
            load_series(path, 2, Unit.USD_PER_KWH)
        assert excinfo.value.row == 3
        assert "coluna value" in str(excinfo.value)

    def test_bad_header(self, tmp_path):
        path = write_text(tmp_path / "s.csv", ["h,v", "0,1"])
        with pytest.raises(InputDataError):
            load_series(path, 1, Unit.KW)

    def test_write_then_load(self, tmp_path):
        series = HourlySeries([0.1, 0.25, 0.3], Unit.USD_PER_KWH)
        path = write_series(series, str(tmp_path / "s.csv"))
        np.testing.assert_allclose(load_series(path, 3, Unit.USD_PER_KWH).values, series.values)


class TestSynthFleet:
    """Testes do gerador de frotas sintéticas."""

    def setup_method(self):
        self.archetypes = DefaultsCatalog().archetypes()

    def test_zero_mile_archetype(self):
        idle = [Archetype("parado", 1.0, ())]
        table = synth_fleet(1, idle, seed=0)
        assert len(table) == 1
        assert table.miles.sum() == 0.0

    def test_deterministic(self):
        a = synth_fleet(50, self.archetypes, seed=9)
        b = synth_fleet(50, self.archetypes, seed=9)
        assert a.ids == b.ids
        np.testing.assert_array_equal(a.miles, b.miles)

    def test_independent_of_count(self):
        """O perfil i depende só da semente e de i."""
        small = synth_fleet(3, self.archetypes, seed=4)
        large = synth_fleet(8, self.archetypes, seed=4)
        np.testing.assert_array_equal(small.miles, large.miles[:3])

    def test_streams_differ(self):
        train = synth_fleet(20, self.archetypes, seed=4, stream=0)
        test = synth_fleet(20, self.archetypes, seed=4, stream=1)
        assert not np.array_equal(train.miles, test.miles)

    def test_both_kinds_present(self):
        kinds = set(synth_fleet(200, self.archetypes, seed=1).kinds())
        assert kinds == {VehicleKind.BEV, VehicleKind.PHEV}

    def test_bev_share_matches_archetypes(self):
        """Participação de BEVs a ±5 pontos percentuais da esperada."""
        table = synth_fleet(10000, self.archetypes, seed=2011)
        share = np.mean([kind is VehicleKind.BEV for kind in table.kinds()])
        assert abs(share - implied_bev_share(self.archetypes)) < 0.05

    def test_empty_archetypes(self):
        with pytest.raises(ConfigError):
            synth_fleet(5, [], seed=0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            synth_fleet(5, [Archetype("a", 0.5, ((8, 10.0),))], seed=0)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            synth_fleet(0, self.archetypes, seed=0)


class TestProfileTable:
    """Testes da tabela de perfis."""

    def test_select_keeps_ids(self):
        table = ProfileTable.from_rows([("a", [0] * 24), ("b", [1] * 24), ("c", [2] * 24)])
        subset = table.select([2, 0])
        assert subset.ids == ("c", "a")
        assert subset.miles[0, 0] == 2.0

    def test_wrong_shape(self):
        with pytest.raises(ValueError):
            ProfileTable(("a", "b"), np.zeros((1, 24)))


# =============================================================================
# EXECUÇÃO DIRETA
# =============================================================================

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
