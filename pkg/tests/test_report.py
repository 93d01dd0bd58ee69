import pytest

from conftest import FIXTURES
from tmforge.report import (
    DeltaSummary,
    RunTable,
    best_worst_markers,
    delta_summary,
    load_run_table,
    relative_gain,
    render,
)


@pytest.fixture(scope="module")
def table4():
    return load_run_table(FIXTURES / "table4.csv")


class TestLoadRunTable:
    def test_fixture_rows(self, table4):
        assert table4.get("PT-BR", "baseline", "bleu") == 48.25
        assert table4.get("PT-BR", "baseline", "chrf") == 69.21
        assert table4.get("PT-BR", "baseline", "ter") == 39.36
        assert table4.get("PT-BR", "baseline", "comet") == 77.28
        assert table4.get("KO", "100k+", "bleu") == 45.80
        assert table4.get("KO", "100k+", "comet") == 84.30

    def test_languages_in_order(self, table4):
        assert table4.languages == ["PT-BR", "CS", "DE", "FI", "KO"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("language,size,bleu,chrf,ter,comet\n", encoding="utf-8")
        assert load_run_table(path).rows == {}

    def test_duplicate_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\nDE,1k,1,2,3,4\nDE,1k,1,2,3,4\n",
            encoding="utf-8")
        with pytest.raises(ValueError, match="duplicate"):
            load_run_table(path)

    def test_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\nDE,1k,250,2,3,4\n", encoding="utf-8")
        with pytest.raises(ValueError, match="outside"):
            load_run_table(path)

    def test_unknown_size_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\nDE,37k,1,2,3,4\n", encoding="utf-8")
        with pytest.raises(ValueError, match="size label"):
            load_run_table(path)

    def test_comet_optional(self, tmp_path):
        path = tmp_path / "nocomet.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\nDE,baseline,30,50,60,\n", encoding="utf-8")
        table = load_run_table(path)
        assert table.get("DE", "baseline", "comet") is None


class TestDeltaSummary:
    def test_aggregates_at_14_7k(self, table4):
        summary = delta_summary(table4, "14.7k")
        assert summary.absolute["bleu"] == pytest.approx(4.8, abs=0.05)
        assert summary.relative["bleu"] == pytest.approx(17.42, abs=0.05)
        assert summary.absolute["chrf"] == pytest.approx(7.1, abs=0.1)
        assert summary.absolute["comet"] == pytest.approx(16.9, abs=0.1)
        assert summary.absolute["ter"] == pytest.approx(9.0, abs=0.1)  # decrease

    def test_aggregates_at_100k(self, table4):
        summary = delta_summary(table4, "100k+")
        assert summary.absolute["bleu"] == pytest.approx(13.7, abs=0.1)
        assert summary.absolute["chrf"] == pytest.approx(12.7, abs=0.1)
        assert summary.absolute["comet"] == pytest.approx(25.0, abs=0.1)
        assert summary.absolute["ter"] == pytest.approx(15.5, abs=0.1)  # decrease

    def test_baseline_vs_itself_zero(self, table4):
        summary = delta_summary(table4, "baseline")
        for metric, value in summary.absolute.items():
            assert value == pytest.approx(0.0)

    def test_single_language_equal_scores(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\n"
            "DE,baseline,30,50,60,70\nDE,1k,30,50,60,70\n", encoding="utf-8")
        summary = delta_summary(load_run_table(path), "1k")
        assert all(v == pytest.approx(0.0) for v in summary.absolute.values())

    def test_missing_baseline_names_language(self, tmp_path):
        path = tmp_path / "nobase.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\nFI,1k,30,50,60,70\n", encoding="utf-8")
        with pytest.raises(ValueError, match="FI"):
            delta_summary(load_run_table(path), "1k")

    def test_ko_comet_relative_gain(self, table4):
        gain = relative_gain(table4, "KO", "100k+", "comet")
        # fixture arithmetic: (84.30 - 36.45) / 36.45 = 131.28%
        assert gain == pytest.approx(131.28, abs=0.01)


class TestBestWorstMarkers:
    def test_ptbr_bleu(self, table4):
        markers = best_worst_markers(table4)
        assert markers[("PT-BR", "bleu")]["best"] == ["100k+"]
        assert markers[("PT-BR", "bleu")]["worst"] == ["2k"]

    def test_ko_ter(self, table4):
        markers = best_worst_markers(table4)
        assert markers[("KO", "ter")]["best"] == ["100k+"]   # 44.73, min is best
        assert markers[("KO", "ter")]["worst"] == ["1k"]     # 83.37

    def test_gpt35_excluded(self, table4):
        markers = best_worst_markers(table4)
        # DE gpt35 has the top BLEU (42.41) but is comparison-only
        assert markers[("DE", "bleu")]["best"] == ["100k+"]

    def test_single_row_language(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text(
            "language,size,bleu,chrf,ter,comet\nDE,baseline,30,50,60,70\n", encoding="utf-8")
        markers = best_worst_markers(load_run_table(path))
        assert markers[("DE", "bleu")] == {"best": ["baseline"], "worst": ["baseline"]}

    def test_marker_extremality_property(self, table4):
        markers = best_worst_markers(table4)
        for (lang, metric), mark in markers.items():
            values = [
                table4.get(lang, size, metric)
                for size in table4.sizes_for(lang)
                if size != "gpt35" and table4.get(lang, size, metric) is not None
            ]
            best_value = table4.get(lang, mark["best"][0], metric)
            if metric == "ter":
                assert all(best_value <= v for v in values)
            else:
                assert all(best_value >= v for v in values)


class TestRender:
    def test_csv_round_trip(self, table4):
        text = render(table4, fmt="csv")
        import io

        path_like = io.StringIO(text)
        # round-trip through a temp file
        from pathlib import Path
        import tempfile

        with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False, encoding="utf-8") as fh:
            fh.write(text)
            name = fh.name
        reloaded = load_run_table(Path(name))
        assert reloaded.rows == table4.rows

    def test_markdown_values_match_fixture(self, table4):
        doc = render(table4, fmt="markdown")
        assert "| PT-BR | baseline | 48.25 | 69.21 | 39.36 | 77.28 |" in doc
        assert "**62.45**" in doc   # PT-BR best BLEU at 100k+
        assert "_46.04_" in doc     # PT-BR worst BLEU at 2k

    def test_empty_table_header_only(self):
        doc = render(RunTable(), fmt="markdown")
        assert doc.splitlines()[0].startswith("| Lang |")
        assert len(doc.splitlines()) == 2

    def test_deterministic(self, table4):
        assert render(table4) == render(table4)

    def test_summary_block(self, table4):
        summary = delta_summary(table4, "14.7k")
        doc = render(table4, [summary], fmt="markdown")
        assert "Deltas vs baseline at 14.7k" in doc

    def test_unknown_format(self, table4):
        with pytest.raises(ValueError):
            render(table4, fmt="pdf")
