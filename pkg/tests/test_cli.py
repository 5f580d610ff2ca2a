"""
Command-line tests: in-process calls of main(argv) with temporary output
directories; every emitted CSV is checked against its schema.
"""

import json

import pytest

from src.config import get_settings
from src.main import EXIT_CAP, EXIT_OK, EXIT_USAGE, main
from src.services.artifacts import CSV_SCHEMAS, MANIFEST_NAME, load_manifest, read_csv


def _stdout_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


class TestTable1Command:

    def test_prints_table(self, capsys):
        assert main(["table1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "2.41" in out
        assert len(out.strip().splitlines()) == 10

    def test_csv_schema(self, tmp_path):
        target = tmp_path / "out.csv"
        assert main(["table1", "--csv", str(target)]) == EXIT_OK
        rows = read_csv(target, "table1")
        assert len(rows) == 9
        assert target.read_text().splitlines()[0] == "case,p,g_target,ratio_closed,ratio_paper"
        assert (tmp_path / f"out.{MANIFEST_NAME}").is_file()


class TestAnalyticCommand:

    def test_forward(self, capsys):
        assert main(["analytic", "--p", "0.25", "--g", "1.0"]) == EXIT_OK
        assert _stdout_json(capsys)["ratio"] == pytest.approx(2.410, abs=1e-3)

    def test_inverse(self, capsys):
        assert main(["analytic", "--p", "0.25", "--ratio", "1.0"]) == EXIT_OK
        assert _stdout_json(capsys)["g"] == pytest.approx(0.75, abs=1e-9)

    def test_stop_at_start(self, capsys):
        assert main(["analytic", "--p", "0.5", "--g", "0.5"]) == EXIT_OK
        assert _stdout_json(capsys)["ratio"] == pytest.approx(1.0, abs=1e-12)

    def test_unsatisfiable_ratio(self, capsys):
        assert main(["analytic", "--p", "0.25", "--ratio", "100"]) == EXIT_USAGE
        assert "unsatisfiable" in capsys.readouterr().err

    def test_direction_required(self):
        assert main(["analytic", "--p", "0.25"]) == EXIT_USAGE

    def test_directions_exclusive(self):
        assert main(["analytic", "--p", "0.25", "--g", "1.0", "--ratio", "1.0"]) == EXIT_USAGE


class TestRunCommand:

    def test_writes_results_and_manifest(self, tmp_path, capsys):
        assert main(["run", "--p", "0.25", "--trials", "200", "--seed", "7", "--out", str(tmp_path)]) == EXIT_OK
        results = json.loads((tmp_path / "results.json").read_text())
        assert results["trials"] == 200
        manifest = load_manifest(tmp_path / MANIFEST_NAME)
        assert manifest.command == "run"
        assert manifest.seed == 7
        assert "success_rate=" in capsys.readouterr().out

    def test_rerun_is_byte_identical(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        argv = ["run", "--p", "0.25", "--trials", "1000", "--seed", "7"]
        assert main(argv + ["--out", str(first)]) == EXIT_OK
        assert main(argv + ["--out", str(second), "--workers", "2"]) == EXIT_OK
        assert (first / "results.json").read_bytes() == (second / "results.json").read_bytes()

    def test_modes_agree(self, tmp_path):
        full, ideal = tmp_path / "full", tmp_path / "ideal"
        assert main(["run", "--n", "8", "--m", "1", "--mode", "full", "--trials", "30",
                     "--seed", "3", "--out", str(full)]) == EXIT_OK
        assert main(["run", "--p", "0.00390625", "--mode", "ideal", "--trials", "30",
                     "--seed", "3", "--out", str(ideal)]) == EXIT_OK
        full_stats = json.loads((full / "results.json").read_text())
        ideal_stats = json.loads((ideal / "results.json").read_text())
        assert full_stats["stop_histogram"] == ideal_stats["stop_histogram"]
        assert full_stats["successes"] == ideal_stats["successes"]

    def test_all_marked(self, tmp_path):
        assert main(["run", "--p", "1.0", "--trials", "20", "--out", str(tmp_path)]) == EXIT_OK
        assert json.loads((tmp_path / "results.json").read_text())["success_rate"] == 1.0

    def test_canonical(self, tmp_path):
        assert main(["run", "--p", "0.25", "--algorithm", "canonical", "--trials", "20",
                     "--out", str(tmp_path)]) == EXIT_OK
        assert json.loads((tmp_path / "results.json").read_text())["mean_queries"] == 1.0

    def test_problem_required(self, tmp_path):
        assert main(["run", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_invalid_eta(self, tmp_path):
        assert main(["run", "--p", "0.25", "--eta", "0.9", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_statevector_cap(self, tmp_path):
        assert main(["run", "--n", "30", "--mode", "full", "--out", str(tmp_path)]) == EXIT_CAP

    def test_config_file_defaults(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("# run defaults\ntrials = 25\nmeasure-after-rotation = true\nburn_in=0\n")
        out = tmp_path / "out"
        assert main(["run", "--config", str(config), "--p", "0.25", "--out", str(out)]) == EXIT_OK
        parameters = load_manifest(out / MANIFEST_NAME).parameters
        assert parameters["trials"] == 25
        assert parameters["measure_after_rotation"] is True
        assert parameters["burn_in"] == 0

    def test_flags_override_config_file(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("trials=25\n")
        out = tmp_path / "out"
        assert main(["run", "--config", str(config), "--p", "0.25", "--trials", "30",
                     "--out", str(out)]) == EXIT_OK
        assert load_manifest(out / MANIFEST_NAME).parameters["trials"] == 30

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.conf"), "--p", "0.25"]) == EXIT_USAGE


class TestGridCommands:

    def test_scaling(self, tmp_path, capsys):
        assert main(["scaling", "--nmin", "10", "--nmax", "20", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "scaling.csv", "scaling")
        assert len(rows) == 11
        assert float(rows[-1]["ratio"]) == pytest.approx(2.0, abs=0.1)
        assert "slope=" in capsys.readouterr().out

    def test_scaling_degenerate(self, tmp_path):
        assert main(["scaling", "--nmin", "10", "--nmax", "11", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_expectation_default_grid(self, tmp_path):
        assert main(["expectation", "--grid", "default", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "expectation.csv", "expectation")
        assert len(rows) == 9
        assert all(float(row["g_at_stop"]) >= 0.5 for row in rows)

    def test_oracle_first_sample(self, tmp_path):
        assert main(["oracle", "--p", "0.5", "--burn-in", "0", "--horizon", "1",
                     "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "oracle.csv", "oracle")
        assert rows == [{"r": "0", "prob_stop": "0.5", "g_at_stop": "0.5"}]

    def test_oracle_horizon_cap(self, tmp_path):
        assert main(["oracle", "--p", "0.5", "--horizon", "20000", "--out", str(tmp_path)]) == EXIT_CAP

    def test_sweep(self, tmp_path):
        assert main(["sweep", "--p-values", "0.5,0.25", "--trials", "50", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "sweep.csv", "sweep")
        assert [float(row["p"]) for row in rows] == [0.25, 0.5]

    def test_empty_sweep(self, tmp_path):
        assert main(["sweep", "--p-values", "", "--out", str(tmp_path)]) == EXIT_OK
        assert read_csv(tmp_path / "sweep.csv", "sweep") == []

    def test_diagnose(self, tmp_path, capsys):
        assert main(["diagnose", "--n", "5", "--trials", "50", "--out", str(tmp_path)]) == EXIT_OK
        comparison = json.loads((tmp_path / "diagnose.json").read_text())
        assert set(comparison["stats"]) == {"ideal", "dephased", "full"}
        assert "divergence" in capsys.readouterr().out

    def test_schemas_registered(self):
        assert CSV_SCHEMAS["sweep"] == ("p", "trials", "success_rate", "ci_lo", "ci_hi",
                                        "mean_queries", "mean_restarts")
        assert CSV_SCHEMAS["scaling"] == ("N", "r_stop", "queries_proposed", "queries_canonical", "ratio")
        assert CSV_SCHEMAS["oracle"] == ("r", "prob_stop", "g_at_stop")


class TestReplayCommand:

    def test_replay_reproduces_results(self, tmp_path):
        original, replayed = tmp_path / "original", tmp_path / "replayed"
        assert main(["run", "--p", "0.0625", "--trials", "300", "--seed", "9",
                     "--eta", "0.3333333333333333", "--out", str(original)]) == EXIT_OK
        assert main(["replay", str(original / MANIFEST_NAME), "--out", str(replayed)]) == EXIT_OK
        assert (original / "results.json").read_bytes() == (replayed / "results.json").read_bytes()

    def test_replay_table_csv(self, tmp_path):
        first = tmp_path / "first" / "table.csv"
        assert main(["table1", "--csv", str(first)]) == EXIT_OK
        manifest = first.with_name(f"table.{MANIFEST_NAME}")
        assert main(["replay", str(manifest), "--out", str(tmp_path / "second")]) == EXIT_OK
        assert (tmp_path / "second" / "table.csv").read_bytes() == first.read_bytes()

    def test_replay_missing_manifest(self, tmp_path):
        assert main(["replay", str(tmp_path / "nope.json")]) == EXIT_USAGE

    def test_replay_uses_recorded_settings(self, tmp_path, monkeypatch):
        original, replayed = tmp_path / "original", tmp_path / "replayed"
        monkeypatch.setenv("FPSEARCH_SIGNIFICANT_DIGITS", "5")
        get_settings.cache_clear()
        assert main(["run", "--p", "0.0625", "--trials", "300", "--seed", "9", "--out", str(original)]) == EXIT_OK
        assert load_manifest(original / MANIFEST_NAME).settings["significant_digits"] == 5

        monkeypatch.delenv("FPSEARCH_SIGNIFICANT_DIGITS")
        get_settings.cache_clear()
        assert main(["replay", str(original / MANIFEST_NAME), "--out", str(replayed)]) == EXIT_OK
        assert (original / "results.json").read_bytes() == (replayed / "results.json").read_bytes()
        assert get_settings().significant_digits == 12
