"""End-to-end tests of the command line, run in-process through ``main(argv)``."""

import json

import pandas as pd
import pytest

from mtensor.app.config import settings
from mtensor.app.services import experiment_service
from mtensor.app.services.experiment_service import CSV_COLUMNS, PLOT_COLUMNS
from mtensor.run import main

GOLDEN_HEADER = (
    "family,n,m,p,m_kind,method,inverse,tol,seed,trial,iterations,ttp,converged,"
    "E1,E2,E3,E4,E5,E1k,wall_ms"
)


def _run(tmp_path, *args, name="runs.csv"):
    out = tmp_path / name
    assert main([*args, "--out", str(out)]) == 0
    return out, pd.read_csv(out)


class TestSchema:
    def test_golden_header(self, tmp_path):
        out, _ = _run(tmp_path, "--family", "chow", "--n", "4", "--p", "2", "--method", "mqr")
        assert out.read_text().splitlines()[0] == GOLDEN_HEADER
        assert ",".join(CSV_COLUMNS) == GOLDEN_HEADER

    def test_json_records(self, tmp_path):
        path = tmp_path / "runs.json"
        _run(tmp_path, "--family", "random", "--n", "3", "--m", "5", "--p", "2", "--method", "mqr",
             "--json", str(path))
        records = json.loads(path.read_text())
        assert len(records) == 1
        assert set(CSV_COLUMNS) <= set(records[0])
        assert records[0]["error"] is None


class TestExperiments:
    def test_penrose_sweep_on_chow(self, tmp_path):
        _, frame = _run(tmp_path, "--family", "chow", "--n", "20", "--p", "4", "--m-kind", "random",
                        "--method", "mqr", "--inverse", "mp", "--trials", "3")
        assert len(frame) == 3
        assert list(frame["trial"]) == [0, 1, 2]
        assert (frame[["E1", "E2", "E3", "E4"]] <= 1e-8).all().all()

    def test_example_4_1(self, tmp_path):
        _, frame = _run(tmp_path, "--example", "4.1", "--method", "hpi19", "--tol", "1e-12")
        row = frame.iloc[0]
        assert (row["n"], row["m"], row["p"]) == (2, 2, 4)
        assert bool(row["converged"])
        assert row["iterations"] <= 3
        assert row["ttp"] == 7 * row["iterations"]

    def test_example_4_1_tight_tolerance(self, tmp_path):
        _, frame = _run(tmp_path, "--example", "4.1", "--method", "hpi19", "--tol", "1e-15",
                        "--max-iters", "4")
        assert frame.iloc[0]["E1"] < 1e-12

    def test_drazin_report_shape(self, tmp_path):
        _, frame = _run(tmp_path, "--family", "gearmat", "--n", "6", "--p", "2", "--inverse", "drazin",
                        "--method", "mqr")
        row = frame.iloc[0]
        assert row[["E1k", "E2", "E5"]].notna().all()
        assert row[["E1", "E3", "E4"]].isna().all()

    def test_outer_inverse(self, tmp_path):
        _, frame = _run(tmp_path, "--family", "random", "--n", "5", "--m", "6", "--p", "3",
                        "--inverse", "outer", "--slice-rank", "2", "--method", "mqr")
        assert frame.iloc[0]["E2"] < 1e-9

    def test_residual_stop_rule(self, tmp_path):
        _, frame = _run(tmp_path, "--example", "4.1", "--method", "hpi9", "--stop", "residual")
        assert bool(frame.iloc[0]["converged"])
        assert frame.iloc[0]["E2"] < settings.solver.tol

    def test_failed_run_is_recorded(self, tmp_path):
        path = tmp_path / "runs.json"
        _, frame = _run(tmp_path, "--family", "random", "--n", "3", "--p", "2", "--inverse", "group",
                        "--method", "mqr", "--json", str(path))
        assert not bool(frame.iloc[0]["converged"])
        assert frame.iloc[0][["E2", "E5", "E1k"]].isna().all()
        record = json.loads(path.read_text())[0]
        assert record["error"].startswith("IndexNotOneError")

    def test_deterministic(self, tmp_path):
        args = ["--family", "cycol", "--n", "6", "--p", "3", "--m-kind", "m1", "--method", "mqr", "hpi9",
                "--seed", "4"]
        _, first = _run(tmp_path, *args, name="a.csv")
        _, second = _run(tmp_path, *args, name="b.csv")
        columns = [c for c in CSV_COLUMNS if c != "wall_ms"]
        pd.testing.assert_frame_equal(first[columns], second[columns])


class TestPlotData:
    def test_two_sizes_two_methods(self, tmp_path):
        plot = tmp_path / "plot.csv"
        _run(tmp_path, "--family", "chow", "--n", "4", "6", "--p", "2", "--method", "mqr", "hpi19",
             "--plot-data", str(plot))
        series = pd.read_csv(plot)
        assert list(series.columns) == PLOT_COLUMNS
        assert len(series) == 4
        assert set(series["runs"]) == {1}

    def test_empty_records_write_header(self, tmp_path):
        plot = tmp_path / "empty.csv"
        series = experiment_service.emit_plot_data([], str(plot))
        assert series.empty
        assert plot.read_text().strip() == ",".join(PLOT_COLUMNS)

    def test_efficiency_table(self, tmp_path):
        path = tmp_path / "efficiency.csv"
        assert main(["--efficiency", str(path)]) == 0
        table = pd.read_csv(path)
        assert len(table) == 20
        assert table[table["method"] == "hpi19"]["ttp"].iloc[0] == 7


class TestVerify:
    def test_passes(self):
        assert main(["--verify"]) == 0

    def test_perturbed_coefficients_fail(self):
        assert main(["--verify", "--perturb-coefficients", "1e-6"]) == 1

    def test_oversize_request(self):
        assert main(["--verify", "--n", "20"]) == 2
        assert main(["--verify", "--p", "5"]) == 2


class TestUsage:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["--family", "nope"],
            ["--family", "chow", "--method", "newton"],
            ["--family", "chow", "--example", "4.1"],
            ["--family", "random", "--n", "4", "--m", "5", "--inverse", "drazin"],
            ["--family", "chow", "--trials", "0"],
        ],
    )
    def test_exit_code_two(self, argv):
        assert main(argv) == 2
