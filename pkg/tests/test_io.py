"""
Input loaders and CSV exporters.
"""

import math

import numpy as np
import pytest

from core.problem import ComplexVec, Domain
from services.dataset_service import load_samples_csv, load_ucr_tsv, write_samples_csv
from services.dual_service import PrimalSolution, SolveReport
from services.export_service import (
    ExportService, read_solution_csv, write_classifier_csv, write_rows_csv, write_solution_csv,
)
from services.fda_service import RobustClassifier
from utils.config import RunConfig
from utils.errors import DataFormatError


def _step_solution():
    """X = 1.5 pada [0.2, 0.4), nol di luar."""

    def evaluator(beta):
        beta = np.asarray(beta, dtype=float)
        return np.where((beta >= 0.2) & (beta < 0.4), 1.5, 0.0)

    return PrimalSolution([(0.2, 0.4)], 0.1 + 1.0 / 3.0, ComplexVec.zeros(1), 0.2,
                          np.zeros(0), evaluator)


# ═══════════════════════════════════════════════════════════════════════════════
# Samples CSV
# ═══════════════════════════════════════════════════════════════════════════════


def test_load_samples_with_header(tmp_path):
    path = tmp_path / "y.csv"
    path.write_text("t,y\n-1,0.5\n0,1.25\n\n1,-2e-3\n")
    times, values = load_samples_csv(str(path))
    np.testing.assert_array_equal(times, [-1.0, 0.0, 1.0])
    np.testing.assert_array_equal(values, [0.5, 1.25, -0.002])


def test_load_samples_without_header(tmp_path):
    path = tmp_path / "y.csv"
    path.write_text("0,1\n1,2\n")
    times, _ = load_samples_csv(str(path))
    assert times.tolist() == [0.0, 1.0]


def test_load_samples_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,y\n0,1\n1,abc\n")
    with pytest.raises(DataFormatError) as info:
        load_samples_csv(str(path))
    assert info.value.line == 3
    assert "bad.csv:3" in str(info.value)


def test_load_samples_wrong_width(tmp_path):
    path = tmp_path / "wide.csv"
    path.write_text("0,1,2\n")
    with pytest.raises(DataFormatError) as info:
        load_samples_csv(str(path))
    assert info.value.line == 1


def test_load_samples_empty_and_missing(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("t,y\n")
    with pytest.raises(DataFormatError):
        load_samples_csv(str(path))
    with pytest.raises(FileNotFoundError):
        load_samples_csv(str(tmp_path / "nope.csv"))


def test_samples_csv_full_precision(tmp_path):
    path = str(tmp_path / "out" / "s.csv")
    values = np.array([1.0 / 3.0, math.pi, -1e-17])
    write_samples_csv([0.0, 1.0, 2.0], values, path)
    _, back = load_samples_csv(path)
    np.testing.assert_array_equal(back, values)


# ═══════════════════════════════════════════════════════════════════════════════
# UCR TSV
# ═══════════════════════════════════════════════════════════════════════════════


def test_load_ucr_maps_labels(tmp_path):
    path = tmp_path / "ECG200_TRAIN.tsv"
    path.write_text("-1\t0.1\t0.2\t0.3\n1\t1.0\t2.0\t3.0\n")
    samples = load_ucr_tsv(str(path))
    assert [s.label for s in samples] == [0, 1]
    np.testing.assert_array_equal(samples[1].knots, [0.0, 0.5, 1.0])
    assert samples[1](0.25) == pytest.approx(1.5)


def test_load_ucr_rejects_ragged_rows(tmp_path):
    path = tmp_path / "ragged.tsv"
    path.write_text("1 0.1 0.2 0.3\n-1 0.1 0.2\n")
    with pytest.raises(DataFormatError) as info:
        load_ucr_tsv(str(path))
    assert info.value.line == 2


def test_load_ucr_rejects_bad_label(tmp_path):
    path = tmp_path / "label.tsv"
    path.write_text("2 0.1 0.2\n")
    with pytest.raises(DataFormatError):
        load_ucr_tsv(str(path))


# ═══════════════════════════════════════════════════════════════════════════════
# Export
# ═══════════════════════════════════════════════════════════════════════════════


def test_solution_csv_round_trip(tmp_path):
    path = str(tmp_path / "sol.csv")
    sol = _step_solution()
    write_solution_csv(sol, 11, path, Domain.interval(0.0, 1.0))
    grid, values, footer = read_solution_csv(path)
    assert grid.size == 11
    np.testing.assert_array_equal(values, sol(grid))
    assert footer["support"] == [(0.2, 0.4)]
    assert footer["objective"] == sol.objective_value
    assert footer["l0"] == pytest.approx(0.2)


def test_solution_csv_needs_domain_or_grid(tmp_path):
    with pytest.raises(ValueError):
        write_solution_csv(_step_solution(), 5, str(tmp_path / "x.csv"))


def test_rows_csv_formats_infinity(tmp_path):
    path = tmp_path / "rows.csv"
    write_rows_csv(str(path), ["name", "value"], [("a", math.inf), ("b", None), ("c", 0.5)])
    lines = path.read_text().splitlines()
    assert lines == ["name,value", "a,inf", "b,", "c,0.5"]


def test_classifier_csv_header(tmp_path):
    clf = RobustClassifier(_step_solution(), -0.25, 4.0, 10.0, [(0.2, 0.4)])
    path = tmp_path / "clf.csv"
    write_classifier_csv(clf, 3, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "# b,-0.25"
    assert lines[1] == "# r,4"
    assert lines[3] == "# support,0.20000000000000001,0.40000000000000002"
    assert lines[4] == "tau,W"
    assert len(lines) == 8


def test_export_service_tracks_files(tmp_path):
    service = ExportService(str(tmp_path / "run"))
    report = SolveReport([0.0, 0.5], [0.0, 0.1], [0.0, 0.2], [1.0, 0.3])
    service.save_trace(report, "trace.csv")
    service.save_config(RunConfig())
    assert [p.rsplit("/", 1)[-1] for p in service.written] == ["trace.csv", "effective_config.ini"]
    rows = (tmp_path / "run" / "trace.csv").read_text().splitlines()
    assert rows[0] == "t,d_t,eta_t,support_measure,gap_estimate"
    assert rows[2] == "1,0.5,0.10000000000000001,0.20000000000000001,0.29999999999999999"
