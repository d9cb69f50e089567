"""
Layanan Ekspor - Menyimpan hasil solver ke folder output
Solusi primal, komponen, jejak konvergensi, classifier, dan sweep benchmark
ditulis sebagai CSV dengan presisi round-trip penuh.
"""

import csv
import math
import os
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from services.dataset_service import write_samples_csv
from services.dual_service import PrimalSolution, SolveReport
from utils.constants import DEFAULT_OUTPUT_FOLDER, FLOAT_FORMAT, CONFIG_ECHO_NAME
from utils.errors import DataFormatError


def _fmt(value) -> str:
    if value is None:
        return ""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, FLOAT_FORMAT)


def _ensure_parent(path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


# =============================================================================
# Solusi primal
# =============================================================================

def write_solution_csv(sol: PrimalSolution, grid_points: int, path: str, domain=None) -> str:
    """
    Kolom (beta, X*(beta)) pada grid seragam, diikuti footer:
        # support,a,b   (satu baris per interval)
        # objective,P
        # l0,value
    """
    _ensure_parent(path)
    if domain is not None:
        lo, hi = domain.lo, domain.hi
    elif sol.grid is not None:
        lo, hi = float(sol.grid[0]), float(sol.grid[-1])
    else:
        raise ValueError("a 1-D domain or a sampled solution grid is required")
    grid = np.linspace(lo, hi, int(grid_points))
    values = sol(grid)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "x"])
        for beta, x in zip(grid, values):
            writer.writerow([_fmt(beta), _fmt(x)])
        for a, b in sol.support:
            writer.writerow(["# support", _fmt(a), _fmt(b)])
        writer.writerow(["# objective", _fmt(sol.objective_value)])
        writer.writerow(["# l0", _fmt(sol.l0)])
    return path


def read_solution_csv(path: str) -> Tuple[np.ndarray, np.ndarray, Dict[str, object]]:
    """Kebalikan write_solution_csv: (grid, values, footer)."""
    grid: List[float] = []
    values: List[float] = []
    footer: Dict[str, object] = {"support": []}
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or row == ["beta", "x"]:
                continue
            try:
                if row[0] == "# support":
                    footer["support"].append((float(row[1]), float(row[2])))
                elif row[0].startswith("# "):
                    footer[row[0][2:]] = float(row[1])
                else:
                    grid.append(float(row[0]))
                    values.append(float(row[1]))
            except (ValueError, IndexError):
                raise DataFormatError(path, line_no, f"malformed row {row!r}") from None
    return np.array(grid), np.array(values), footer


# =============================================================================
# Tabel lain
# =============================================================================

def write_rows_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV generik; angka ditulis dengan presisi penuh."""
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else _fmt(cell) for cell in row])
    return path


def write_trace_csv(report: SolveReport, path: str) -> str:
    return write_rows_csv(path, ["t", "d_t", "eta_t", "support_measure", "gap_estimate"], report.rows())


def write_components_csv(rows: Iterable[Sequence], path: str) -> str:
    """Kolom k, f_true, a_true, f_hat, a_hat (nilai kosong bila tidak ada)."""
    return write_rows_csv(path, ["k", "f_true", "a_true", "f_hat", "a_hat"], rows)


def write_classifier_csv(clf, grid_points: int, path: str) -> str:
    """Header (b, r, lambda, support) lalu kolom (tau, W(tau))."""
    _ensure_parent(path)
    grid = np.linspace(0.0, 1.0, int(grid_points))
    values = clf.W(grid)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# b", _fmt(clf.intercept)])
        writer.writerow(["# r", _fmt(clf.r)])
        writer.writerow(["# lambda", _fmt(clf.lam)])
        for a, b in clf.support:
            writer.writerow(["# support", _fmt(a), _fmt(b)])
        writer.writerow(["tau", "W"])
        for tau, w in zip(grid, values):
            writer.writerow([_fmt(tau), _fmt(w)])
    return path


# =============================================================================
# Export Service
# =============================================================================

class ExportService:
    """
    Layanan untuk menulis semua artefak satu run ke folder output.
    Nama file diberi prefix per subcommand / realisasi.
    """

    def __init__(self, output_folder: str = DEFAULT_OUTPUT_FOLDER):
        self._output_folder = output_folder
        self._written: List[str] = []

        # Pastikan folder output ada
        os.makedirs(self._output_folder, exist_ok=True)

    # -------------------------------------------------------------------------
    # Manajemen Folder Output
    # -------------------------------------------------------------------------

    def set_output_folder(self, path: str):
        """Ubah folder output dan buat jika diperlukan."""
        self._output_folder = path
        os.makedirs(self._output_folder, exist_ok=True)

    def get_output_folder(self) -> str:
        return self._output_folder

    def path_for(self, name: str) -> str:
        return os.path.join(self._output_folder, name)

    @property
    def written(self) -> List[str]:
        """File yang sudah ditulis selama run ini."""
        return list(self._written)

    def _track(self, path: str) -> str:
        self._written.append(path)
        return path

    # -------------------------------------------------------------------------
    # Writers
    # -------------------------------------------------------------------------

    def save_config(self, config) -> str:
        return self._track(config.write(self.path_for(CONFIG_ECHO_NAME)))

    def save_solution(self, sol: PrimalSolution, grid_points: int, name: str, domain=None) -> str:
        return self._track(write_solution_csv(sol, grid_points, self.path_for(name), domain))

    def save_trace(self, report: SolveReport, name: str) -> str:
        return self._track(write_trace_csv(report, self.path_for(name)))

    def save_components(self, rows: Iterable[Sequence], name: str) -> str:
        return self._track(write_components_csv(rows, self.path_for(name)))

    def save_classifier(self, clf, grid_points: int, name: str) -> str:
        return self._track(write_classifier_csv(clf, grid_points, self.path_for(name)))

    def save_table(self, header: Sequence[str], rows: Iterable[Sequence], name: str) -> str:
        return self._track(write_rows_csv(self.path_for(name), header, rows))

    def save_samples(self, times, values, name: str) -> str:
        return self._track(write_samples_csv(times, values, self.path_for(name)))
