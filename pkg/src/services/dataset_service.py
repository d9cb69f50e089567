"""
Layanan Dataset - Pemuatan file input
CSV sampel dua kolom (t, y) dan dataset UCR format TSV (kolom pertama label).
Input rusak selalu ditolak dengan error yang menyebut file dan barisnya.
"""

import csv
import os
from typing import List, Tuple

import numpy as np

from services.fda_service import FunctionalSample
from utils.constants import FLOAT_FORMAT
from utils.errors import DataFormatError


def _require_file(path: str):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Input file not found: {path}")


def load_samples_csv(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Baca CSV dua kolom (t_i, y_i); satu baris header opsional.

    Returns:
        (times, values) as float arrays of equal length
    """
    _require_file(path)
    times: List[float] = []
    values: List[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataFormatError(path, line_no, f"expected 2 columns, found {len(row)}")
            try:
                t, y = float(row[0]), float(row[1])
            except ValueError:
                if line_no == 1 and not times:
                    continue  # header
                raise DataFormatError(path, line_no, f"non-numeric cell in {row!r}") from None
            times.append(t)
            values.append(y)
    if not times:
        raise DataFormatError(path, 1, "no numeric rows")
    return np.array(times), np.array(values)


def write_samples_csv(times, values, path: str, header: bool = True) -> str:
    """Tulis (t, y) dengan presisi round-trip penuh."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(["t", "y"])
        for t, y in zip(times, values):
            writer.writerow([format(float(t), FLOAT_FORMAT), format(float(y), FLOAT_FORMAT)])
    return path


def load_ucr_tsv(path: str) -> List[FunctionalSample]:
    """
    Baca dataset UCR: tiap baris = label lalu nilai berjarak seragam.
    Label {-1, 1} dipetakan ke {0, 1}; knot seragam di [0, 1].
    """
    _require_file(path)
    rows: List[Tuple[int, np.ndarray]] = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.replace(",", " ").split()
            if not parts:
                continue
            try:
                numbers = [float(p) for p in parts]
            except ValueError:
                raise DataFormatError(path, line_no, "non-numeric value") from None
            if len(numbers) < 3:
                raise DataFormatError(path, line_no, "need a label and at least 2 values")
            if width is None:
                width = len(numbers)
            elif len(numbers) != width:
                raise DataFormatError(
                    path, line_no, f"row {len(rows)} has {len(numbers) - 1} values, expected {width - 1}")
            raw_label = numbers[0]
            if raw_label not in (-1.0, 0.0, 1.0):
                raise DataFormatError(path, line_no, f"label must be in {{-1, 0, 1}}, got {raw_label:g}")
            rows.append((0 if raw_label <= 0 else 1, np.array(numbers[1:])))

    if not rows:
        raise DataFormatError(path, 1, "empty dataset")
    return [FunctionalSample.from_series(values, label) for label, values in rows]
