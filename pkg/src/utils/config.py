"""
Run Configuration
File teks bersection `key = value` (configparser). Setiap field punya default,
kunci yang tidak dikenal ditolak dengan menyebut nama kuncinya.
"""

import configparser
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Iterable, List, Optional, Tuple, Union, get_args, get_origin

from utils.constants import (
    DEFAULT_SCHEDULE, SCHEDULES,
    DEFAULT_CELLS, DEFAULT_RULE, QUADRATURE_RULES, DEFAULT_MC_BATCH,
    DEFAULT_OUTPUT_GRID, DEFAULT_OUTPUT_FOLDER, EARLY_STOP_TOL,
    LSE_NUM_SAMPLES, LSE_NUM_COMPONENTS, LSE_AMP_RANGE,
    NOISE_LEVELS, BENCH_REALIZATIONS, CENTER_MODES,
    RFDA_CORRUPT_FRACTION, RFDA_CORRUPT_MAGNITUDE,
)
from utils.errors import ConfigError

PROBLEM_KINDS = ("lse", "rfda")
SOLVER_METHODS = ("approximate", "stochastic")

# Field dataclass -> section file konfigurasi
SECTIONS: Dict[str, Tuple[str, ...]] = {
    "problem": ("kind", "lam", "epsilon", "B", "r", "gamma"),
    "solver": (
        "method", "steps", "eta0", "schedule", "seed", "mc_batch",
        "delta_override", "resolve_ties", "early_stop_tol",
    ),
    "quadrature": ("cells", "rule", "output_grid"),
    "paths": ("input", "test_input", "output"),
    "experiment": (
        "num_samples", "num_components", "noise_var", "saturated",
        "amp_min", "amp_max", "min_spacing", "center_mode",
        "noise_levels", "realizations", "corrupt_fraction",
        "corrupt_magnitude", "workers",
    ),
}


@dataclass(frozen=True)
class RunConfig:
    """
    Semua knob satu run. Nilai None pada knob masalah dan pada steps / eta0
    berarti "pakai default protokol" (lihat SfpApp).
    """

    # [problem]
    kind: str = "lse"
    lam: Optional[float] = None
    epsilon: Optional[float] = None
    B: Optional[float] = None
    r: Optional[float] = None
    gamma: Optional[float] = None

    # [solver]
    method: str = "approximate"
    steps: Optional[int] = None
    eta0: Optional[float] = None
    schedule: str = DEFAULT_SCHEDULE
    seed: int = 0
    mc_batch: int = DEFAULT_MC_BATCH
    delta_override: Optional[float] = None
    resolve_ties: bool = False
    early_stop_tol: float = EARLY_STOP_TOL

    # [quadrature]
    cells: int = DEFAULT_CELLS
    rule: str = DEFAULT_RULE
    output_grid: int = DEFAULT_OUTPUT_GRID

    # [paths]
    input: Optional[str] = None
    test_input: Optional[str] = None
    output: str = DEFAULT_OUTPUT_FOLDER

    # [experiment]
    num_samples: int = LSE_NUM_SAMPLES
    num_components: int = LSE_NUM_COMPONENTS
    noise_var: float = 0.1
    saturated: bool = False
    amp_min: float = LSE_AMP_RANGE[0]
    amp_max: float = LSE_AMP_RANGE[1]
    min_spacing: Optional[float] = None
    center_mode: str = "centroid"
    noise_levels: Tuple[float, ...] = field(default=NOISE_LEVELS)
    realizations: int = BENCH_REALIZATIONS
    corrupt_fraction: float = RFDA_CORRUPT_FRACTION
    corrupt_magnitude: float = RFDA_CORRUPT_MAGNITUDE
    workers: int = 1

    def __post_init__(self):
        self.validate()

    # -------------------------------------------------------------------------
    # Validasi
    # -------------------------------------------------------------------------

    def validate(self):
        """Periksa nilai enum dan rentang; lempar ConfigError bila salah."""
        choices = {
            "kind": PROBLEM_KINDS,
            "method": SOLVER_METHODS,
            "schedule": SCHEDULES,
            "rule": QUADRATURE_RULES,
            "center_mode": CENTER_MODES,
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(key, f"value must be one of {allowed}")

        positive = ("steps", "eta0", "cells", "output_grid", "mc_batch",
                    "num_samples", "realizations", "workers")
        for key in positive:
            value = getattr(self, key)
            if value is not None and not value > 0:
                raise ConfigError(key, "value must be positive")

        if self.lam is not None and self.lam < 0:
            raise ConfigError("lam", "value must be nonnegative")
        for key in ("B", "r", "gamma"):
            value = getattr(self, key)
            if value is not None and not value > 0:
                raise ConfigError(key, "value must be positive")
        if not 0.0 <= self.corrupt_fraction <= 1.0:
            raise ConfigError("corrupt_fraction", "value must lie in [0, 1]")
        if self.noise_var < 0:
            raise ConfigError("noise_var", "value must be nonnegative")

    # -------------------------------------------------------------------------
    # Load / Override / Echo
    # -------------------------------------------------------------------------

    @classmethod
    def load(cls, path: Optional[str] = None,
             overrides: Iterable[str] = ()) -> "RunConfig":
        """
        Baca file config (opsional) lalu terapkan override `key=value`.

        Args:
            path: Path to a sectioned key = value file, or None for defaults
            overrides: Iterable of "key=value" strings; these win over the file

        Returns:
            The effective RunConfig
        """
        values: Dict[str, str] = {}

        if path is not None:
            if not os.path.isfile(path):
                raise ConfigError(path, "config file not found")
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str  # kunci case-sensitive (B, r)
            try:
                parser.read(path, encoding="utf-8")
            except configparser.Error as e:
                raise ConfigError(path, f"cannot parse config file ({e})") from e

            for section in parser.sections():
                if section not in SECTIONS:
                    raise ConfigError(section, "unknown configuration section")
                for key, raw in parser.items(section):
                    if key not in SECTIONS[section]:
                        raise ConfigError(f"{section}.{key}")
                    values[key] = raw

        for item in overrides:
            if "=" not in item:
                raise ConfigError(item, "override must look like key=value")
            key, raw = item.split("=", 1)
            key = key.strip()
            # Boleh pakai bentuk section.key
            if "." in key:
                section, key = key.split(".", 1)
                if section not in SECTIONS or key not in SECTIONS[section]:
                    raise ConfigError(f"{section}.{key}")
            values[key] = raw.strip()

        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: Dict[str, str]) -> "RunConfig":
        """Konversi mapping string ke RunConfig sesuai tipe tiap field."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(key)
            kwargs[key] = _parse_value(key, known[key].type, raw)
        return cls(**kwargs)

    def with_overrides(self, **changes) -> "RunConfig":
        """Salinan dengan beberapa field diganti (tervalidasi ulang)."""
        return replace(self, **changes)

    def with_solver_defaults(self, steps: int, eta0: float) -> "RunConfig":
        """Isi steps / eta0 yang kosong dengan nilai protokol; nilai eksplisit tetap menang."""
        return replace(self,
                       steps=self.steps if self.steps is not None else int(steps),
                       eta0=self.eta0 if self.eta0 is not None else float(eta0))

    def to_sections(self) -> Dict[str, Dict[str, str]]:
        """Render field ke dict section -> key -> string."""
        out: Dict[str, Dict[str, str]] = {}
        for section, keys in SECTIONS.items():
            out[section] = {}
            for key in keys:
                value = getattr(self, key)
                if value is None:
                    continue
                out[section][key] = _format_value(value)
        return out

    def write(self, path: str) -> str:
        """
        Tulis echo konfigurasi efektif. Memuat ulang file ini
        menghasilkan RunConfig yang sama.
        """
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section, items in self.to_sections().items():
            parser[section] = items
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            parser.write(fh)
        return path


# =============================================================================
# Helpers
# =============================================================================

def _parse_float(key: str, raw: str) -> float:
    text = raw.strip().lower()
    if text in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {raw!r}") from None


def _parse_value(key: str, annotation, raw: str):
    """Parse string mentah berdasarkan anotasi tipe field."""
    text = raw.strip()

    origin = get_origin(annotation)
    if origin is Union:
        if text.lower() in ("", "none"):
            return None
        annotation = next(a for a in get_args(annotation) if a is not type(None))
        origin = get_origin(annotation)

    if origin is tuple:
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        return tuple(_parse_float(key, p) for p in parts)
    if annotation is bool:
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {raw!r}")
    if annotation is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {raw!r}") from None
    if annotation is float:
        return _parse_float(key, text)
    return text


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def parse_overrides(items: List[str]) -> List[str]:
    """Normalisasi daftar override dari CLI (buang entri kosong)."""
    return [item for item in items if item and item.strip()]
