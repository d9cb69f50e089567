"""
Application Constants
Konfigurasi pusat untuk solver dual, kuadratur, dan protokol eksperimen LSE / rFDA.
"""

import math
import os

# =============================================================================
# Application
# =============================================================================
APP_NAME = "SfpSolver"
LOGGER_ROOT = "sfp"
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
LOG_DATE_FORMAT = "%H:%M:%S"

# =============================================================================
# Exit Codes
# =============================================================================
EXIT_OK = 0
EXIT_USAGE = 1        # Config / argumen / input salah
EXIT_NUMERICAL = 2    # Backtrack habis atau tidak ada iterate diterima

# =============================================================================
# Pengaturan Solver Skalar
# =============================================================================
GENERIC_GRID_POINTS = 2001     # Titik scan kasar untuk solve_generic
GENERIC_REFINE_TOL = 1e-10     # Toleransi golden-section
SEARCH_RADIUS_FACTOR = 10.0    # Radius pencarian = faktor * |x| stasioner terbesar (P tak terbatas)
SEARCH_RADIUS_MIN = 1.0
EXTENT_GRID_POINTS = 201       # Titik per scan saat mencari titik stasioner
EXTENT_MAX_RADIUS = 1e6
GOLDEN_MAX_ITER = 200

# =============================================================================
# Pengaturan Kuadratur
# =============================================================================
QUADRATURE_RULES = ("midpoint", "gauss5")
DEFAULT_RULE = "gauss5"
DEFAULT_CELLS = 512            # Sel per dimensi pada domain 1-D
RULE_ORDER = {"midpoint": 2, "gauss5": 10}
DEFAULT_MC_BATCH = 8           # N node per langkah stokastik

# =============================================================================
# Pengaturan Dual Ascent
# =============================================================================
SCHEDULES = ("constant", "inv-sqrt")
DEFAULT_SCHEDULE = "inv-sqrt"
MAX_BACKTRACKS = 30            # Halving eta maksimum per langkah yang ditolak
ASCENT_DROP_FACTOR = 1.0       # Tolak kandidat dengan d < d_best - faktor * (|d_best| + 1)
BOUNDARY_TOL = 1e-6            # Bisection batas support, relatif ke panjang sisi
EARLY_STOP_TOL = 0.0           # 0 = nonaktif
EARLY_STOP_PATIENCE = 10
DEFAULT_OUTPUT_GRID = 1001     # Titik grid ekspor X*
TIE_TOL_FACTOR = 1e-2          # |margin| <= faktor * max(1, lambda) dianggap seri
UNIQUENESS_PROBES = 5          # Titik uji keunikan minimizer pointwise

# =============================================================================
# Line Spectral Estimation (LSE)
# =============================================================================
LSE_NUM_SAMPLES = 61           # p
LSE_NUM_COMPONENTS = 5         # K
LSE_AMP_RANGE = (0.5, 3.0)
LSE_LINEAR_B = 1.0
LSE_LINEAR_LAMBDA = 5000.0
LSE_SATURATED_B = 200.0
LSE_SATURATED_LAMBDA = 100.0
LSE_SATURATION = 1.0
# Override lambda per noise level dari protokol
LSE_LINEAR_LAMBDA_OVERRIDES = {5.0: 6000.0}
LSE_SATURATED_LAMBDA_OVERRIDES = {2.0: 80.0, 5.0: 80.0}
COMPONENT_MASS_FLOOR = 1e-3    # Bump dengan |a| < floor * max|a| dibuang
COMPONENT_GAUSS_POINTS = 32
CENTER_MODES = ("centroid", "midpoint")
LSE_EPSILON_FLOOR = 1e-4       # eps per sampel bila noise_var = 0
# Ascent protokol LSE; eta efektif = LSE_ETA0 / B (langkah diukur pada B*mu, B*nu)
LSE_STEPS = 4000
LSE_ETA0 = 0.1

# =============================================================================
# Robust Functional Data Analysis (rFDA)
# =============================================================================
RFDA_LAMBDA = 10.0
RFDA_SATURATION = 4.0
RFDA_EPS_TILDE = 46.0
RFDA_CORRUPT_FRACTION = 0.1
RFDA_CORRUPT_MAGNITUDE = 20.0
RFDA_NUM_KNOTS = 96
RFDA_TRAIN_SIZE = 100          # Ukuran set sintetis (sama dengan ECG200)
RFDA_TEST_SIZE = 100
RFDA_BENCH_MAGNITUDES = (0.0, 5.0, 10.0, 20.0, 40.0)
RFDA_STEPS = 500
RFDA_ETA0 = 0.1

# =============================================================================
# Benchmark
# =============================================================================
NOISE_LEVELS = (0.1, 0.5, 1.0, 2.0, 5.0)
BENCH_REALIZATIONS = 10

# =============================================================================
# Instance Dua-Blok (L0 / L1)
# =============================================================================
EXAMPLE1_GAMMA = 1.0
EXAMPLE1_Y = (0.3, -0.2)
EXAMPLE1_STEPS = 4000
EXAMPLE1_ETA0 = 0.1

# =============================================================================
# Output
# =============================================================================
DEFAULT_OUTPUT_FOLDER = os.path.join(os.getcwd(), "sfp_output")
FLOAT_FORMAT = ".17g"          # Presisi round-trip penuh
CONFIG_ECHO_NAME = "effective_config.ini"

INF = math.inf
