"""
Launcher SfpSolver dari source tree
Menjalankan subcommand CLI (solve-lse, solve-rfda, bench-*, ...) tanpa instalasi
dan meneruskan exit code solver (0 / 1 / 2) ke shell.

    python run.py solve-lse --seed 3 --out hasil_lse
"""

import os
import sys

REQUIRED_PYTHON = (3, 11)
SRC_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "src")


def _interpreter_ok() -> bool:
    if sys.version_info[:2] == REQUIRED_PYTHON:
        return True
    wanted = ".".join(map(str, REQUIRED_PYTHON))
    print(f"sfp-solver: Python {wanted} required, running "
          f"{sys.version_info.major}.{sys.version_info.minor}", file=sys.stderr)
    print(f"  py -{wanted} -m venv venv311 && pip install -r requirements.txt", file=sys.stderr)
    return False


if __name__ == "__main__":
    if not _interpreter_ok():
        sys.exit(1)  # EXIT_USAGE
    sys.path.insert(0, SRC_DIR)
    from main import main
    sys.exit(main())
