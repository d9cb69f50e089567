"""
Solver SFP - Entry Point
Parsing argumen CLI, memuat config efektif, menjalankan subcommand,
dan memetakan hasil ke kode exit (0 sukses, 1 config/input salah, 2 gagal numerik).
"""

import argparse
import sys
import traceback
from typing import List, Optional

from utils.config import RunConfig, parse_overrides
from utils.constants import (
    APP_NAME, EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL,
    EXAMPLE1_GAMMA, EXAMPLE1_Y, EXAMPLE1_STEPS, EXAMPLE1_ETA0,
)
from utils.errors import (
    ConfigError, DataFormatError, DomainError, IllPosedProblemError,
    NoAcceptedIterateError, NonFiniteIntegrandError, SaturationHypothesisError,
)
from utils.logger import setup_logging

SUBCOMMANDS = ("solve-lse", "solve-rfda", "demo-example1", "bench-lse", "bench-rfda", "check-properties")

# Urutan penting: error numerik juga turunan ValueError
NUMERICAL_ERRORS = (IllPosedProblemError, NonFiniteIntegrandError,
                    SaturationHypothesisError, NoAcceptedIterateError)
USAGE_ERRORS = (ConfigError, DataFormatError, DomainError, FileNotFoundError)


def build_parser() -> argparse.ArgumentParser:
    """Parser dengan flag umum di setiap subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="sectioned key = value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-iteration debug output")

    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Sparse functional programs solved through their Lagrangian dual.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    for name, help_text in (("solve-lse", "nonlinear line spectral estimation"),
                            ("solve-rfda", "robust functional logistic regression")):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("--input", metavar="PATH", help="input data file")
        if name == "solve-rfda":
            cmd.add_argument("--test-input", metavar="PATH", help="test data file (UCR layout)")

    sub.add_parser("bench-lse", parents=[common], help="LSE noise-level sweep")
    sub.add_parser("bench-rfda", parents=[common], help="rFDA corruption-magnitude sweep")

    demo = sub.add_parser("demo-example1", parents=[common],
                          help="L0 / L1 equivalence on the two-block instance")
    demo.add_argument("--gamma", type=float, default=EXAMPLE1_GAMMA)
    demo.add_argument("--y1", type=float, default=EXAMPLE1_Y[0])
    demo.add_argument("--y2", type=float, default=EXAMPLE1_Y[1])
    demo.add_argument("--steps", type=int, default=EXAMPLE1_STEPS)
    demo.add_argument("--eta0", type=float, default=EXAMPLE1_ETA0)

    checks = sub.add_parser("check-properties", parents=[common], help="run invariant suites")
    checks.add_argument("--suite", default="all",
                        choices=("all", "duality", "scaling", "mc", "perturbation"))
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file + --set, lalu flag khusus (menang atas keduanya)."""
    overrides = parse_overrides(args.overrides)
    if args.command in ("solve-lse", "bench-lse"):
        overrides.insert(0, "kind=lse")
    elif args.command in ("solve-rfda", "bench-rfda"):
        overrides.insert(0, "kind=rfda")
    if args.out:
        overrides.append(f"output={args.out}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "input", None):
        overrides.append(f"input={args.input}")
    if getattr(args, "test_input", None):
        overrides.append(f"test_input={args.test_input}")
    return RunConfig.load(args.config, overrides)


def run(args: argparse.Namespace) -> int:
    # Impor di sini supaya --help tidak memuat scipy / sklearn
    from app import SfpApp

    config = load_config(args)
    app = SfpApp(config)
    try:
        if args.command == "solve-lse":
            return app.solve_lse()
        if args.command == "solve-rfda":
            return app.solve_rfda()
        if args.command == "bench-lse":
            return app.bench_lse()
        if args.command == "bench-rfda":
            return app.bench_rfda()
        if args.command == "demo-example1":
            return app.demo_example1(args.gamma, args.y1, args.y2, args.steps, args.eta0)
        return app.check_properties(args.suite)
    finally:
        for line in app.report:
            print(line)


def main(argv: Optional[List[str]] = None) -> int:
    """Titik masuk utama untuk CLI"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse: 0 untuk --help, 2 untuk argumen salah -> kontrak exit kita
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    setup_logging(args.verbose)

    try:
        return run(args)
    except NUMERICAL_ERRORS as e:
        print(f"Numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except USAGE_ERRORS as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        # Error fatal tak terduga: tampilkan detail teknis
        print(
            f"{APP_NAME} failed:\n\n"
            f"{type(e).__name__}: {e}\n\n"
            f"Detail teknis:\n{traceback.format_exc()}",
            file=sys.stderr,
        )
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
