"""
Aplikasi Utama
Orkestrasi satu run CLI: membangun SFP dari config, menjalankan solver dual,
mengekstrak hasil aplikasi (LSE / rFDA), dan menulis semua artefak ke folder output.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.problem import Domain, SfpProblem
from services import ExportService, DualEngine, McSampler, build_composite
from services.dataset_service import load_samples_csv, load_ucr_tsv
from services.dual_service import PrimalSolution, SolveReport
from services.fda_service import (
    FunctionalSample, RobustClassifier, corrupt_impulsive, evaluate,
    synthetic_dataset, train_classifier,
)
from services.property_service import SUITES, run_suite, solve_example1
from services.spectral_service import (
    FREQ_DOMAIN, SinusoidScene, build_lse, extract_components, lse_lambda, match_frequencies,
    nearest_components, random_scene, reconstruction_mse, synthesize,
)
from utils.config import RunConfig
from utils.constants import (
    EXIT_OK, EXIT_NUMERICAL, EXAMPLE1_ETA0, EXAMPLE1_STEPS,
    LSE_LINEAR_B, LSE_SATURATED_B, LSE_SATURATION, LSE_EPSILON_FLOOR, LSE_STEPS, LSE_ETA0,
    RFDA_LAMBDA, RFDA_SATURATION, RFDA_EPS_TILDE, RFDA_TRAIN_SIZE, RFDA_TEST_SIZE,
    RFDA_BENCH_MAGNITUDES, RFDA_STEPS, RFDA_ETA0,
)
from utils.errors import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)


def derive_seed(seed: int, *keys: int) -> int:
    """Seed turunan deterministik untuk (level, realisasi) dari satu --seed."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


@dataclass(frozen=True)
class LseSettings:
    B: float
    lam: float
    epsilon: float
    r: float

    @property
    def saturated(self) -> bool:
        return math.isfinite(self.r)


@dataclass
class LseRun:
    solution: PrimalSolution
    report: SolveReport
    components: list
    mse: float
    short: bool
    recovered: Optional[np.ndarray]


# =============================================================================
# SfpApp
# =============================================================================

class SfpApp:
    """Satu run: config efektif + layanan ekspor. Laporan teks dikumpulkan untuk dicetak CLI."""

    def __init__(self, config: RunConfig):
        self._config = config

        # Layanan inti
        self._export_service = ExportService(config.output)

        # Baris laporan untuk stdout
        self._report: List[str] = []

    # -------------------------------------------------------------------------
    # Properti
    # -------------------------------------------------------------------------

    @property
    def config(self) -> RunConfig:
        return self._config

    @property
    def export_service(self) -> ExportService:
        return self._export_service

    @property
    def report(self) -> List[str]:
        return list(self._report)

    def _say(self, line: str):
        self._report.append(line)

    # -------------------------------------------------------------------------
    # Solver helpers
    # -------------------------------------------------------------------------

    def _engine_options(self) -> dict:
        cfg = self._config
        return dict(resolve_ties=cfg.resolve_ties, early_stop_tol=cfg.early_stop_tol,
                    delta_override=cfg.delta_override, output_grid=cfg.output_grid)

    def _solve(self, problem: SfpProblem, seed: int) -> Tuple[PrimalSolution, SolveReport]:
        """Jalankan metode solver dari config pada problem."""
        cfg = self._config
        scheme = build_composite(problem.domain, cfg.cells, cfg.rule)
        engine = DualEngine(problem, scheme, **self._engine_options())
        if cfg.method == "stochastic":
            sampler = McSampler(problem.domain, cfg.mc_batch, seed)
            return engine.solve_stochastic(sampler, cfg.steps, cfg.eta0, cfg.schedule)
        return engine.solve_approximate(cfg.steps, cfg.eta0, cfg.schedule)

    @staticmethod
    def _status_of(*reports: SolveReport) -> int:
        """Exit 2 bila backtracking habis atau dual tidak pernah naik dari titik awal."""
        for rep in reports:
            if rep.backtrack_exhausted:
                return EXIT_NUMERICAL
            if rep.stalled:
                logger.warning("Warning: dual ascent never improved on its starting value "
                               "(d_0=%.6g after %d iterations)", rep.best_value, rep.wall_iterations)
                return EXIT_NUMERICAL
        return EXIT_OK

    # =========================================================================
    # LSE
    # =========================================================================

    def lse_settings(self, noise_var: float, p: int) -> LseSettings:
        """Knob LSE: nilai config bila diisi, selain itu default protokol."""
        cfg = self._config
        if cfg.r is not None:
            r = cfg.r
        else:
            r = LSE_SATURATION if cfg.saturated else math.inf
        saturated = math.isfinite(r)
        B = cfg.B if cfg.B is not None else (LSE_SATURATED_B if saturated else LSE_LINEAR_B)
        lam = cfg.lam if cfg.lam is not None else lse_lambda(noise_var, saturated)
        if cfg.epsilon is not None:
            epsilon = cfg.epsilon
        else:
            epsilon = p * max(noise_var, LSE_EPSILON_FLOOR)
        return LseSettings(B, lam, epsilon, r)

    def _use_lse_solver_defaults(self):
        """steps / eta0 protokol LSE bila tidak diisi; eta diskalakan 1/B."""
        B = self.lse_settings(self._config.noise_var, self._config.num_samples).B
        self._config = self._config.with_solver_defaults(LSE_STEPS, LSE_ETA0 / B)

    def _run_lse(self, y, times, settings: LseSettings, K: Optional[int],
                 true_freqs=None, seed: int = 0) -> LseRun:
        problem = build_lse(y, times, settings.B, settings.lam, settings.epsilon,
                            settings.r, self._config.gamma)
        solution, report = self._solve(problem, seed)
        components = extract_components(solution, settings.B, self._config.center_mode)
        recon = reconstruction_mse(y, components, times, settings.r, K)
        recovered = None
        if true_freqs is not None and len(times) > 0:
            recovered = match_frequencies(true_freqs, components, 1.0 / (2 * len(times)))
        return LseRun(solution, report, components, recon.mse, recon.short, recovered)

    @staticmethod
    def component_rows(scene: Optional[SinusoidScene], components) -> List[list]:
        """Baris k, f_true, a_true, f_hat, a_hat (sel kosong bila tidak ada)."""
        rows = []
        if scene is None:
            for k, comp in enumerate(components):
                rows.append([str(k), None, None, comp.f_hat, comp.a_hat])
            return rows
        matched = nearest_components(scene.freqs, components)
        for k, (f, a, comp) in enumerate(zip(scene.freqs, scene.amps, matched)):
            rows.append([str(k), f, a,
                         comp.f_hat if comp is not None else None,
                         comp.a_hat if comp is not None else None])
        used = {id(c) for c in matched if c is not None}
        extra = [c for c in components if id(c) not in used]
        for j, comp in enumerate(extra, start=len(rows)):
            rows.append([str(j), None, None, comp.f_hat, comp.a_hat])
        return rows

    def solve_lse(self) -> int:
        """Subcommand solve-lse: file sampel (paths.input) atau scene sintetis."""
        self._use_lse_solver_defaults()
        cfg = self._config
        scene = None
        if cfg.input:
            times, y = load_samples_csv(cfg.input)
            K = cfg.num_components
            noise_var = cfg.noise_var
            logger.info("Loaded %d samples from %s", len(y), cfg.input)
        else:
            settings = self.lse_settings(cfg.noise_var, cfg.num_samples)
            scene = random_scene(cfg.seed, cfg.num_samples, cfg.num_components, cfg.noise_var,
                                 settings.r, (cfg.amp_min, cfg.amp_max), cfg.min_spacing)
            y = synthesize(scene, derive_seed(cfg.seed, 1))
            times, K, noise_var = scene.times, scene.K, cfg.noise_var
            self._export_service.save_samples(times, y, "lse_samples.csv")

        settings = self.lse_settings(noise_var, len(y))
        self._export_service.save_config(cfg)
        run = self._run_lse(y, times, settings, K,
                            scene.freqs if scene is not None else None, cfg.seed)

        self._export_service.save_solution(run.solution, cfg.output_grid, "lse_solution.csv",
                                           Domain.interval(*FREQ_DOMAIN))
        self._export_service.save_components(self.component_rows(scene, run.components),
                                             "lse_components.csv")
        self._export_service.save_trace(run.report, "lse_trace.csv")
        metrics = [
            ["lambda", settings.lam], ["epsilon", settings.epsilon], ["B", settings.B],
            ["r", settings.r], ["objective", run.solution.objective_value],
            ["dual_best", run.report.best_value], ["gap_estimate", run.report.final_gap_estimate],
            ["delta", run.report.delta_used], ["support_measure", run.solution.l0],
            ["components", len(run.components)], ["mse", run.mse],
        ]
        self._export_service.save_table(["name", "value"], metrics, "lse_metrics.csv")

        self._say(f"solve-lse: {len(run.components)} components, "
                  f"P={run.solution.objective_value:.10g}, d_best={run.report.best_value:.10g}, "
                  f"MSE={run.mse:.6g}")
        for comp in run.components[:K]:
            self._say(f"  f_hat={comp.f_hat:.6f}  a_hat={comp.a_hat:+.6f}")
        if run.short:
            self._say(f"  warning: only {len(run.components)} of {K} components found")
        if run.report.backtrack_exhausted:
            self._say("  step-size backtracking exhausted")
        if run.report.stalled:
            self._say("  dual ascent never improved on its starting value")
        self._say(f"  output: {self._export_service.get_output_folder()}")
        return self._status_of(run.report)

    def _bench_lse_realization(self, level_idx: int, noise_var: float, rep: int) -> dict:
        cfg = self._config
        seed = derive_seed(cfg.seed, level_idx, rep)
        settings = self.lse_settings(noise_var, cfg.num_samples)
        scene = random_scene(seed, cfg.num_samples, cfg.num_components, noise_var, settings.r,
                             (cfg.amp_min, cfg.amp_max), cfg.min_spacing)
        y = synthesize(scene, derive_seed(seed, 1))
        run = self._run_lse(y, scene.times, settings, scene.K, scene.freqs, seed)
        self._export_service.save_components(
            self.component_rows(scene, run.components),
            f"bench_lse_level{level_idx}_rep{rep}_components.csv")
        return dict(mse=run.mse, components=len(run.components), short=run.short,
                    recovered=float(np.mean(run.recovered)),
                    exhausted=run.report.backtrack_exhausted or run.report.stalled,
                    lam=settings.lam)

    def bench_lse(self) -> int:
        """Sweep noise level x realisasi; satu baris rata-rata per level."""
        self._use_lse_solver_defaults()
        cfg = self._config
        self._export_service.save_config(cfg)
        jobs = [(i, level, rep) for i, level in enumerate(cfg.noise_levels)
                for rep in range(cfg.realizations)]

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(lambda job: self._bench_lse_realization(*job), jobs))
        else:
            results = [self._bench_lse_realization(*job) for job in jobs]

        rows = []
        exhausted = False
        for i, level in enumerate(cfg.noise_levels):
            chunk = results[i * cfg.realizations:(i + 1) * cfg.realizations]
            exhausted |= any(r["exhausted"] for r in chunk)
            row = [level, chunk[0]["lam"],
                   float(np.mean([r["mse"] for r in chunk])),
                   float(np.mean([r["components"] for r in chunk])),
                   float(np.mean([r["recovered"] for r in chunk])),
                   float(sum(r["short"] for r in chunk))]
            rows.append(row)
            self._say(f"noise_var={level:g}: mean MSE={row[2]:.6g}, "
                      f"components={row[3]:.3g}, freq recovery={row[4]:.3f}")

        name = "bench_lse_saturated.csv" if self.lse_settings(0.0, cfg.num_samples).saturated \
            else "bench_lse_linear.csv"
        self._export_service.save_table(
            ["noise_var", "lambda", "mean_mse", "mean_components", "freq_recovery", "short_runs"],
            rows, name)
        self._say(f"  output: {self._export_service.path_for(name)}")
        return EXIT_NUMERICAL if exhausted else EXIT_OK

    # =========================================================================
    # rFDA
    # =========================================================================

    def _rfda_data(self) -> Tuple[List[FunctionalSample], List[FunctionalSample]]:
        cfg = self._config
        if cfg.input:
            train = load_ucr_tsv(cfg.input)
            test = load_ucr_tsv(cfg.test_input) if cfg.test_input else train
            logger.info("Loaded %d training / %d test series", len(train), len(test))
            return train, test
        train = synthetic_dataset(RFDA_TRAIN_SIZE, seed=derive_seed(cfg.seed, 10))
        test = synthetic_dataset(RFDA_TEST_SIZE, seed=derive_seed(cfg.seed, 11))
        return train, test

    def _train_pair(self, train: Sequence[FunctionalSample]) -> Tuple[Tuple[RobustClassifier, SolveReport], ...]:
        """Latih classifier plain (lambda=0, r=inf) dan robust (lambda, r dari config)."""
        cfg = self._config
        eps_tilde = cfg.epsilon if cfg.epsilon is not None else RFDA_EPS_TILDE
        lam = cfg.lam if cfg.lam is not None else RFDA_LAMBDA
        r = cfg.r if cfg.r is not None else RFDA_SATURATION
        if cfg.method == "stochastic":
            logger.warning("Warning: rFDA training always uses the approximate method")
        scheme = build_composite(Domain.interval(0.0, 1.0), cfg.cells, cfg.rule)
        common = dict(scheme=scheme, steps=cfg.steps, eta0=cfg.eta0, schedule=cfg.schedule,
                      gamma=cfg.gamma, engine_options=self._engine_options())
        plain = train_classifier(train, 0.0, math.inf, eps_tilde, **common)
        robust = train_classifier(train, lam, r, eps_tilde, **common)
        return plain, robust

    def solve_rfda(self) -> int:
        """Subcommand solve-rfda: latih plain + robust, evaluasi bersih dan terkorupsi."""
        self._config = self._config.with_solver_defaults(RFDA_STEPS, RFDA_ETA0)
        cfg = self._config
        train, test = self._rfda_data()
        self._export_service.save_config(cfg)
        (plain, plain_rep), (robust, robust_rep) = self._train_pair(train)

        scheme = build_composite(Domain.interval(0.0, 1.0), cfg.cells, cfg.rule)
        corrupted = corrupt_impulsive(test, cfg.corrupt_fraction, cfg.corrupt_magnitude,
                                      derive_seed(cfg.seed, 12))
        rows = []
        for name, clf, rep in (("plain", plain, plain_rep), ("robust", robust, robust_rep)):
            self._export_service.save_classifier(clf, cfg.output_grid, f"rfda_{name}_classifier.csv")
            self._export_service.save_trace(rep, f"rfda_{name}_trace.csv")
            for split, data in (("clean", test), ("corrupted", corrupted)):
                result = evaluate(clf, data, scheme)
                rows.append([name, split, result.accuracy, result.auc])
                if result.roc is not None:
                    self._export_service.save_table(["fpr", "tpr"], result.roc,
                                                    f"rfda_{name}_{split}_roc.csv")
                auc_text = f"{result.auc:.3f}" if result.auc is not None else "undefined"
                self._say(f"{name:>6} / {split:<9}: accuracy={result.accuracy:.3f}  AUC={auc_text}")
            self._say(f"{name:>6}: support={clf.weight.l0:.4g}, b={clf.intercept:.4g}")

        self._export_service.save_table(["model", "test_set", "accuracy", "auc"], rows,
                                        "rfda_metrics.csv")
        self._say(f"  output: {self._export_service.get_output_folder()}")
        return self._status_of(plain_rep, robust_rep)

    def bench_rfda(self) -> int:
        """Sweep magnitudo korupsi impulsif; rata-rata atas realisasi korupsi."""
        self._config = self._config.with_solver_defaults(RFDA_STEPS, RFDA_ETA0)
        cfg = self._config
        train, test = self._rfda_data()
        self._export_service.save_config(cfg)
        (plain, plain_rep), (robust, robust_rep) = self._train_pair(train)
        scheme = build_composite(Domain.interval(0.0, 1.0), cfg.cells, cfg.rule)

        def realization(job) -> Tuple[float, float, float, float]:
            level_idx, magnitude, rep = job
            data = corrupt_impulsive(test, cfg.corrupt_fraction, magnitude,
                                     derive_seed(cfg.seed, level_idx, rep))
            p_res = evaluate(plain, data, scheme)
            r_res = evaluate(robust, data, scheme)
            return p_res.accuracy, _nan_if_none(p_res.auc), r_res.accuracy, _nan_if_none(r_res.auc)

        jobs = [(i, mag, rep) for i, mag in enumerate(RFDA_BENCH_MAGNITUDES)
                for rep in range(cfg.realizations)]
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(realization, jobs))
        else:
            results = [realization(job) for job in jobs]

        rows = []
        for i, magnitude in enumerate(RFDA_BENCH_MAGNITUDES):
            chunk = np.array(results[i * cfg.realizations:(i + 1) * cfg.realizations])
            means = chunk.mean(axis=0)
            rows.append([magnitude, *means.tolist()])
            self._say(f"magnitude={magnitude:g}: plain acc={means[0]:.3f}, robust acc={means[2]:.3f}")
        self._export_service.save_table(
            ["magnitude", "plain_accuracy", "plain_auc", "robust_accuracy", "robust_auc"],
            rows, "bench_rfda.csv")
        self._say(f"  output: {self._export_service.path_for('bench_rfda.csv')}")
        return self._status_of(plain_rep, robust_rep)

    # =========================================================================
    # Demo & property suites
    # =========================================================================

    def demo_example1(self, gamma: float, y1: float, y2: float,
                      steps: int = EXAMPLE1_STEPS, eta0: float = EXAMPLE1_ETA0) -> int:
        """Solve dual P0 dan P1 pada instance dua-blok, cetak optimum dan residu."""
        self._export_service.save_config(self._config)
        result = solve_example1(gamma, y1, y2, steps=steps, eta0=eta0)
        domain = Domain.interval(0.0, 1.0)
        self._export_service.save_solution(result.p0, self._config.output_grid,
                                           "example1_p0_solution.csv", domain)
        self._export_service.save_solution(result.p1, self._config.output_grid,
                                           "example1_p1_solution.csv", domain)
        self._export_service.save_trace(result.report0, "example1_p0_trace.csv")
        self._export_service.save_trace(result.report1, "example1_p1_trace.csv")

        self._say(f"P0* = {result.p0_value:.10g}")
        self._say(f"P1* = {result.p1_value:.10g}")
        self._say(f"|P0* - P1*/Gamma| = {result.residual:.3g} (delta = {result.delta:.3g})")
        self._say(f"support measure of X0 = {result.p0.l0:.6g}")
        self._say(f"  output: {self._export_service.get_output_folder()}")
        return self._status_of(result.report0, result.report1)

    def check_properties(self, suite: str) -> int:
        """Jalankan suite invarian; exit 0 bila semua lulus."""
        self._export_service.save_config(self._config)
        names = SUITES if suite == "all" else (suite,)
        if any(name not in SUITES for name in names):
            raise DomainError(f"unknown suite {suite!r}; choose one of {SUITES}")

        results = []
        for name in names:
            results.extend(run_suite(name, seed=self._config.seed))
        for res in results:
            self._say(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
        self._export_service.save_table(
            ["property", "passed", "detail"],
            [[res.name, "true" if res.passed else "false", res.detail] for res in results],
            f"properties_{suite}.csv")
        failed = sum(not res.passed for res in results)
        self._say(f"{len(results) - failed}/{len(results)} properties passed")
        return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def _nan_if_none(value: Optional[float]) -> float:
    return math.nan if value is None else float(value)
