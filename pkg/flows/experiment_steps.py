"""
Pipeline steps behind the CLI commands and the experiment Flow.

Every step takes a RunConfig, writes its CSV products into cfg.output_dir and
returns a status dictionary. Steps never raise: simulator errors are reported
with ``exit_code`` 1, configuration and IO errors with ``exit_code`` 2.
"""

import functools
import logging
import math
from datetime import datetime
from typing import Any, Callable, Dict

import numpy as np

from optics.compiler import TABLE1_HEADER, table1_csv_rows, table1_report
from physics.dilation import postselected_p0, success_probability
from physics.linalg import avg_abs_diff
from physics.pt_model import derive, p0, rho_theory
from physics.verification import run_verification
from tomography.measurement import counts_rows, derive_seed, sample_counts
from tomography.monte_carlo import monte_carlo
from utils.config import RunConfig
from utils.errors import ConfigError, PTSimError
from utils.output_handler import (
    COUNTS_HEADER,
    FIDELITIES_HEADER,
    FIG2_EXP_HEADER,
    FIG2_THEORY_HEADER,
    FIG3B_HEADER,
    density_columns,
    save_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

StepResult = Dict[str, Any]


def _io_failure(filename: str) -> StepResult:
    return {
        "status": "failed",
        "error": f"could not write {filename}",
        "error_type": "OSError",
        "exit_code": EXIT_CONFIG,
    }


def guarded_step(func: Callable[[RunConfig], StepResult]) -> Callable[[RunConfig], StepResult]:
    """Time a step and turn exceptions into status dictionaries."""

    @functools.wraps(func)
    def wrapper(cfg: RunConfig) -> StepResult:
        step_start = datetime.now()
        try:
            result = func(cfg)
        except ConfigError as e:
            logger.error(f"❌ {func.__name__} failed: {e}")
            result = {"status": "failed", "error": str(e), "error_type": type(e).__name__, "exit_code": EXIT_CONFIG}
        except PTSimError as e:
            logger.error(f"❌ {func.__name__} failed: {e}")
            result = {"status": "failed", "error": str(e), "error_type": type(e).__name__, "exit_code": EXIT_FAILURE}
        except OSError as e:
            logger.error(f"❌ {func.__name__} failed: {e}")
            result = {"status": "failed", "error": str(e), "error_type": type(e).__name__, "exit_code": EXIT_CONFIG}
        result["duration"] = (datetime.now() - step_start).total_seconds()
        return result

    return wrapper


@guarded_step
def verify(cfg: RunConfig) -> StepResult:
    derived = derive(cfg.params)
    logger.info(f"🔍 Verifying dilation identity (omega={derived.omega:.6g}, phase={derived.phase.value})")
    report = run_verification(cfg.params, cfg.time_points(), cfg.seed)
    result = {
        "status": "completed" if report.passed else "failed",
        "max_residual": report.max_residual,
        "max_fidelity_deficit": report.max_fidelity_deficit,
        "max_expm_difference": report.max_expm_difference,
        "suites": {name: suite.passed for name, suite in report.suites.items()},
        "exit_code": EXIT_OK if report.passed else EXIT_FAILURE,
    }
    if report.passed:
        logger.info(f"✅ Verification passed, max residual {report.max_residual:.3e}")
    else:
        logger.error(f"🚨 Verification failed, max residual {report.max_residual:.3e}")
    return result


@guarded_step
def evolve(cfg: RunConfig) -> StepResult:
    rows = [[t] + density_columns(rho_theory(cfg.params, t)) for t in cfg.time_points()]
    if not save_csv(cfg.output_dir, "fig2_theory.csv", FIG2_THEORY_HEADER, rows):
        return _io_failure("fig2_theory.csv")
    return {"status": "completed", "files": ["fig2_theory.csv"], "points": len(rows), "exit_code": EXIT_OK}


@guarded_step
def tomo(cfg: RunConfig) -> StepResult:
    exp_rows, fidelity_rows, count_rows = [], [], []
    fidelities, differences = [], []
    for index, t in enumerate(cfg.time_points()):
        truth = rho_theory(cfg.params, t)
        counts = sample_counts(truth, cfg.shots_per_axis, derive_seed(cfg.seed, 2 * index))
        estimate = monte_carlo(counts, cfg.mc_resamples, derive_seed(cfg.seed, 2 * index + 1), truth)

        stds = []
        for i in range(2):
            for j in range(2):
                stds.extend([float(estimate.re_std[i, j]), float(estimate.im_std[i, j])])
        exp_rows.append([t] + density_columns(estimate.rho) + stds)
        fidelity_rows.append([t, estimate.fidelity, estimate.fidelity_std])
        count_rows.extend([t] + row for row in counts_rows(counts))

        difference = avg_abs_diff(estimate.rho, truth)
        fidelities.append(estimate.fidelity)
        differences.append(difference)
        logger.info(
            f"  t={t}: fidelity {estimate.fidelity:.5f} +- {estimate.fidelity_std:.1e}, "
            f"avg |diff| {difference:.4f}"
        )

    for filename, header, rows in (
        ("fig2_exp.csv", FIG2_EXP_HEADER, exp_rows),
        ("fidelities.csv", FIDELITIES_HEADER, fidelity_rows),
        ("counts.csv", COUNTS_HEADER, count_rows),
    ):
        if not save_csv(cfg.output_dir, filename, header, rows):
            return _io_failure(filename)

    mean_fidelity = float(np.mean(fidelities))
    spread = float(np.std(fidelities, ddof=1)) if len(fidelities) > 1 else 0.0
    logger.info(f"📊 Average fidelity {mean_fidelity:.4f} +- {spread:.4f}")
    return {
        "status": "completed",
        "files": ["fig2_exp.csv", "fidelities.csv", "counts.csv"],
        "fidelities": fidelities,
        "mean_fidelity": mean_fidelity,
        "fidelity_spread": spread,
        "avg_abs_diffs": differences,
        "exit_code": EXIT_OK,
    }


@guarded_step
def sweep(cfg: RunConfig) -> StepResult:
    rows = []
    worst_gap = 0.0
    for t in cfg.sweep_points():
        theory = p0(cfg.params, t)
        postselected = postselected_p0(cfg.params, t)
        rows.append([t, theory, postselected, success_probability(cfg.params, t)])
        worst_gap = max(worst_gap, abs(theory - postselected))
    if not save_csv(cfg.output_dir, "fig3b.csv", FIG3B_HEADER, rows):
        return _io_failure("fig3b.csv")
    logger.info(f"📈 Swept {len(rows)} points, max |p0 theory - post-selected| {worst_gap:.3e}")
    return {
        "status": "completed" if math.isfinite(worst_gap) else "failed",
        "files": ["fig3b.csv"],
        "points": len(rows),
        "max_p0_gap": worst_gap,
        "exit_code": EXIT_OK if math.isfinite(worst_gap) else EXIT_FAILURE,
    }


@guarded_step
def table1(cfg: RunConfig) -> StepResult:
    rows = table1_report(cfg.params, cfg.time_points())
    if not save_csv(cfg.output_dir, "table1.csv", TABLE1_HEADER, table1_csv_rows(rows)):
        return _io_failure("table1.csv")
    for row in rows:
        logger.info(
            f"  t={row.time}: NPBS T/R={row.npbs.T:.4f}/{row.npbs.R:.4f}, "
            f"U2 HWP@{row.u2_phi_deg:.2f}, U3 {row.u3_chain}"
        )
    return {"status": "completed", "files": ["table1.csv"], "rows": len(rows), "exit_code": EXIT_OK}


STEPS: Dict[str, Callable[[RunConfig], StepResult]] = {
    "verify": verify,
    "evolve": evolve,
    "tomo": tomo,
    "sweep": sweep,
    "table1": table1,
}
