"""
Executable checks of the dilation identity.

Runs the LCU residual and post-selection fidelity checks over several
parameter families (the configured set, seeded random unbroken sets, a
broken-phase grid and the exceptional-point neighborhood) together with the
closed-form vs Taylor exponential comparison.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from physics.dilation import lcu_residual, postselect, run_circuit
from physics.linalg import expm2_closed, expm2_taylor, fidelity_paper, frobenius, projector
from physics.pt_model import PTParams, omega_squared, rho_theory
from utils.errors import PTSimError

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
FIDELITY_TOL = 1e-10
EXPM_TOL = 1e-9
MIN_SUCCESS = 1e-6


@dataclass
class SuiteResult:
    name: str
    points: int = 0
    max_residual: float = 0.0
    max_fidelity_deficit: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            not self.failures
            and self.max_residual < RESIDUAL_TOL
            and self.max_fidelity_deficit < FIDELITY_TOL
        )


@dataclass
class VerificationReport:
    suites: Dict[str, SuiteResult]
    max_expm_difference: float

    @property
    def max_residual(self) -> float:
        return max(s.max_residual for s in self.suites.values())

    @property
    def max_fidelity_deficit(self) -> float:
        return max(s.max_fidelity_deficit for s in self.suites.values())

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites.values()) and self.max_expm_difference < EXPM_TOL


def check_point(p: PTParams, t: float) -> Tuple[float, float]:
    """(LCU residual, 1 - fidelity of post-selected state vs exact evolution)."""
    residual = lcu_residual(p, t)
    ket, success = postselect(run_circuit(p, t))
    deficit = 0.0
    if success > MIN_SUCCESS:
        deficit = 1.0 - fidelity_paper(projector(ket), rho_theory(p, t))
    return residual, abs(deficit)


def run_suite(name: str, cases: Iterable[Tuple[PTParams, float]]) -> SuiteResult:
    result = SuiteResult(name=name)
    for p, t in cases:
        result.points += 1
        try:
            residual, deficit = check_point(p, t)
        except PTSimError as e:
            result.failures.append(f"{p!r} t={t}: {type(e).__name__}: {e}")
            continue
        if not (math.isfinite(residual) and math.isfinite(deficit)):
            result.failures.append(f"{p!r} t={t}: non-finite check value")
            continue
        result.max_residual = max(result.max_residual, residual)
        result.max_fidelity_deficit = max(result.max_fidelity_deficit, deficit)
    return result


def random_unbroken_params(rng: np.random.Generator, count: int, min_omega_sq: float = 0.05) -> List[PTParams]:
    """Rejection-sample parameter sets with omega^2 >= min_omega_sq."""
    params: List[PTParams] = []
    while len(params) < count:
        p = PTParams(
            r=float(rng.uniform(0.0, 3.0)),
            s=float(rng.uniform(0.3, 3.0)),
            mu=float(rng.uniform(0.3, 3.0)),
            theta=float(rng.uniform(-math.pi, math.pi)),
        )
        if omega_squared(p) >= min_omega_sq:
            params.append(p)
    return params


def unbroken_cases(seed: int, count: int, times_per_set: int) -> List[Tuple[PTParams, float]]:
    rng = np.random.default_rng(seed)
    cases = []
    for p in random_unbroken_params(rng, count):
        period = 2.0 * math.pi * p.hbar / math.sqrt(omega_squared(p))
        cases.extend((p, float(t)) for t in rng.uniform(0.0, period, size=times_per_set))
    return cases


def broken_cases() -> List[Tuple[PTParams, float]]:
    p = PTParams(r=2.0, s=1.0, mu=1.0, theta=math.pi / 2)
    return [(p, float(t)) for t in np.linspace(0.0, 1.0, 11)]


def exceptional_cases() -> List[Tuple[PTParams, float]]:
    """|omega| = 2 sin(delta) < 1e-3 around r sin(theta) = sqrt(s mu) = 1."""
    cases = []
    for delta in (0.0, 1e-8, 1e-6, 1e-4, 4e-4):
        p = PTParams(r=1.0, s=1.0, mu=1.0, theta=math.pi / 2 - delta)
        cases.extend((p, float(t)) for t in np.linspace(0.0, 2.0, 9))
    return cases


def expm_agreement(seed: int, count: int = 100) -> float:
    """Largest Frobenius gap between closed-form and Taylor exponentials on random matrices."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        m = rng.uniform(-2, 2, (2, 2)) + 1j * rng.uniform(-2, 2, (2, 2))
        if k % 4 == 0:
            # push the traceless part towards nilpotent: M'^2 ~ 0
            m[0, 1] = 1.0 + rng.uniform(0, 1)
            m[1, 0] = -(m[0, 0] - m[1, 1]) ** 2 / (4 * m[0, 1]) + 1e-7 * rng.uniform(-1, 1)
        worst = max(worst, frobenius(expm2_closed(m, -0.7j) - expm2_taylor(m, -0.7j, 1e-13)))
    return worst


def run_verification(
    params: PTParams,
    times: Sequence[float],
    seed: int,
    random_sets: int = 20,
    times_per_set: int = 10,
) -> VerificationReport:
    suites = {
        "configured": run_suite("configured", [(params, float(t)) for t in times]),
        "unbroken_random": run_suite("unbroken_random", unbroken_cases(seed, random_sets, times_per_set)),
        "broken": run_suite("broken", broken_cases()),
        "exceptional": run_suite("exceptional", exceptional_cases()),
    }
    report = VerificationReport(suites=suites, max_expm_difference=expm_agreement(seed))

    for suite in suites.values():
        level = logging.INFO if suite.passed else logging.ERROR
        logger.log(
            level,
            f"  {suite.name}: {suite.points} points, max residual {suite.max_residual:.3e}, "
            f"max fidelity deficit {suite.max_fidelity_deficit:.3e}, failures {len(suite.failures)}",
        )
        for failure in suite.failures:
            logger.error(f"    {failure}")
    logger.info(f"  closed vs Taylor exponential: max difference {report.max_expm_difference:.3e}")
    return report
