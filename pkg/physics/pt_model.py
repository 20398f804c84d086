"""
PT-symmetric two-level Hamiltonian and its exact non-unitary evolution.

H_PT = [[r e^{i theta}, s], [mu, r e^{-i theta}]] with
omega = 2 sqrt(s mu - r^2 sin^2 theta). The eigenvalues are
r cos(theta) +- omega / 2: real while omega^2 > 0 (unbroken phase), a
complex-conjugate pair while omega^2 < 0 (broken phase), coalescing at the
exceptional point omega = 0.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from physics.linalg import (
    KET0,
    SIGMA_X,
    Density2,
    Ket2,
    Op2,
    as_array,
    expm2_closed,
    projector,
)
from utils.errors import DegenerateInput, NonFiniteInput

logger = logging.getLogger(__name__)

PHASE_TOL = 1e-10


class PTParams(BaseModel):
    """Parameter set of the PT Hamiltonian."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    r: float = Field(description="Diagonal gain/loss magnitude (energy units)")
    s: float = Field(description="Upper off-diagonal coupling (energy units)")
    mu: float = Field(description="Lower off-diagonal coupling (energy units)")
    theta: float = Field(description="Gain/loss phase angle (radians)")
    hbar: float = Field(default=1.0, gt=0, description="Reduced Planck constant (action units)")


class Phase(str, Enum):
    UNBROKEN = "unbroken"
    BROKEN = "broken"
    EXCEPTIONAL = "exceptional"


@dataclass(frozen=True)
class PTDerived:
    omega: complex
    omega_sq: float
    phase: Phase


EXPERIMENT_PARAMS = PTParams(r=2.0, s=1.0, mu=1.0, theta=math.pi / 8)
EXPERIMENT_TIMES: Tuple[float, ...] = (0.0, 0.7876, 0.9894, 1.5521)


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteInput(f"time must be finite, got {t!r}")
    return t


def h_pt(p: PTParams) -> Op2:
    """
    Build the PT Hamiltonian [[r e^{i theta}, s], [mu, r e^{-i theta}]].

    Args:
        p: Hamiltonian parameters

    Returns:
        Complex 2x2 matrix; Hermitian only when theta = 0 and s = mu
    """
    return np.array(
        [
            [p.r * cmath.exp(1j * p.theta), p.s],
            [p.mu, p.r * cmath.exp(-1j * p.theta)],
        ],
        dtype=np.complex128,
    )


def omega_squared(p: PTParams) -> float:
    """omega^2 = 4 (s mu - r^2 sin^2 theta), the squared eigenvalue splitting."""
    return 4.0 * (p.s * p.mu - (p.r * math.sin(p.theta)) ** 2)


def derive(p: PTParams, tol: float = PHASE_TOL) -> PTDerived:
    """
    Compute omega (principal branch) and classify the PT phase.

    Args:
        p: Hamiltonian parameters
        tol: |omega^2| at or below this counts as the exceptional point

    Returns:
        PTDerived with omega (imaginary in the broken phase), omega^2 and the phase
    """
    omega_sq = omega_squared(p)
    omega = cmath.sqrt(complex(omega_sq, 0.0))
    if omega_sq > tol:
        phase = Phase.UNBROKEN
    elif omega_sq < -tol:
        phase = Phase.BROKEN
    else:
        phase = Phase.EXCEPTIONAL
    return PTDerived(omega=omega, omega_sq=omega_sq, phase=phase)


def eigenvalues(p: PTParams) -> Tuple[complex, complex]:
    omega = derive(p).omega
    center = p.r * math.cos(p.theta)
    return center + omega / 2, center - omega / 2


def is_pt_symmetric(p: PTParams, tol: float = 1e-12) -> bool:
    """Whether sigma_x conj(H) sigma_x = H (parity sigma_x, time reversal = conjugation)."""
    h = h_pt(p)
    return bool(np.max(np.abs(SIGMA_X @ h.conj() @ SIGMA_X - h)) <= tol)


def propagator(p: PTParams, t: float) -> Op2:
    """e^{-i t H_PT / hbar}."""
    return expm2_closed(h_pt(p), -1j * _check_time(t) / p.hbar)


def evolve(p: PTParams, t: float, psi) -> Ket2:
    """
    Apply the non-unitary evolution e^{-i t H / hbar} to psi.

    Args:
        p: Hamiltonian parameters
        t: Evolution time (any finite value, negative included)
        psi: Work-qubit ket

    Returns:
        The unnormalized evolved ket; its norm is generally not preserved

    Raises:
        NonFiniteInput: t is not finite or the evolution overflows
    """
    psi = as_array(psi, (2,), "psi")
    return propagator(p, t) @ psi


def evolve_normalized(p: PTParams, t: float, psi) -> Ket2:
    out = evolve(p, t, psi)
    norm = float(np.linalg.norm(out))
    if norm == 0.0:
        raise DegenerateInput(f"evolved state has zero norm at t={t}")
    return out / norm


def norm_growth(p: PTParams, t: float) -> float:
    """||e^{-i t H / hbar}|0>||^2."""
    out = evolve(p, t, KET0)
    return float(np.vdot(out, out).real)


def p0(p: PTParams, t: float) -> float:
    """
    Population of |0>_w after evolving |0>_w for time t.

    Args:
        p: Hamiltonian parameters
        t: Evolution time

    Returns:
        |<0|e^{-itH/hbar}|0>|^2 divided by the squared norm of the evolved ket
    """
    out = evolve(p, t, KET0)
    norm_sq = float(np.vdot(out, out).real)
    if norm_sq == 0.0:
        raise DegenerateInput(f"evolved state has zero norm at t={t}")
    return float(abs(out[0]) ** 2 / norm_sq)


def p1(p: PTParams, t: float) -> float:
    """Population of |1>_w, 1 - p0."""
    return 1.0 - p0(p, t)


def rho_theory(p: PTParams, t: float) -> Density2:
    """
    Theoretical work-qubit state at time t.

    Args:
        p: Hamiltonian parameters
        t: Evolution time

    Returns:
        Pure density matrix of the normalized evolved |0>_w

    Raises:
        DegenerateInput: the evolved ket vanishes
    """
    out = evolve(p, t, KET0)
    if float(np.vdot(out, out).real) == 0.0:
        raise DegenerateInput(f"evolved state has zero norm at t={t}")
    return projector(out)
