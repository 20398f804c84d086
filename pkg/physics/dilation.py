"""
Two-qubit unitary dilation of the PT evolution.

The circuit U4 . C(U3) . C(U2) . U1 acting on |0>_a |psi>_w leaves the ancilla
|0> branch equal to (c / sqrt 2) e^{-i t H_PT / hbar} |psi>_w, because

    cos(theta_a) U2 + sin(theta_a) U3 = c e^{-i t H_PT / hbar}.

Post-selecting the ancilla on |0> therefore realizes the non-unitary
evolution on the work qubit with success probability
(|c|^2 / 2) ||e^{-i t H / hbar} psi||^2.

Angles are evaluated through the omega-normalized quantities

    X = cos(omega tau / 2),  g = sin(omega tau / 2) / omega,  tau = t / hbar,

which are even in omega, hence real in both PT phases and finite at the
exceptional point. With Y = -(mu + s) g, Z = q g, q = sqrt((mu - s)^2 + 4 r^2 sin^2 theta)
and N^2 = X^2 + Y^2 + Z^2 (the printed denominator divided by omega^2):

    theta_a  = atan2(Z, sqrt(X^2 + Y^2))
    theta_w1 = atan2(Y, X)
    theta_w2 = atan2(-(mu - s), 2 r sin theta)
    c        = e^{i tau r cos theta} / N
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
from scipy.linalg import block_diag

from physics.linalg import (
    HADAMARD,
    I2,
    KET0,
    Ket2,
    Ket4,
    Op2,
    Op4,
    as_array,
    cos_sinc,
    frobenius,
    kron2,
    kron_ket,
)
from physics.pt_model import PTParams, derive, evolve, omega_squared, propagator
from utils.errors import (
    DegenerateDenominator,
    InvalidArgument,
    NonFiniteInput,
    PostselectionImpossible,
)

logger = logging.getLogger(__name__)

DENOM_TOL = 1e-12
POSTSELECT_THRESHOLD = 1e-14
NORMALIZED_TOL = 1e-12


@dataclass(frozen=True)
class DilationAngles:
    theta_a: float
    theta_w1: float
    theta_w2: float
    c: complex


@dataclass(frozen=True, eq=False)
class DilationCircuit:
    u1: Op4
    cu2: Op4
    cu3: Op4
    u4: Op4

    def gates(self) -> Tuple[Op4, Op4, Op4, Op4]:
        """Gates in application order."""
        return self.u1, self.cu2, self.cu3, self.u4

    def unitary(self) -> Op4:
        """Full 4x4 circuit operator U4 . C(U3) . C(U2) . U1."""
        return self.u4 @ self.cu3 @ self.cu2 @ self.u1


class AnglePairs(NamedTuple):
    """(cos, sin) pairs of theta_a, theta_w1, theta_w2 as printed."""

    a: Tuple[float, float]
    w1: Tuple[float, float]
    w2: Tuple[float, float]


def _tau(p: PTParams, t: float) -> float:
    tau = float(t) / p.hbar
    if not math.isfinite(tau):
        raise NonFiniteInput(f"time must be finite, got {t!r}")
    return tau


def angles(p: PTParams, t: float) -> DilationAngles:
    """
    Circuit angles and the coefficient c for evolution time t.

    Args:
        p: Hamiltonian parameters, any phase including the exceptional point
        t: Evolution time

    Returns:
        DilationAngles with cos(theta_a) U2 + sin(theta_a) U3 = c e^{-i t H / hbar}

    Raises:
        DegenerateDenominator: N^2 vanishes or overflows
    """
    tau = _tau(p, t)
    r_sin = p.r * math.sin(p.theta)

    try:
        cos_half, sinc_half = cos_sinc(omega_squared(p) * tau * tau / 4.0)
    except OverflowError as e:
        raise DegenerateDenominator(f"dilation normalization overflows at t={t} for {p!r}") from e
    x = cos_half.real
    g = 0.5 * tau * sinc_half.real
    y = -(p.mu + p.s) * g
    z = math.hypot(p.mu - p.s, 2.0 * r_sin) * g

    norm_sq = x * x + y * y + z * z
    if not math.isfinite(norm_sq) or norm_sq <= DENOM_TOL:
        raise DegenerateDenominator(
            f"dilation denominator vanishes at t={t} for {p!r} (N^2={norm_sq})"
        )

    result = DilationAngles(
        theta_a=math.atan2(z, math.hypot(x, y)),
        theta_w1=math.atan2(y, x),
        theta_w2=math.atan2(-(p.mu - p.s), 2.0 * r_sin),
        c=cmath.exp(1j * tau * p.r * math.cos(p.theta)) / math.sqrt(norm_sq),
    )
    logger.debug(f"angles(t={t}) -> {result}")
    return result


def printed_angle_pairs(p: PTParams, t: float) -> AnglePairs:
    """
    Evaluate the printed square-root formulas for the three (cos, sin) pairs.

    omega is complex in the broken phase; the square roots are taken on ratios
    that are real and the branch is fixed by sqrt(omega^2) = omega, so every
    pair comes out real. Unlike ``angles`` this keeps cos(theta_w1) >= 0, so
    the two agree only while cos(omega tau / 2) > 0.
    """
    tau = _tau(p, t)
    omega = derive(p).omega
    plus_sq = (p.mu + p.s) ** 2
    q = math.hypot(p.mu - p.s, 2.0 * p.r * math.sin(p.theta))

    half = omega * tau / 2.0
    cos_h = cmath.cos(half)
    sin_h = cmath.sin(half)
    denom = omega ** 2 * cmath.cos(omega * tau) + 2.0 * plus_sq * sin_h ** 2
    scale = max(1.0, abs(omega) ** 2, plus_sq)
    if abs(denom) <= DENOM_TOL * scale or q == 0.0:
        raise DegenerateDenominator(f"printed angle formulas are singular at t={t} for {p!r}")

    cos_a = math.sqrt(max(0.0, ((omega ** 2 * cos_h ** 2 + plus_sq * sin_h ** 2) / denom).real))
    sin_a = (q * (sin_h / omega) / cmath.sqrt(denom / omega ** 2)).real

    if cos_h == 0:
        cos_w1 = 0.0
        sin_w1 = -math.copysign(1.0, (p.mu + p.s) * (sin_h / omega).real)
    else:
        tan_over_omega = sin_h / cos_h / omega
        cos_w1 = math.sqrt(max(0.0, (1.0 / (1.0 + plus_sq * tan_over_omega ** 2)).real))
        sin_w1 = (-(p.mu + p.s) * tan_over_omega).real * cos_w1

    cos_w2 = 2.0 * p.r * math.sin(p.theta) / q
    sin_w2 = -(p.mu - p.s) / q
    return AnglePairs(a=(cos_a, sin_a), w1=(cos_w1, sin_w1), w2=(cos_w2, sin_w2))


def u2_matrix(theta_w1: float) -> Op2:
    """[[cos, i sin], [i sin, cos]] of theta_w1."""
    c, s = math.cos(theta_w1), math.sin(theta_w1)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)


def u3_matrix(theta_w2: float) -> Op2:
    """[[cos, -i sin], [i sin, -cos]] of theta_w2; sigma_z at theta_w2 = 0."""
    c, s = math.cos(theta_w2), math.sin(theta_w2)
    return np.array([[c, -1j * s], [1j * s, -c]], dtype=np.complex128)


def ancilla_rotation(theta_a: float) -> Op2:
    c, s = math.cos(theta_a), math.sin(theta_a)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def lcu_block(a: DilationAngles) -> Op2:
    """cos(theta_a) U2 + sin(theta_a) U3: the operator applied on the ancilla |0> branch (times sqrt 2)."""
    return math.cos(a.theta_a) * u2_matrix(a.theta_w1) + math.sin(a.theta_a) * u3_matrix(a.theta_w2)


def build_circuit(a: DilationAngles) -> DilationCircuit:
    """
    Assemble the four two-qubit gates.

    Args:
        a: Angles from ``angles``

    Returns:
        DilationCircuit with U1 = R(theta_a) x I, C(U2) on ancilla |0>,
        C(U3) on ancilla |1> and U4 = H x I
    """
    return DilationCircuit(
        u1=kron2(ancilla_rotation(a.theta_a), I2),
        cu2=block_diag(u2_matrix(a.theta_w1), I2).astype(np.complex128),
        cu3=block_diag(I2, u3_matrix(a.theta_w2)).astype(np.complex128),
        u4=kron2(HADAMARD, I2),
    )


def run_circuit(p: PTParams, t: float, psi_w=KET0) -> Ket4:
    """
    Simulate the dilation circuit on |0>_a |psi_w>.

    Args:
        p: Hamiltonian parameters
        t: Evolution time
        psi_w: Normalized work-qubit ket

    Returns:
        Final two-qubit ket after U1, C(U2), C(U3), U4 in that order

    Raises:
        InvalidArgument: psi_w is not normalized
    """
    psi_w = as_array(psi_w, (2,), "psi_w")
    if abs(float(np.linalg.norm(psi_w)) - 1.0) > NORMALIZED_TOL:
        raise InvalidArgument("psi_w must be normalized")

    state = kron_ket(KET0, psi_w)
    for gate in build_circuit(angles(p, t)).gates():
        state = gate @ state
    return state


def postselect(phi) -> Tuple[Ket2, float]:
    """
    Condition a two-qubit ket on ancilla |0>.

    Args:
        phi: Length-4 ket in |a w> order

    Returns:
        (normalized work ket, success probability)

    Raises:
        PostselectionImpossible: the ancilla |0> branch is numerically zero
    """
    phi = as_array(phi, (4,), "phi")
    branch = phi[:2]
    norm_sq = float(np.vdot(branch, branch).real)
    if math.sqrt(norm_sq) < POSTSELECT_THRESHOLD:
        raise PostselectionImpossible(f"ancilla |0> component has norm {math.sqrt(norm_sq):.3e}")
    return branch / math.sqrt(norm_sq), norm_sq


def lcu_residual(p: PTParams, t: float) -> float:
    """
    Check the LCU identity at one time.

    Args:
        p: Hamiltonian parameters
        t: Evolution time

    Returns:
        Frobenius norm of cos(theta_a) U2 + sin(theta_a) U3 - c e^{-i t H / hbar}
    """
    a = angles(p, t)
    return frobenius(lcu_block(a) - a.c * propagator(p, t))


def success_probability(p: PTParams, t: float, psi_w=KET0) -> float:
    """
    Post-selection success probability, read off the simulated circuit.

    Returns:
        ||ancilla |0> branch||^2, equal to (|c|^2 / 2) ||e^{-i t H / hbar} psi_w||^2
    """
    return postselect(run_circuit(p, t, psi_w))[1]


def success_probability_formula(p: PTParams, t: float, psi_w=KET0) -> float:
    """(|c|^2 / 2) ||e^{-i t H / hbar} psi_w||^2."""
    evolved = evolve(p, t, psi_w)
    return 0.5 * abs(angles(p, t).c) ** 2 * float(np.vdot(evolved, evolved).real)


def postselected_state(p: PTParams, t: float, psi_w=KET0) -> Ket2:
    return postselect(run_circuit(p, t, psi_w))[0]


def postselected_p0(p: PTParams, t: float) -> float:
    """P(|0>_w) measured on the post-selected circuit output."""
    return float(abs(postselected_state(p, t)[0]) ** 2)
