"""
Compile dilation gates to photonic element settings.

- U1 (ancilla rotation) -> NPBS with T = cos^2(theta_a), R = sin^2(theta_a)
- U2 -> HWP@0 -> QWP@0 -> HWP@phi -> QWP@0 -> HWP@0, phi = -theta_w1 / 2
- U3 -> QWP@0 -> HWP@0 -> QWP@0 -> HWP@0 (= sigma_z) when mu = s, otherwise a
  numerically fitted QWP -> HWP -> QWP chain
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize

from optics.jones import ElementChain, PlateKind, chain_of, format_chain, template_matrix
from physics.dilation import DilationAngles, angles, u3_matrix
from physics.linalg import Op2, phase_distance
from physics.pt_model import PTParams
from utils.errors import DecompositionFailed

logger = logging.getLogger(__name__)

SINGLE_HWP = (PlateKind.HWP,)
QWP_HWP_QWP = (PlateKind.QWP, PlateKind.HWP, PlateKind.QWP)
TEMPLATES = (SINGLE_HWP, QWP_HWP_QWP)

# Multi-start points (degrees) for the template fit; shorter templates use a prefix.
DEFAULT_SEEDS: Tuple[Tuple[float, float, float], ...] = (
    (0.0, 0.0, 0.0),
    (45.0, 22.5, -45.0),
    (-45.0, 22.5, 45.0),
    (30.0, 60.0, -30.0),
    (60.0, -30.0, 15.0),
    (-60.0, 45.0, 30.0),
    (15.0, -60.0, -75.0),
    (80.0, 10.0, -20.0),
)

ACCEPT_RESIDUAL = 1e-10
MAX_RESIDUAL = 1e-6
FIXED_U3_TOL = 1e-12

U3_FIXED_CHAIN = chain_of(("QWP", 0.0), ("HWP", 0.0), ("QWP", 0.0), ("HWP", 0.0))


class NpbsSpec(BaseModel):
    """Non-polarizing beam splitter realizing the ancilla rotation."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    T: float = Field(ge=0.0, description="Transmittance")
    R: float = Field(ge=0.0, description="Reflectance")

    @model_validator(mode="after")
    def _lossless(self) -> "NpbsSpec":
        if abs(self.T + self.R - 1.0) > 1e-9:
            raise ValueError(f"T + R must equal 1, got {self.T + self.R}")
        return self


@dataclass(frozen=True)
class Table1Row:
    time: float
    npbs: NpbsSpec
    u2_chain: ElementChain
    u2_phi_deg: float
    u3_chain: ElementChain


TABLE1_HEADER = ["time", "npbs_T", "npbs_R", "u2_chain", "u2_phi_deg", "u3_chain"]


def npbs_ratio(spec: NpbsSpec) -> float:
    """T/R, infinite for a fully transmitting splitter."""
    return math.inf if spec.R == 0.0 else spec.T / spec.R


def compile_u1(a: DilationAngles) -> NpbsSpec:
    """
    Beam splitter realizing the ancilla rotation.

    Args:
        a: Dilation angles

    Returns:
        NpbsSpec with T = cos^2(theta_a) and R = sin^2(theta_a)
    """
    return NpbsSpec(T=math.cos(a.theta_a) ** 2, R=math.sin(a.theta_a) ** 2)


def u2_hwp_angle_deg(a: DilationAngles) -> float:
    """Central HWP angle phi = -theta_w1 / 2 in (-45, 45]; a 90 deg shift only flips the global sign."""
    phi = -math.degrees(a.theta_w1) / 2.0
    return phi - 90.0 * math.ceil((phi - 45.0) / 90.0) + 0.0


def compile_u2(a: DilationAngles) -> ElementChain:
    """
    Wave-plate chain for U2(theta_w1).

    Args:
        a: Dilation angles

    Returns:
        HWP(0) QWP(0) HWP(phi) QWP(0) HWP(0), equal to U2 up to global phase
    """
    return chain_of(
        ("HWP", 0.0),
        ("QWP", 0.0),
        ("HWP", u2_hwp_angle_deg(a)),
        ("QWP", 0.0),
        ("HWP", 0.0),
    )


def _fit_template(
    target: Op2, kinds: Sequence[PlateKind], seeds: Sequence[Sequence[float]]
) -> Tuple[List[float], float]:
    def objective(x: np.ndarray) -> float:
        return phase_distance(template_matrix(kinds, x), target)

    best_x: List[float] = [0.0] * len(kinds)
    best = math.inf
    for seed in seeds:
        x0 = np.asarray(seed[: len(kinds)], dtype=float)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 4000},
        )
        value = objective(res.x)
        if value < best:
            best, best_x = value, [float(v) for v in res.x]
        if best <= ACCEPT_RESIDUAL:
            break
    return best_x, best


def decompose_unitary(
    target: Op2,
    seeds: Sequence[Sequence[float]] = DEFAULT_SEEDS,
    templates: Sequence[Sequence[PlateKind]] = TEMPLATES,
) -> Tuple[ElementChain, float]:
    """
    Fit a 2x2 unitary (up to global phase) with the first template that
    reaches ACCEPT_RESIDUAL, else return the best fit found. The residual is
    the phase-invariant distance 1 - |Tr(A^dag B)| / 2.
    """
    best_chain: Optional[ElementChain] = None
    best = math.inf
    for kinds in templates:
        x, residual = _fit_template(np.asarray(target, dtype=np.complex128), kinds, seeds)
        if residual < best:
            best = residual
            best_chain = chain_of(*[(k.value, angle) for k, angle in zip(kinds, x)])
        if residual <= ACCEPT_RESIDUAL:
            break
    logger.debug(f"decompose_unitary -> {format_chain(best_chain)} (residual {best:.3e})")
    return best_chain, best


def compile_u3(a: DilationAngles, seeds: Sequence[Sequence[float]] = DEFAULT_SEEDS) -> ElementChain:
    """
    Wave-plate chain for U3(theta_w2).

    Args:
        a: Dilation angles
        seeds: Starting angles for the template fit

    Returns:
        The fixed sigma_z chain when sin(theta_w2) = 0, else a fitted chain

    Raises:
        DecompositionFailed: no template fits within MAX_RESIDUAL
    """
    if abs(math.sin(a.theta_w2)) < FIXED_U3_TOL:
        return U3_FIXED_CHAIN
    chain, residual = decompose_unitary(u3_matrix(a.theta_w2), seeds)
    if residual > MAX_RESIDUAL:
        raise DecompositionFailed(f"no wave-plate chain found for theta_w2={a.theta_w2}", residual)
    return chain


def table1_report(p: PTParams, times: Sequence[float]) -> List[Table1Row]:
    """
    Optical settings for each evolution time.

    Args:
        p: Hamiltonian parameters
        times: Evolution times, one row each

    Returns:
        Table1Row list; the U3 chain depends only on p and repeats on every row
    """
    u3_chain = compile_u3(angles(p, 0.0))
    rows = []
    for t in times:
        a = angles(p, t)
        rows.append(
            Table1Row(
                time=float(t),
                npbs=compile_u1(a),
                u2_chain=compile_u2(a),
                u2_phi_deg=u2_hwp_angle_deg(a),
                u3_chain=u3_chain,
            )
        )
    return rows


def table1_csv_rows(rows: Sequence[Table1Row]) -> List[list]:
    return [
        [row.time, row.npbs.T, row.npbs.R, format_chain(row.u2_chain), row.u2_phi_deg, format_chain(row.u3_chain)]
        for row in rows
    ]
