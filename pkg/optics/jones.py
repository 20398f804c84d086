"""
Jones calculus for half- and quarter-wave plates.

Conventions (global phases dropped):
- HWP at fast-axis angle h: [[cos 2h, sin 2h], [sin 2h, -cos 2h]]
- QWP at 0 deg: diag(1, i); at angle q: R(q) diag(1, i) R(-q)
- A chain is applied in propagation order, so its matrix is J_n ... J_2 J_1.
"""

import logging
import math
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from physics.linalg import I2, Op2

logger = logging.getLogger(__name__)


class PlateKind(str, Enum):
    HWP = "HWP"
    QWP = "QWP"


class WaveplateSetting(BaseModel):
    """A single wave plate in the polarization path."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    kind: PlateKind = Field(description="Half- or quarter-wave plate")
    angle_deg: float = Field(gt=-90.0, le=90.0, description="Fast-axis angle from horizontal (degrees)")

    def __str__(self) -> str:
        return f"{self.kind.value}@{self.angle_deg + 0.0!r}"


class ElementChain(BaseModel):
    """Wave plates in propagation order."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    elements: Tuple[WaveplateSetting, ...] = Field(default=())

    def __str__(self) -> str:
        return format_chain(self)


def normalize_angle_deg(angle: float) -> float:
    """Map an angle into (-90, 90]; plate matrices repeat every 180 deg."""
    wrapped = angle - 180.0 * math.ceil((angle - 90.0) / 180.0)
    return wrapped + 0.0


def plate(kind: str, angle_deg: float) -> WaveplateSetting:
    return WaveplateSetting(kind=PlateKind(kind), angle_deg=normalize_angle_deg(angle_deg))


def chain_of(*specs: Tuple[str, float]) -> ElementChain:
    """ElementChain from (kind, angle_deg) pairs."""
    return ElementChain(elements=tuple(plate(kind, angle) for kind, angle in specs))


def _rotation(rad: float) -> np.ndarray:
    c, s = math.cos(rad), math.sin(rad)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def hwp_matrix(angle_deg: float) -> Op2:
    two_h = 2.0 * math.radians(angle_deg)
    c, s = math.cos(two_h), math.sin(two_h)
    return np.array([[c, s], [s, -c]], dtype=np.complex128)


def qwp_matrix(angle_deg: float) -> Op2:
    rot = _rotation(math.radians(angle_deg))
    return rot @ np.diag([1.0, 1j]) @ rot.T


_MATRIX = {PlateKind.HWP: hwp_matrix, PlateKind.QWP: qwp_matrix}


def jones(w: WaveplateSetting) -> Op2:
    """
    Jones matrix of one wave plate.

    Args:
        w: Plate kind and fast-axis angle

    Returns:
        HWP [[cos 2a, sin 2a], [sin 2a, -cos 2a]] or QWP R(a) diag(1, i) R(-a)
    """
    return _MATRIX[w.kind](w.angle_deg)


def template_matrix(kinds: Sequence[PlateKind], angles_deg: Sequence[float]) -> Op2:
    """Matrix of plates of the given kinds and angles, first plate applied first."""
    result = I2.copy()
    for kind, angle in zip(kinds, angles_deg):
        result = _MATRIX[kind](angle) @ result
    return result


def chain_matrix(chain: ElementChain) -> Op2:
    """
    Combined Jones matrix of a chain.

    Args:
        chain: Plates in propagation order

    Returns:
        J_n ... J_2 J_1, the identity for an empty chain
    """
    return template_matrix([w.kind for w in chain.elements], [w.angle_deg for w in chain.elements])


def format_chain(chain: ElementChain) -> str:
    """'KIND@angle' strings joined by '->'."""
    return "->".join(str(w) for w in chain.elements)
