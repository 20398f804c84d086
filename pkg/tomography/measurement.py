"""
Single-qubit Pauli tomography: Born probabilities, simulated photon counts and
linear-inversion reconstruction with a physicality projection.
"""

import logging
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from physics.linalg import I2, PAULI, Density2, require_density
from utils.errors import InvalidArgument

logger = logging.getLogger(__name__)


class PauliSetting(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


AXES: Tuple[PauliSetting, ...] = (PauliSetting.X, PauliSetting.Y, PauliSetting.Z)


class AxisCounts(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_plus: int = Field(ge=0, description="Clicks on the +1 eigenstate")
    n_minus: int = Field(ge=0, description="Clicks on the -1 eigenstate")


class CountData(BaseModel):
    """Counts for the three Pauli settings, all with the same number of shots."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    axes: Dict[PauliSetting, AxisCounts]
    shots_per_axis: int = Field(gt=0)

    @model_validator(mode="after")
    def _consistent(self) -> "CountData":
        missing = [axis.value for axis in AXES if axis not in self.axes]
        if missing:
            raise ValueError(f"missing counts for axes {missing}")
        for axis, pair in self.axes.items():
            if pair.n_plus + pair.n_minus != self.shots_per_axis:
                raise ValueError(
                    f"axis {axis.value}: {pair.n_plus} + {pair.n_minus} != {self.shots_per_axis}"
                )
        return self


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed for item ``index`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def born_probabilities(rho, setting: PauliSetting) -> Tuple[float, float]:
    """
    Outcome probabilities for one Pauli measurement.

    Args:
        rho: Valid 2x2 density matrix
        setting: Measurement axis X, Y or Z

    Returns:
        (p_plus, p_minus) = ((1 + <sigma>) / 2, (1 - <sigma>) / 2)
    """
    rho = require_density(rho)
    expectation = float(np.trace(rho @ PAULI[PauliSetting(setting).value]).real)
    p_plus = min(1.0, max(0.0, 0.5 * (1.0 + expectation)))
    return p_plus, 1.0 - p_plus


def sample_counts(rho, shots: int, seed: int) -> CountData:
    """
    Simulate photon counts for the three Pauli settings.

    Args:
        rho: State being measured
        shots: Shots per axis, > 0
        seed: Seed that fully determines the draws

    Returns:
        CountData with one independent binomial draw per axis
    """
    if shots <= 0:
        raise InvalidArgument(f"shots must be > 0, got {shots}")
    rng = np.random.default_rng(seed)
    axes = {}
    for axis in AXES:
        p_plus, _ = born_probabilities(rho, axis)
        n_plus = int(rng.binomial(shots, p_plus))
        axes[axis] = AxisCounts(n_plus=n_plus, n_minus=shots - n_plus)
    return CountData(axes=axes, shots_per_axis=shots)


def exact_counts(rho, shots: int) -> CountData:
    """Expected counts rounded to integers (noiseless data)."""
    if shots <= 0:
        raise InvalidArgument(f"shots must be > 0, got {shots}")
    axes = {}
    for axis in AXES:
        n_plus = int(round(born_probabilities(rho, axis)[0] * shots))
        axes[axis] = AxisCounts(n_plus=n_plus, n_minus=shots - n_plus)
    return CountData(axes=axes, shots_per_axis=shots)


def stokes_vector(counts: CountData) -> np.ndarray:
    shots = counts.shots_per_axis
    return np.array([(counts.axes[a].n_plus - counts.axes[a].n_minus) / shots for a in AXES])


def density_from_stokes(stokes) -> Density2:
    """
    (I + s.sigma) / 2, projected onto the closest physical state when a
    negative eigenvalue appears (eigenvalues clipped at 0, trace renormalized).
    """
    sx, sy, sz = (float(v) for v in stokes)
    rho = 0.5 * (I2 + sx * PAULI["X"] + sy * PAULI["Y"] + sz * PAULI["Z"])
    eigenvalues, vectors = np.linalg.eigh(rho)
    if eigenvalues.min() >= 0.0:
        return rho
    clipped = np.clip(eigenvalues, 0.0, None)
    clipped /= clipped.sum()
    projected = (vectors * clipped) @ vectors.conj().T
    return 0.5 * (projected + projected.conj().T)


def reconstruct(counts: CountData) -> Density2:
    """
    Linear-inversion state estimate from counts.

    Args:
        counts: Counts for X, Y and Z

    Returns:
        Physical density matrix (I + s.sigma) / 2, projected if unphysical
    """
    return density_from_stokes(stokes_vector(counts))


def counts_rows(counts: CountData) -> List[list]:
    return [
        [axis.value, counts.axes[axis].n_plus, counts.axes[axis].n_minus, counts.shots_per_axis]
        for axis in AXES
    ]
