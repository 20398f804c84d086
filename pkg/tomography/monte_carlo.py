"""
Monte Carlo error bars for reconstructed density matrices.

Each resample redraws the counts of every axis from a binomial with the
empirically observed rate and reconstructs the state again. Resample k uses
its own generator spawned from the run seed, so results do not depend on
iteration order.
"""

import logging
from dataclasses import dataclass

import numpy as np

from physics.linalg import Density2, fidelity_paper
from tomography.measurement import AXES, CountData, density_from_stokes, reconstruct
from utils.errors import InvalidArgument

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TomoEstimate:
    rho: Density2
    element_std: np.ndarray  # std of each complex entry, sqrt(var re + var im)
    re_std: np.ndarray
    im_std: np.ndarray
    fidelity: float
    fidelity_std: float


def resample_stokes(counts: CountData, rng: np.random.Generator) -> np.ndarray:
    shots = counts.shots_per_axis
    rates = [counts.axes[axis].n_plus / shots for axis in AXES]
    n_plus = rng.binomial(shots, rates)
    return 2.0 * n_plus / shots - 1.0


def monte_carlo(counts: CountData, resamples: int, seed: int, rho_ref) -> TomoEstimate:
    """
    Monte Carlo error bars for a tomographic reconstruction.

    Args:
        counts: Observed counts
        resamples: Number of binomial resamples, >= 2
        seed: Seed; each resample draws from its own spawned child
        rho_ref: Reference state for the fidelity

    Returns:
        TomoEstimate with the reconstruction from the observed counts, its
        fidelity and the standard deviations over the resamples
    """
    if resamples < 2:
        raise InvalidArgument(f"resamples must be >= 2, got {resamples}")

    children = np.random.SeedSequence(seed).spawn(resamples)
    samples = np.empty((resamples, 2, 2), dtype=np.complex128)
    fidelities = np.empty(resamples)
    for k, child in enumerate(children):
        rho_k = density_from_stokes(resample_stokes(counts, np.random.default_rng(child)))
        samples[k] = rho_k
        fidelities[k] = fidelity_paper(rho_k, rho_ref)

    re_std = samples.real.std(axis=0, ddof=1)
    im_std = samples.imag.std(axis=0, ddof=1)
    rho = reconstruct(counts)
    estimate = TomoEstimate(
        rho=rho,
        element_std=np.sqrt(re_std ** 2 + im_std ** 2),
        re_std=re_std,
        im_std=im_std,
        fidelity=fidelity_paper(rho, rho_ref),
        fidelity_std=float(fidelities.std(ddof=1)),
    )
    logger.debug(f"monte_carlo: {resamples} resamples, fidelity {estimate.fidelity:.6f} +- {estimate.fidelity_std:.2e}")
    return estimate
