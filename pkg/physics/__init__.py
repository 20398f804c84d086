"""
Physics package: small-matrix linear algebra, the PT Hamiltonian model and
its two-qubit dilation.
"""

from physics.pt_model import EXPERIMENT_PARAMS, EXPERIMENT_TIMES, Phase, PTParams

__all__ = ['PTParams', 'Phase', 'EXPERIMENT_PARAMS', 'EXPERIMENT_TIMES']
