"""
Tomography package: simulated Pauli measurements, state reconstruction and
Monte Carlo uncertainties.
"""

from tomography.measurement import CountData, PauliSetting

__all__ = ['CountData', 'PauliSetting']
