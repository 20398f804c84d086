"""
Optics package: Jones matrices of wave plates and compilation of the dilation
gates to beam-splitter ratios and wave-plate chains.
"""

from optics.jones import ElementChain, PlateKind, WaveplateSetting

__all__ = ['ElementChain', 'PlateKind', 'WaveplateSetting']
