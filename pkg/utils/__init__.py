from .errors import (
    ConfigError,
    DecompositionFailed,
    DegenerateDenominator,
    DegenerateInput,
    InvalidArgument,
    InvalidValue,
    MissingField,
    NonFiniteInput,
    PostselectionImpossible,
    PTSimError,
)
from .output_handler import density_columns, format_value, save_csv

# utils.config is imported directly: it depends on physics, which depends on utils.errors.
__all__ = [
    'PTSimError',
    'NonFiniteInput',
    'InvalidArgument',
    'DegenerateInput',
    'DegenerateDenominator',
    'PostselectionImpossible',
    'DecompositionFailed',
    'ConfigError',
    'MissingField',
    'InvalidValue',
    'density_columns',
    'format_value',
    'save_csv',
]
