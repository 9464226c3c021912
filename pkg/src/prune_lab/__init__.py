"""Importance measures, pruning and the numerical experiments built on them."""

from .errors import (ConfigError, ContractError, DegenerateRegimeError, DimensionError,
                     DivergenceError, DomainError, PruneLabError, SingularMatrixError,
                     StructureError, UnsupportedOperation)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContractError", "DegenerateRegimeError", "DimensionError",
    "DivergenceError", "DomainError", "PruneLabError", "SingularMatrixError",
    "StructureError", "UnsupportedOperation", "__version__",
]
