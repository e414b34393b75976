"""Gaussian double-bubble model: tripod clusters in the plane of measure vectors."""
__version__ = "0.1.0"

from .errors import ConditioningError, DomainError, NumericalError, SearchFailure, SolverError
from .grid import GridCluster
from .tripod import invert_volume_map, model_profile, perimeter, volume_map

__all__ = [
    "__version__", "ConditioningError", "DomainError", "NumericalError", "SearchFailure",
    "SolverError", "GridCluster", "invert_volume_map", "model_profile", "perimeter", "volume_map",
]
