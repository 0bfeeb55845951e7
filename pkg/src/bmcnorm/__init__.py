"""Block Markov chains: simulation, transition counts and their spectral norm."""

from .errors import BmcError, ConfigError, ModelError
from .model import BmcInstance, ClusterModel, build_instance, figure1_model, validate_model
from .sampler import PathCounts, sample_path, sample_path_counts
from .spectral import CenteredOperator, scaled_spectral_norm, top_singular_values
from .trim import TrimPolicy, trim

__version__ = "0.1.0"

__all__ = [
    "BmcError",
    "BmcInstance",
    "CenteredOperator",
    "ClusterModel",
    "ConfigError",
    "ModelError",
    "PathCounts",
    "TrimPolicy",
    "build_instance",
    "figure1_model",
    "sample_path",
    "sample_path_counts",
    "scaled_spectral_norm",
    "top_singular_values",
    "trim",
    "validate_model",
]
