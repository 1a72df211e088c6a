"""Exact near-linear-time local polynomial regression and density estimation."""

from .discretize import DiscretizationIndex, compress, window_bounds
from .estimator import (
    FittedModel,
    add_training_point,
    build,
    empirical_cdf,
    estimate_density,
    estimate_regression,
    fit_at,
    fit_many,
)
from .fenwick import FenwickGrid, composite_hash, interrogation_path, update_path
from .model import (
    BasisSpec,
    CapacityError,
    ConfigurationError,
    ContractError,
    LocalFit,
    MultiIndex,
    Query,
    TrainingSet,
    make_basis_spec,
)
from .moments import assemble_system, raw_statistics, shift_moments
from .oracle import naive_cdf, naive_fit, naive_fit_many

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "CapacityError",
    "ConfigurationError",
    "ContractError",
    "DiscretizationIndex",
    "FenwickGrid",
    "FittedModel",
    "LocalFit",
    "MultiIndex",
    "Query",
    "TrainingSet",
    "add_training_point",
    "assemble_system",
    "build",
    "composite_hash",
    "compress",
    "empirical_cdf",
    "estimate_density",
    "estimate_regression",
    "fit_at",
    "fit_many",
    "interrogation_path",
    "make_basis_spec",
    "naive_cdf",
    "naive_fit",
    "naive_fit_many",
    "raw_statistics",
    "shift_moments",
    "update_path",
    "window_bounds",
]
