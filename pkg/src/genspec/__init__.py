"""Spectral decomposition of Markov generators from trajectory data."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:
    __version__ = "0.0.0"

from ._backend import BACKEND
from .estimator import FitConfig, SpectralModel, fit, fit_bundle, fit_dual, fit_primal, forecast
from .features import KernelSpec, gram_matrix, monomials, rff_dictionary
from .quadrature import (
    nonuniform_weights,
    toeplitz_matrix,
    transfer_operator_weights,
    trapezoid_weights,
)
from .trajectory import Trajectory, TrajectoryBundle

__all__ = [
    "BACKEND",
    "FitConfig",
    "KernelSpec",
    "SpectralModel",
    "Trajectory",
    "TrajectoryBundle",
    "fit",
    "fit_bundle",
    "fit_dual",
    "fit_primal",
    "forecast",
    "gram_matrix",
    "monomials",
    "nonuniform_weights",
    "rff_dictionary",
    "toeplitz_matrix",
    "transfer_operator_weights",
    "trapezoid_weights",
]
