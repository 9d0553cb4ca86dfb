"""Plug-in classification of diffusion paths with Nadaraya-Watson drift estimates.

Modules
-------
kernels   Legendre and bump kernels with their norms.
drifts    Drift functions, including the hypercube family.
simulate  Euler-Maruyama paths and Monte Carlo densities.
estimate  Kernel estimators of the occupation density and drift.
classify  Bayes and plug-in classifiers, excess risk.
bounds    Exponential tail bound, margin and Z_T diagnostics.
harness   Config parsing, experiment campaigns and CSV output.
"""

from .classify import ClassifierModel, PluginDiffusionClassifier, excess_risk_mc
from .drifts import (
    BumpDrift, HypercubeDrift, HypercubeSpec, ZeroDrift, make_bump_drift,
    make_hypercube_drift, make_zero_drift,
)
from .estimate import NadarayaWatsonDrift, NWEstimate, bandwidth_rule, fit_drift
from .exceptions import (
    ConfigError, DegenerateClassError, DegenerateModelError, DomainError,
    DriftClassError, InsufficientDataError,
)
from .kernels import KernelSpec, build_bump_kernel, build_legendre_kernel
from .simulate import DiffusionPath, MixtureModel, PathBatch, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "BumpDrift",
    "ClassifierModel",
    "ConfigError",
    "DegenerateClassError",
    "DegenerateModelError",
    "DiffusionPath",
    "DomainError",
    "DriftClassError",
    "HypercubeDrift",
    "HypercubeSpec",
    "InsufficientDataError",
    "KernelSpec",
    "MixtureModel",
    "NWEstimate",
    "NadarayaWatsonDrift",
    "PathBatch",
    "PluginDiffusionClassifier",
    "ZeroDrift",
    "bandwidth_rule",
    "build_bump_kernel",
    "build_legendre_kernel",
    "excess_risk_mc",
    "fit_drift",
    "make_bump_drift",
    "make_hypercube_drift",
    "make_zero_drift",
    "simulate_paths",
]
