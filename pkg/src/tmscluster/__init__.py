"""Gaussian simulation and central-moment statistics for two-mode-squeezed light."""

from .circuit import Circuit, Gate, disjoint_union, simulate
from .moments import (
    MomentTensor,
    StabilizerReport,
    central_moment,
    cofluctuation,
    expectation,
    moment,
    moment_tensor,
    pearson,
    raw_moment,
    stabilizer_report,
    variance,
)
from .observables import MomentQuery, QuadraticObservable, custom, number, stokes
from .state import GaussianState, PhysicalityError, new_vacuum

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Gate",
    "GaussianState",
    "MomentQuery",
    "MomentTensor",
    "PhysicalityError",
    "QuadraticObservable",
    "StabilizerReport",
    "central_moment",
    "cofluctuation",
    "custom",
    "disjoint_union",
    "expectation",
    "moment",
    "moment_tensor",
    "new_vacuum",
    "number",
    "pearson",
    "raw_moment",
    "simulate",
    "stabilizer_report",
    "stokes",
    "variance",
]
