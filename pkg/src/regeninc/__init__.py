"""Simulation and verification of limit theorems for processes with regenerative increments."""

__version__ = "0.1.0"

from .cycle_models import (
    REGISTRY,
    CycleBatch,
    CycleModel,
    CyclePath,
    CycleSample,
    center_model,
    make_model,
    sample_cycle,
)
from .errors import (
    BudgetExceeded,
    DomainError,
    HypothesisViolation,
    PreconditionError,
    RegenError,
    ValidationError,
)
from .regen_core import count_N, evaluate_Z, simulate_trajectory, tau
from .streams import Streams
from .theorem_suite import RateCondition, Verdict

__all__ = [
    "REGISTRY",
    "BudgetExceeded",
    "CycleBatch",
    "CycleModel",
    "CyclePath",
    "CycleSample",
    "DomainError",
    "HypothesisViolation",
    "PreconditionError",
    "RateCondition",
    "RegenError",
    "Streams",
    "ValidationError",
    "Verdict",
    "center_model",
    "count_N",
    "evaluate_Z",
    "make_model",
    "sample_cycle",
    "simulate_trajectory",
    "tau",
]
