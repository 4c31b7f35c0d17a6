"""Sequential-transfer experiments for the TSP with time windows."""

from .core import (
    BudgetExhausted,
    Instance,
    InvalidInstanceError,
    InvalidTourError,
    MeteredEvaluator,
    Schedule,
    Tour,
    constraint_violation,
    evaluate_tour,
    penalized_score,
    simulate_schedule,
    tour_cost,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "Instance",
    "InvalidInstanceError",
    "InvalidTourError",
    "MeteredEvaluator",
    "Schedule",
    "Tour",
    "constraint_violation",
    "evaluate_tour",
    "penalized_score",
    "simulate_schedule",
    "tour_cost",
]
