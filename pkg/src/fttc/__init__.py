"""Fractional top trading cycle mechanisms with weak preferences."""
from .engine import run_fttc
from .model import Problem, WeakPreference, parse_problem, serialize_problem, validate_problem

__all__ = [
    "Problem",
    "WeakPreference",
    "parse_problem",
    "run_fttc",
    "serialize_problem",
    "validate_problem",
]
