"""Quantum states of a cavity-optomechanical oscillator.

Unconditional, conditional (Wiener-filtered) and optimally controlled
Gaussian states, and the oscillator-cavity entanglement with and without
recovery of the measurement record.
"""
from ._backend import BACKEND
from .model import PhysicalParams, ReducedParams, experimental_params, reduce
from .estimator import solve_point

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "PhysicalParams",
    "ReducedParams",
    "experimental_params",
    "reduce",
    "solve_point",
]
