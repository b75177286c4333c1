"""Numerical laboratory for relative-entropy analysis of 1D hyperbolic-parabolic systems.

The package evaluates entropy structure (multiplier compatibility, convexity,
dissipativity) on concrete constitutive models, assembles discrete residuals of
relative-entropy identities, and runs desk-scale stability / vanishing-viscosity /
adiabatic-limit studies with a periodic method-of-lines solver.
"""

from relentropy_lab.model import (
    GasModel,
    GasState,
    Model1D,
    embed_gas_as_general,
    ideal_gas_model,
    numeric_jacobian,
)
from relentropy_lab.solver import Field, Grid1D, SolverConfig, Trajectory, simulate

__all__ = [
    "GasModel",
    "GasState",
    "Model1D",
    "embed_gas_as_general",
    "ideal_gas_model",
    "numeric_jacobian",
    "Field",
    "Grid1D",
    "SolverConfig",
    "Trajectory",
    "simulate",
]

__version__ = "0.1.0"
