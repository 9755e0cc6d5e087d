"""Numerical laboratory for inviscid damping around planar Couette flow.

Modules
-------
spectral           Fourier grid in the sheared frame and field operations.
linear             Exact linearized evolution and velocity diagnostics.
initial            Initial vorticity constructors.
nonlinear          Pseudospectral RK4 solver for the perturbation.
weights            Resonant/non-resonant weights, multipliers and norms.
littlewood_paley   Dyadic decomposition and paraproducts.
lemmas             Sampling harness for the weight inequalities.
toy                Two-mode growth model across a critical interval.
coords             Adaptive coordinates, elliptic inversion, energy functionals.
config, checkpoint, experiments, cli
                   Configuration, persistence and experiment drivers.
"""

from .errors import (
    BlowUpError,
    CheckpointError,
    ConfigError,
    DivergenceError,
    InvertibilityError,
    OrrlabError,
    RangeError,
    StepSizeError,
)
from .spectral import Grid, SpectralField

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "SpectralField",
    "OrrlabError",
    "ConfigError",
    "BlowUpError",
    "StepSizeError",
    "RangeError",
    "InvertibilityError",
    "DivergenceError",
    "CheckpointError",
]
