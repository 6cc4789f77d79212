"""Numerical verification toolkit for the kinetic limit of the forced-dissipated
(Zakharov-L'vov) nonlinear Schrodinger equation.

Simulates the microscopic stochastic lattice dynamics, evaluates closed-form
kinetic approximations in all three scaling regimes, solves the damped-driven
wave kinetic equation, and checks formula-level claims (kernel limits,
sum-to-integral convergence, counting bounds) at desk scale.
"""

from wavekin.lattice import TorusSpec, Wavevector
from wavekin.profiles import SpectralProfile
from wavekin.scaling import Regime, ScalingLaw
from wavekin.microsim import EnsembleStats, FieldState, SimConfig
from wavekin.kinetic import KineticGrid, KineticState

__version__ = "0.1.0"

__all__ = [
    "TorusSpec",
    "Wavevector",
    "SpectralProfile",
    "Regime",
    "ScalingLaw",
    "FieldState",
    "SimConfig",
    "EnsembleStats",
    "KineticGrid",
    "KineticState",
    "__version__",
]
