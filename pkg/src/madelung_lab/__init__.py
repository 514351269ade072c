"""Numerical laboratory for the hydrodynamic (Madelung) form of quantum mechanics.

Evolves density/action pairs and wave functions side by side, computes
momentum and energy fluctuation fields, Fisher-information uncertainty
measures, Bohmian and Nelson trajectories, and Klein-Gordon dynamics.
"""

__version__ = "0.1.0"

from .fields import Constants, MadelungPair, StateError, WaveFunction, from_wavefunction, to_wavefunction
from .grid import Grid, GridError
from .potentials import Potential

__all__ = [
    "Constants",
    "Grid",
    "GridError",
    "MadelungPair",
    "Potential",
    "StateError",
    "WaveFunction",
    "from_wavefunction",
    "to_wavefunction",
    "__version__",
]
