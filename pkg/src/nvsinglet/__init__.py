"""Vibronic model of the NV-center singlet shelving state.

Modules
-------
params    calibrated scalars and their derivation
fock      truncated two-mode boson basis and C3v operators
vibronic  Hamiltonian, diagonalization and coefficient tables
spectra   emission and absorption lineshapes, phonon spectral functions
isc       intersystem-crossing rates
cli       command-line front end
"""

__version__ = "0.1.0"

from .exceptions import FitError, ParameterError, SymmetryError, TruncationError  # noqa: E402
from .params import ModelParams  # noqa: E402

__all__ = ["ModelParams", "ParameterError", "FitError", "SymmetryError", "TruncationError", "__version__"]
