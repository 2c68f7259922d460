"""Exception types raised by the solver."""


class ParameterError(ValueError):
    """A model or run parameter is outside its physical domain."""


class FitError(RuntimeError):
    """A root search for a calibrated parameter failed."""


class SymmetryError(RuntimeError):
    """Eigenstates could not be assigned a C3v irreducible representation."""


class TruncationError(RuntimeError):
    """A thermal average would discard more Boltzmann weight than allowed."""

    def __init__(self, message, excluded_weight):
        super().__init__(message)
        self.excluded_weight = excluded_weight


class OutOfSupportWarning(UserWarning):
    """An overlap function was evaluated outside its tabulated energy range."""
