"""Exception and warning types raised by the solvers."""


class TridiagError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TridiagError, ValueError):
    """An argument lies outside the domain of the operation."""


class NoExtremumError(DomainError):
    """The potential has no finite extremum (gamma outside (0, 1))."""


class DegenerateStrengthError(DomainError):
    """The potential strength C is zero where a finite nonzero value is required."""


class NonNormalizableError(DomainError):
    """mu <= 0 (zero energy): basis overlap and kernel diverge."""


class NumericError(TridiagError, ArithmeticError):
    """Non-finite input or a numerical breakdown."""


class TraceError(TridiagError):
    """A sampled parameter-spectrum trace is unusable for inversion."""


class FitError(TridiagError):
    """A rational or resonance fit cannot be built from the given samples."""


class AccuracyError(TridiagError):
    """An internal convergence/tolerance target was missed."""


class RangeError(DomainError):
    """Matching radii fall inside the range of the potential."""


class OffShellWarning(UserWarning):
    """(gamma, C) is not on the parameter spectrum at the requested energy."""


class DivergenceWarning(UserWarning):
    """A wavefunction expansion shows the off-spectrum oscillation signature."""
