"""
Exception hierarchy for filterstat.

Argument checks in the operator layer raise plain ValueError/IndexError; the classes below mark
numerical or physical failures that callers (sweeps, CLI) handle per row.
"""


class FilterstatError(Exception):
    """Base class for all filterstat failures."""


class ConfigError(FilterstatError, ValueError):
    """Run configuration could not be read or validated."""


class DegenerateSpectrum(FilterstatError):
    """Right eigenvector basis of the Liouvillian is (near) defective."""


class NonPhysicalSteadyState(FilterstatError):
    """Steady state has vanishing trace or significant negative eigenvalues."""


class ArgumentOnCut(FilterstatError, ValueError):
    """A logarithm or dilogarithm argument sits on its branch cut without an imaginary offset."""


class QuadratureFailure(FilterstatError):
    """Adaptive quadrature exhausted its subdivision budget."""


class NegativeIntensity(FilterstatError):
    """Filtered intensity came out negative beyond numerical dust."""


class ZeroIntensity(FilterstatError, ZeroDivisionError):
    """Normalization of g2 by an intensity that vanishes."""


class ConvergenceWarning(UserWarning):
    """Weak-coupling sensor result is not converged in the coupling strength."""
