"""Exception hierarchy shared by all gapcert modules."""


class GapcertError(Exception):
    """Base class for all errors raised by this package."""


class InvalidProblem(GapcertError):
    """A problem description violates its preconditions."""


class NonConvergence(GapcertError):
    """An iteration (bracketing, bisection, power/Arnoldi) exhausted its budget."""


class DegenerateProfile(GapcertError):
    """Log-derivative profile has no interior maximum (slope at or below critical)."""


class MultipleTurningPoints(GapcertError):
    """More than one sign change detected in the profile derivative (grid too coarse)."""


class InvariantViolation(GapcertError):
    """A constructed object failed one of its pointwise contract checks.

    Carries the name of the first failed check and the offending value.
    """

    def __init__(self, check: str, value: float, message: str = ""):
        self.check = check
        self.value = value
        super().__init__(f"{check}: {value!r}" + (f" ({message})" if message else ""))


class MissingEigenfunction(GapcertError):
    """A derived quantity needs the principal eigenfunction, which was not supplied."""


class NonPositiveEigenfunction(GapcertError):
    """The supplied principal eigenfunction is not positive on retained nodes."""


class NonPositiveManufacturedSolution(GapcertError):
    """A manufactured eigenfunction is not positive on the evaluation region."""


class GridTooCoarse(GapcertError):
    """Grid spacing violates a resolution or cell-Peclet requirement."""


class SignInconsistency(GapcertError):
    """Converged principal eigenvector changes sign in the interior."""


class MissingConjugate(GapcertError):
    """A complex eigenvalue was returned without its conjugate and could not be repaired."""


class GapUndefined(GapcertError):
    """Spectral gap requested from a spectrum with no non-principal eigenvalue."""


class HypothesisViolation(GapcertError):
    """Operator data violates a certification hypothesis (e.g. c < 0); no certificate issued."""


class UnknownExperiment(GapcertError):
    """CLI experiment name is not one of the shipped experiments."""
