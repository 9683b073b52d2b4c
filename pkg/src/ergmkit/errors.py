"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: data problems (bad files, bad
formulas, constraint violations) exit 3, numerical failures exit 4,
and nonconvergence exits 5.
"""


class ErgmError(Exception):
    """Base class for all package errors."""


class DataError(ErgmError):
    """Malformed input: files, formulas, attribute mismatches."""


class FormulaError(DataError):
    """Formula/constraint text rejected, with position information."""

    def __init__(self, message, pos=None):
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos


class NetworkFormatError(DataError):
    """Network or attribute file violates the documented format."""


class ConstraintError(DataError):
    """Network state incompatible with the active constraints."""


class NumericalError(ErgmError):
    """Numerical failure: separation, singularity, frozen sampler."""


class SeparationError(NumericalError):
    """Logistic fit diverged; data are separable."""


class SingularityError(NumericalError):
    """A required matrix is singular or a statistic is not spanned."""


class FrozenStateError(NumericalError):
    """No proposable dyad exists anywhere under the constraints."""


class NonconvergenceError(ErgmError):
    """Iteration limit reached without meeting the stopping rule."""
