"""Exception types shared across the package.

Validation problems (bad scenario files, inconsistent moment vectors,
out-of-contract arguments) raise :class:`ValidationError`; numerical
failures (non-convergent quadrature or solver, imaginary residuals that
should have cancelled) raise :class:`NumericalError`.  The CLI maps the
former to exit code 1 and the latter to exit code 2.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or schema."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its error contract."""
