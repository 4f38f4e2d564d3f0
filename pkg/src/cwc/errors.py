"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid user-supplied parameter (CLI exit status 1)."""


class SizeGuardError(ParameterError):
    """A dense computation was requested on a grid that is too large."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to reach its tolerance (CLI exit status 2)."""
