"""Exception hierarchy shared across the package."""


class S2OCTError(Exception):
    """Base class for all package errors."""


class ParameterError(S2OCTError, ValueError):
    """A model or topology parameter is out of its admissible range."""


class FormatError(S2OCTError, ValueError):
    """Input data does not follow the expected table format."""


class DesignError(S2OCTError, ValueError):
    """A sampling design cannot be realised on the given table."""


class BuildError(S2OCTError, ValueError):
    """The MILP cannot be built for the given data and parameters."""


class SizeError(S2OCTError, ValueError):
    """An enumeration would exceed its configured guard."""


class SolutionIntegrityError(S2OCTError):
    """A solver returned a point that violates integrality."""


class SolverNotFoundError(S2OCTError, EnvironmentError):
    """No usable MIP backend is configured."""


class LPInfeasible(S2OCTError):
    """Raised by the dense simplex when the LP has no feasible point."""


class LPUnbounded(S2OCTError):
    """Raised by the dense simplex when the LP objective is unbounded."""
