"""Exception types shared across the package."""


class StressbedError(Exception):
    """Base class for all package errors."""


class InvalidInputError(StressbedError, ValueError):
    """An operation received malformed or infeasible inputs."""


class InvalidSpecError(StressbedError, ValueError):
    """An environment or experiment specification is inconsistent."""


class UnsupportedOracleError(StressbedError, ValueError):
    """A brute-force oracle was asked for a problem size it cannot handle."""


class RunAbortedError(StressbedError, RuntimeError):
    """A learner run hit a non-recoverable condition (non-finite gradient,
    infeasible action, missing hindsight reveal)."""
