"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: configuration and
precondition problems exit 1, resource limits exit 2, and violations of
mathematical invariants that the library promises to uphold exit 3.
"""


class ChromaError(Exception):
    """Base class for all library errors."""


class ConfigError(ChromaError):
    """Bad configuration or malformed input (exit code 1)."""


class PreconditionError(ChromaError):
    """An operation was called outside its contract (exit code 1)."""


class ResourceLimitError(ChromaError):
    """A configured memory/state budget would be exceeded (exit code 2)."""


class InternalInvariantError(ChromaError):
    """A fact that is a theorem for valid inputs failed to hold.

    Seeing this means the library (not the caller) has a bug; callers
    should not catch it except to abort loudly (exit code 3).
    """


class UndefinedMeasureError(PreconditionError):
    """A conditional distribution was requested on an empty event."""
