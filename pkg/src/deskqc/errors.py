"""Exception types shared across the package."""


class DeskQCError(Exception):
    """Base class for all package errors."""


class CapacityError(DeskQCError, ValueError):
    """A size limit (qubit count, variable count) was exceeded."""


class ValidationError(DeskQCError, ValueError):
    """An input failed a structural or numerical check."""


class ProblemFormatError(DeskQCError, ValueError):
    """A problem/schedule/embedding file does not match its schema."""


class EmbeddingNotFound(DeskQCError):
    """The embedding heuristic exhausted its restarts."""
