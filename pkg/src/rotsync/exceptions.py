"""Exception types raised by rotsync."""


class RotsyncError(Exception):
    """Base class for all rotsync errors."""


class DegenerateProjectionError(RotsyncError, ValueError):
    """Projection onto SO(3) (or an alignment built on it) is not unique."""


class DisconnectedGraphError(RotsyncError, ValueError):
    """The view graph is not connected, so no spanning tree / solution exists."""


class IllPosedSolveError(RotsyncError, RuntimeError):
    """The weighted tangent-space system is numerically singular."""


class NonFiniteError(RotsyncError, FloatingPointError):
    """A solver produced NaN or inf in an intermediate quantity."""


class FormatError(RotsyncError, ValueError):
    """A graph or rotation file is malformed.

    Attributes:
        path: file the error was found in (may be ``None``).
        line: 1-based line number, or ``None`` for whole-file problems.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
