"""Exception hierarchy shared by every module.

Each class carries the process exit code the ``hcs`` command line uses when
the error escapes to the top level.
"""


class HcsError(Exception):
    exit_code = 1


class InvalidParameter(HcsError, ValueError):
    exit_code = 3


class SizeLimitError(HcsError):
    exit_code = 4


class ExperimentFailure(HcsError):
    exit_code = 5


class InvalidInput(HcsError, ValueError):
    """A structural precondition on caller data failed (e.g. a set that is
    supposed to be independent is not)."""

    exit_code = 6


class InvalidInstance(InvalidInput):
    pass


class InvalidLabeling(InvalidInput):
    pass
