"""Exception hierarchy shared by every module."""


class IOSError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(IOSError):
    pass


class CycleError(IOSError):
    pass


class BlockError(IOSError):
    pass


class DanglingRefError(IOSError):
    pass


class MismatchError(IOSError):
    """A schedule does not fit the graph it is applied to."""


class MissingEntryError(IOSError):
    """Latency table has no entry and no analytic fallback."""


class IllegalMergeError(IOSError):
    pass


class InfeasibleError(IOSError):
    """Pruning left some DP state without an admissible ending."""


class TooLargeError(IOSError):
    pass
