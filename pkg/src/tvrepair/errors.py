"""Exception hierarchy shared by every module."""


class TVRepairError(Exception):
    """Base class for all package errors."""


class DimensionError(TVRepairError, ValueError):
    """Alphabets or array shapes do not line up."""


class EmptySupport(TVRepairError, ValueError):
    """Counts sum to zero, so no distribution can be formed."""


class InvalidParameter(TVRepairError, ValueError):
    pass


class InvalidProblem(TVRepairError, ValueError):
    """A linear program contains NaN/Inf or inconsistent dimensions."""


class InternalError(TVRepairError, RuntimeError):
    """A result violated a guarantee that should hold by construction."""


class AlphabetTooLarge(TVRepairError, ValueError):
    pass


class SchemaError(TVRepairError, ValueError):
    pass


class BinningError(TVRepairError, ValueError):
    pass


class EmptyGroup(TVRepairError, ValueError):
    pass


class IoError(TVRepairError, OSError):
    pass
