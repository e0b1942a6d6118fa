"""Exception hierarchy shared by every monofair module."""


class MonofairError(Exception):
    """Base class for all library errors."""


class DataError(MonofairError, ValueError):
    """Malformed input data, schema, or incompatible files."""


class NetworkError(MonofairError, ValueError):
    """Shape mismatch or non-finite value inside the network."""


class TrainingError(MonofairError, RuntimeError):
    """Optimisation produced a non-finite loss or could not proceed."""
