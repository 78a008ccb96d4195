"""Exception types shared across the toolkit."""


class PackdimError(Exception):
    """Base class for all toolkit errors."""


class EmptySetError(PackdimError):
    pass


class TooLargeForExactError(PackdimError):
    """Instance exceeds the configured cap for an exact solver."""


class InvalidPackingError(PackdimError):
    pass


class NotLipschitzError(PackdimError):
    """Raised with a witness pair when a claimed Lipschitz bound fails."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class DepthExceededError(PackdimError):
    pass


class TooManyPointsError(PackdimError):
    pass


class ScaleTooCoarseError(PackdimError):
    pass


class ScaleOutOfRangeError(PackdimError):
    pass


class LevelMismatchError(PackdimError):
    pass


class InvalidBlocksError(PackdimError):
    pass


class InsufficientDataError(PackdimError):
    pass
