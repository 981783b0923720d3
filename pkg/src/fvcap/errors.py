"""Exception types shared across the package."""


class FvcapError(Exception):
    """Base class for package errors."""


class ConfigError(FvcapError):
    pass


class NonWatertight(FvcapError):
    """Inside/outside parity votes disagree on too many cells."""


class PlacementError(FvcapError):
    """Occluder placement kept interpenetrating after too many rejections."""


class SizeMismatch(FvcapError):
    pass


class InsufficientObservations(FvcapError):
    pass


class EmptyField(FvcapError):
    """No voxel exceeds the iso level; nothing to extract."""


class NotVisible(FvcapError):
    pass


class RegistrationDiverged(FvcapError):
    pass


class ResolutionMismatch(FvcapError):
    pass
