"""Exception types raised across harmlab."""


class HarmlabError(Exception):
    """Base class for all harmlab errors."""


class InvalidArgument(HarmlabError, ValueError):
    pass


class EmptySupportError(HarmlabError):
    pass


class InvalidGeometry(HarmlabError, ValueError):
    pass


class EmptySampleError(HarmlabError):
    pass


class InsufficientSample(HarmlabError):
    pass


class CorkscrewFailure(HarmlabError):
    pass


class InvalidPole(HarmlabError, ValueError):
    pass


class NotAnOracle(HarmlabError):
    pass


class UnresolvedScale(HarmlabError):
    pass


class IllConditioned(HarmlabError):
    pass


class ConfigError(HarmlabError):
    """Config validation failure; ``fields`` lists offending keys."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = list(fields)
