# coding=utf-8
#
"""Exception hierarchy shared by every module of the library."""


class ExposureLibError(Exception):
    pass


class DomainError(ExposureLibError, ValueError):
    """An argument lies outside the domain of the operation (coordinates, times, shapes)."""


class PreconditionError(DomainError):
    """A capture was requested with an exposure outside the sensor bounds."""


class FitError(ExposureLibError):
    pass


class DegenerateAbscissa(FitError):
    """All samples share one exposure time, the slope is undefined."""


class FlatResponse(FitError):
    """The fitted slope is below the usable minimum (saturated or dark samples)."""


class ClippedResponse(FitError):
    """Every buffered sample is clipped at the sensor ceiling or lost below the dark floor."""


class ConfigError(ExposureLibError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        location = ''
        if path is not None:
            location = '{}:{}: '.format(path, line) if line is not None else '{}: '.format(path)
        super(ConfigError, self).__init__('{}{}'.format(location, message))


class UsageError(ExposureLibError):
    pass


class InvariantBreach(ExposureLibError):
    pass
