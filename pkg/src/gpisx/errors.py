"""Exception hierarchy shared by all gpisx modules."""


class GpisxError(Exception):
    """Base class for every error raised by gpisx."""


class EmptyCloud(GpisxError):
    pass


class DegenerateTriangle(GpisxError):
    pass


class DimensionMismatch(GpisxError, ValueError):
    pass


class EmptyTrainingSet(GpisxError):
    pass


class NotPositiveDefinite(GpisxError):
    pass


class DegenerateInput(GpisxError):
    pass


class NoCandidates(GpisxError):
    pass


class OutOfBounds(GpisxError):
    pass


class InvalidTarget(GpisxError):
    pass


class GridTooLarge(GpisxError):
    pass


class EmptyMesh(GpisxError):
    pass


class StaleHandle(GpisxError):
    pass


class ParseError(GpisxError):
    """Malformed input file. ``lineno`` is 1-based, or None when unknown."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class UnsupportedFormat(GpisxError):
    pass


class ConfigError(GpisxError, ValueError):
    pass


class IoError(GpisxError, OSError):
    pass
