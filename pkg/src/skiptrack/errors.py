"""Exception hierarchy shared by all modules."""


class TrackingError(Exception):
    """Base class for every error raised by skiptrack."""


class EmptyCrop(TrackingError):
    pass


class DegenerateBox(TrackingError):
    pass


class DimensionMismatch(TrackingError):
    pass


class MissingSeqInfo(TrackingError):
    pass


class MalformedLine(TrackingError):
    def __init__(self, path, line_number: int, reason: str = ""):
        self.path = str(path)
        self.line_number = line_number
        msg = f"{path}:{line_number}: malformed line"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class MissingFrameFile(TrackingError):
    pass


class MissingFrame(TrackingError):
    pass


class MissingDetections(TrackingError):
    pass


class MissingGroundTruth(TrackingError):
    pass


class NoGroundTruth(MissingGroundTruth):
    pass


class DecodeError(TrackingError):
    pass


class ConfigError(TrackingError):
    pass
