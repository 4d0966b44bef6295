"""Exception hierarchy for the simcull toolkit."""


class SimcullError(Exception):
    """Base class for all operational failures."""


class MissingRoot(SimcullError):
    pass


class DecodeFailure(SimcullError):
    pass


class ImageTooSmall(SimcullError):
    pass


class ReadFailure(SimcullError):
    pass


class MalformedFingerprint(SimcullError):
    pass


class AmbiguousLabel(SimcullError):
    pass


class DuplicateLabelRow(SimcullError):
    pass


class UnknownSchema(SimcullError):
    pass


class UnknownClass(SimcullError):
    pass


class IndexMismatch(SimcullError):
    pass


class DestNotEmpty(SimcullError):
    pass


class MissingSource(SimcullError):
    pass


class SampleTooLarge(SimcullError):
    pass


class UnachievableTarget(SimcullError):
    pass


class WriteFailure(SimcullError):
    pass
