"""Exception hierarchy shared by all lipalign modules.

Every data-dependent failure raises a subclass of :class:`LipalignError`,
so the CLI can translate any of them into a clean ``exit 1`` with a
message naming the offending file and position.
"""


class LipalignError(Exception):
    """Base class for all toolkit errors."""


class FileFormatError(LipalignError):
    """A corpus file violates its format contract.

    ``where`` is a byte offset for binary files and a 1-based line number
    for text files; it is included in the message so errors are directly
    actionable with a hex editor or pager.
    """

    unit = "byte"

    def __init__(self, message, path=None, where=None):
        self.path = path
        self.where = where
        prefix = ""
        if path is not None:
            prefix = f"{path}"
            if where is not None:
                prefix += f" ({self.unit} {where})"
            prefix += ": "
        super().__init__(prefix + message)


class TextFormatError(FileFormatError):
    unit = "line"


# -- binary container errors ------------------------------------------------

class BadMagic(FileFormatError):
    """File does not start with the expected magic bytes."""


class TruncatedFile(FileFormatError):
    """File ends before the payload its header declares."""


class NonFiniteValue(FileFormatError):
    """A NaN/inf value where the format requires finite reals."""


class FormatViolation(FileFormatError):
    """A header or field value outside its allowed range."""


# -- text container errors --------------------------------------------------

class WrongColumnCount(TextFormatError):
    pass


class NonMonotoneTime(TextFormatError):
    pass


class OverlappingSegments(TextFormatError):
    pass


class InvertedSegment(TextFormatError):
    pass


class InvalidPath(LipalignError):
    """Alignment path violates the monotone step contract."""


# -- metric errors ----------------------------------------------------------

class DimensionMismatch(LipalignError):
    pass


class EmptyImage(LipalignError):
    pass


class WrongPointCount(LipalignError):
    pass


class StackSizeMismatch(LipalignError):
    pass


# -- alignment errors -------------------------------------------------------

class EmptySequence(LipalignError):
    pass


class BandInfeasible(LipalignError):
    """Sakoe-Chiba band too narrow to connect the endpoints."""


class TooLarge(LipalignError):
    """Instance exceeds the exhaustive-search guard."""


class AllSilent(LipalignError):
    """Silence removal left no frames."""


class LengthMismatch(LipalignError):
    """Modality frame counts disagree beyond the allowed tolerance."""


class PathOutOfRange(LipalignError):
    """Path references frames outside the sequences it aligns."""


# -- model errors -----------------------------------------------------------

class TooFewSamples(LipalignError):
    pass


class DegenerateCovariance(LipalignError):
    """Covariance not usable even after flooring."""


# -- evaluation errors ------------------------------------------------------

class SegmentCountMismatch(LipalignError):
    pass


class NoVoicedOverlap(LipalignError):
    """No path point has voiced frames on both sides."""
