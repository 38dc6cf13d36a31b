"""Exception hierarchy for phiscrub."""


class PhiScrubError(Exception):
    """Base class for all errors raised by this package."""


class AnnotationError(PhiScrubError):
    """A record or its annotations could not be read."""


class MalformedXml(AnnotationError):
    pass


class OffsetMismatch(AnnotationError):
    """An annotation's ``text`` attribute disagrees with the body slice."""


class UnknownCategory(AnnotationError):
    pass


class OverlappingAnnotation(AnnotationError):
    pass


class EmptyCorpus(PhiScrubError):
    pass


class InvalidConfig(PhiScrubError, ValueError):
    pass


class InvalidLabel(PhiScrubError, ValueError):
    pass


class EmptyDataset(PhiScrubError, ValueError):
    pass


class DivergedOptimization(PhiScrubError):
    pass


class NonFiniteValue(PhiScrubError, FloatingPointError):
    pass


class OverlapError(PhiScrubError, ValueError):
    pass


class OverlappingInput(PhiScrubError, ValueError):
    pass


class EmptyInput(PhiScrubError, ValueError):
    pass


class ModelNotLoaded(PhiScrubError):
    pass


class ModelFormatError(PhiScrubError):
    pass


class InvalidUtf8(PhiScrubError, UnicodeError):
    def __init__(self, position, reason="invalid UTF-8"):
        super().__init__(f"{reason} at byte {position}")
        self.position = position


class SpanCrossesSentence(UserWarning):
    """A gold span straddles a sentence boundary and was split in two."""


class SmallSplitWarning(UserWarning):
    """A corpus split left one side empty."""
