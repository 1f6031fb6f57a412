class ComposerError(Exception):
    """Base class for all errors raised by this package."""


class MidiParseError(ComposerError):
    pass


class PolyphonicInput(MidiParseError):
    """Raised when a MIDI file has overlapping notes."""


class ContourUndefined(ComposerError):
    """Raised when a pitch contour is requested for a phrase without pitches."""


class SearchExhausted(ComposerError):
    """Raised when no phrase of the requested length can be generated."""


class SchemaError(ComposerError):
    """Raised when a model or corpus file fails validation."""
