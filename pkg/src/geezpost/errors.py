"""Exception hierarchy shared by every module."""


class GeezError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class ScriptError(GeezError):
    exit_code = 3

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class UnknownGrapheme(ScriptError):
    pass


class AmbiguousTransliteration(ScriptError):
    pass


class UnrepresentableSyllable(ScriptError):
    pass


class DanglingVowel(ScriptError):
    pass


class DanglingConsonant(ScriptError):
    pass


class DataError(GeezError):
    exit_code = 4


class TargetTooSmall(DataError):
    pass


class EmptyReference(DataError):
    pass


class IdMismatch(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class DuplicateId(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line, reason=""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))


class UnknownId(DataError):
    pass


class BadRatios(DataError):
    pass


class ConfigError(DataError):
    pass


class AudioError(GeezError):
    exit_code = 5


class EmptyBuffer(AudioError):
    pass


class RateMismatch(AudioError):
    pass


class TooManyBackgrounds(AudioError):
    pass


class UnsupportedAudio(AudioError):
    pass
