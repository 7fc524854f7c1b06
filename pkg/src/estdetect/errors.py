"""Exception hierarchy shared across the package."""

from __future__ import annotations


class EstDetectError(Exception):
    """Base class for every error raised by estdetect."""


class UnknownEmotionLabel(EstDetectError, ValueError):
    pass


class DimensionMismatch(EstDetectError, ValueError):
    pass


class MissingClip(EstDetectError, KeyError):
    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class DegenerateLabels(EstDetectError, ValueError):
    pass


class SingleClassTraining(EstDetectError, ValueError):
    pass


class SingleClassTest(EstDetectError, ValueError):
    pass


class TooFewSamples(EstDetectError, ValueError):
    pass


class InvalidChain(EstDetectError, ValueError):
    pass


class LengthMismatch(EstDetectError, ValueError):
    pass


class ParseError(EstDetectError, ValueError):
    """Malformed input file. Carries the offending path and 1-based line number."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        self.message = message
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")
