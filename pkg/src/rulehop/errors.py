"""Exception types shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class InvariantViolation(PipelineError):
    pass


class DuplicateUid(PipelineError):
    pass


class DanglingEndpoint(PipelineError):
    pass


class UnknownEntity(PipelineError):
    pass


class UnknownTriple(PipelineError):
    pass


class MissingDate(PipelineError):
    pass


class InsufficientHistory(PipelineError):
    pass


class EmptyLabelTable(PipelineError):
    pass


class EmptyRuleBank(PipelineError):
    pass


class ParseError(PipelineError):
    """Malformed serialized input; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyIntersection(PipelineError):
    pass


class InsufficientTickers(PipelineError):
    pass


class ZeroVariance(PipelineError):
    pass


class NoTextEvidence(PipelineError):
    pass


class NoMatchedRule(PipelineError):
    pass


class SpecInvalid(PipelineError):
    pass


class ConfigError(PipelineError):
    pass


class IoError(PipelineError):
    pass
