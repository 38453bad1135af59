"""Engine error hierarchy.

Every error carries a stable machine-readable ``code`` so the HTTP gateway
can map failures one-to-one onto API error payloads.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine failures."""

    code = "engine_error"
    retryable = False

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class EmptyMask(EngineError):
    code = "empty_mask"


class ModeMismatch(EngineError):
    code = "mode_mismatch"


class NoForeground(EngineError):
    code = "no_foreground"


class Unscorable(EngineError):
    code = "unscorable"


class RangeViolation(EngineError):
    code = "range_violation"


class InsufficientData(EngineError):
    code = "insufficient_data"


class UnknownMetric(EngineError):
    code = "unknown_metric"


class MalformedVerdict(EngineError):
    code = "malformed_verdict"
    retryable = True


class KeywordAbsent(EngineError):
    code = "keyword_absent"


class NoScoredCandidates(EngineError):
    code = "no_scored_candidates"


class BadRadii(EngineError):
    code = "bad_radii"


class ProviderError(EngineError):
    code = "provider_error"
    retryable = True

    def __init__(self, message: str, *, stage: str | None = None, attempts: int = 1):
        super().__init__(message, stage=stage)
        self.attempts = attempts


class ConfigError(EngineError):
    code = "config_error"


class NotReady(EngineError):
    code = "not_ready"


class NotFound(EngineError):
    code = "not_found"


class SessionNotFound(NotFound):
    code = "session_not_found"


class IterationNotFound(NotFound):
    code = "iteration_not_found"


class CandidateNotFound(NotFound):
    code = "candidate_not_found"


class VersionMismatch(EngineError):
    code = "version_mismatch"


class StoreCorrupt(EngineError):
    code = "store_corrupt"

    def __init__(self, message: str, *, location: str | None = None):
        super().__init__(message)
        self.location = location
