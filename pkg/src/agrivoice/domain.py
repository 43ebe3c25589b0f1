"""Shared domain types used by every other module.

All types are immutable values after construction and safe to share across
threads. Text counting convention: "bytes" means the UTF-8 encoding of the
text, "characters" means Unicode scalar values (what ``len`` counts on a
Python str), not grapheme clusters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone


class Role(str, enum.Enum):
    """Stakeholder role attached to an account. Exactly one per account."""

    FARMER = "farmer"
    SUPPORT_PERSONNEL = "support_personnel"
    REQUIREMENTS_ENGINEER = "requirements_engineer"


class Language(str, enum.Enum):
    """Supported interface and speech-processing languages."""

    EN = "en"
    DE = "de"


class FeedbackMode(str, enum.Enum):
    FREE_FORM = "free_form"
    BASELINE = "baseline"


class CaptureModule(str, enum.Enum):
    """Which capture pipeline a recording was made under."""

    SPEECH_TO_TEXT = "speech_to_text"
    AUDIO_SENTIMENT = "audio_sentiment"


class NoiseSetting(str, enum.Enum):
    # Declaration order is the canonical report order.
    OFFICE = "office"
    FIELD = "field"


class ValidationError(ValueError):
    """A domain value violates one of its invariants.

    ``code`` is a stable machine-readable identifier (e.g. "EmptyAudio").
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class FeedbackRecording:
    """An audio clip with its capture metadata.

    ``id`` is client-generated so that re-uploads after offline queueing are
    idempotent. ``language`` may arrive as a raw string from the wire; it is
    checked by :func:`validate_recording`.
    """

    id: str
    speaker: str
    audio: bytes
    media_type: str
    duration_seconds: float
    language: Language | str
    mode: FeedbackMode
    capture: CaptureModule
    setting: NoiseSetting | None = None
    created_at: datetime = field(default_factory=utcnow)


@dataclass(frozen=True)
class Transcript:
    """Text form of a recording. ``edited`` is true iff a user changed the
    engine output."""

    recording_id: str
    text: str
    language: Language
    engine_id: str
    edited: bool = False


@dataclass(frozen=True)
class BaselineText:
    """The prepared read-aloud text that baseline-mode recordings are scored
    against, together with its source sizes."""

    text: str
    source_bytes: int
    source_characters: int

    def __post_init__(self) -> None:
        if self.source_bytes != len(self.text.encode("utf-8")):
            raise ValidationError(
                "BaselineSizeMismatch",
                f"source_bytes {self.source_bytes} does not match the UTF-8 length of the text",
            )
        if self.source_characters != len(self.text):
            raise ValidationError(
                "BaselineSizeMismatch",
                f"source_characters {self.source_characters} does not match the scalar-value count",
            )

    @classmethod
    def from_text(cls, text: str) -> "BaselineText":
        return cls(text=text, source_bytes=len(text.encode("utf-8")), source_characters=len(text))


def parse_language(value: Language | str) -> Language:
    """Coerce a wire value to a supported language or raise ValidationError."""
    if isinstance(value, Language):
        return value
    try:
        return Language(value)
    except ValueError:
        raise ValidationError("UnsupportedLanguage", f"unsupported language {value!r}") from None


def validate_recording(rec: FeedbackRecording) -> None:
    """Check every recording invariant; raise ValidationError on the first
    violation.

    Codes: EmptyAudio, UnsupportedLanguage, NegativeDuration, MissingSetting
    (a baseline-mode recording needs a noise setting).
    """
    if not rec.audio:
        raise ValidationError("EmptyAudio", "recording has no audio payload")
    parse_language(rec.language)
    if rec.duration_seconds < 0:
        raise ValidationError("NegativeDuration", f"duration {rec.duration_seconds} is negative")
    if rec.mode is FeedbackMode.BASELINE and rec.setting is None:
        raise ValidationError("MissingSetting", "baseline-mode recordings require a noise setting")
