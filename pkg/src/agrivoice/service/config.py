"""Service configuration: JSON file plus environment overrides.

Environment variables (all optional) override the file: AGRIVOICE_HOST,
AGRIVOICE_PORT, AGRIVOICE_STORE, AGRIVOICE_BASELINE, AGRIVOICE_ENGINE_URL,
AGRIVOICE_EMOTION_URL, AGRIVOICE_TRANSLATION_URL, AGRIVOICE_MAX_AUDIO_BYTES.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class RetentionPolicy:
    """Maximum age in days per artifact kind; None keeps artifacts until the
    owner deletes them. User-initiated deletion is always allowed."""

    audio_days: int | None = 90
    transcript_days: int | None = None
    analysis_days: int | None = None
    report_days: int | None = None


@dataclass(frozen=True)
class AccountSeed:
    name: str
    credential: str
    role: str
    language: str = "en"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8008
    store_path: str = "agrivoice.db"
    baseline_path: str | None = None
    engine: str = "mock"  # "mock" or "http"
    engine_url: str | None = None
    engine_seed: int = 0
    sidecar_path: str | None = None  # JSON {recording_id: transcript text} for the mock engine
    emotion_engine_url: str | None = None
    translation_url: str | None = None
    max_audio_bytes: int = 8 * 1024 * 1024
    session_ttl_seconds: int = 24 * 3600
    workers: int = 2
    retention: RetentionPolicy = field(default_factory=RetentionPolicy)
    accounts: tuple[AccountSeed, ...] = ()

    @classmethod
    def from_file(cls, path: Path) -> "ServiceConfig":
        raw = json.loads(path.read_text("utf-8"))
        retention = RetentionPolicy(**raw.pop("retention", {}))
        accounts = tuple(AccountSeed(**acc) for acc in raw.pop("accounts", []))
        config = cls(**raw, retention=retention, accounts=accounts)
        return config.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        updates: dict = {}
        mapping = {
            "AGRIVOICE_HOST": ("host", str),
            "AGRIVOICE_PORT": ("port", int),
            "AGRIVOICE_STORE": ("store_path", str),
            "AGRIVOICE_BASELINE": ("baseline_path", str),
            "AGRIVOICE_ENGINE_URL": ("engine_url", str),
            "AGRIVOICE_EMOTION_URL": ("emotion_engine_url", str),
            "AGRIVOICE_TRANSLATION_URL": ("translation_url", str),
            "AGRIVOICE_MAX_AUDIO_BYTES": ("max_audio_bytes", int),
        }
        for env_name, (attr, cast) in mapping.items():
            value = os.environ.get(env_name)
            if value is not None:
                updates[attr] = cast(value)
        if not updates:
            return self
        from dataclasses import replace

        return replace(self, **updates)
