"""Embedded persistence on sqlite: accounts, sessions, recordings,
transcripts, analyses, submissions, and the job queue.

A single connection guarded by a lock serializes writes; multi-statement
updates run inside explicit transactions so an interrupted job can never
leave a half-written transcript marked complete.
"""

from __future__ import annotations

import hashlib
import secrets
import sqlite3
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone

from ..domain import (
    CaptureModule,
    FeedbackMode,
    FeedbackRecording,
    Language,
    NoiseSetting,
    Role,
    Transcript,
)
from .config import RetentionPolicy

PBKDF2_ITERATIONS = 120_000

_SCHEMA = """
CREATE TABLE IF NOT EXISTS accounts (
    id TEXT PRIMARY KEY,
    name TEXT UNIQUE NOT NULL,
    role TEXT NOT NULL,
    language TEXT NOT NULL,
    pw_salt BLOB NOT NULL,
    pw_hash BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    account_id TEXT NOT NULL REFERENCES accounts(id),
    expires_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS recordings (
    id TEXT PRIMARY KEY,
    speaker TEXT NOT NULL,
    media_type TEXT NOT NULL,
    audio BLOB NOT NULL,
    duration REAL NOT NULL,
    language TEXT NOT NULL,
    mode TEXT NOT NULL,
    capture TEXT NOT NULL,
    setting TEXT,
    run_id TEXT,
    status TEXT NOT NULL DEFAULT 'pending',
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS transcripts (
    recording_id TEXT PRIMARY KEY REFERENCES recordings(id),
    text TEXT NOT NULL,
    language TEXT NOT NULL,
    engine_id TEXT NOT NULL,
    edited INTEGER NOT NULL DEFAULT 0,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS analyses (
    recording_id TEXT PRIMARY KEY REFERENCES recordings(id),
    payload TEXT NOT NULL,
    status TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS submissions (
    id TEXT PRIMARY KEY,
    recording_id TEXT NOT NULL REFERENCES recordings(id),
    choice TEXT NOT NULL,
    submitted_by TEXT NOT NULL,
    priority INTEGER NOT NULL DEFAULT 0,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS jobs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    kind TEXT NOT NULL,
    recording_id TEXT NOT NULL REFERENCES recordings(id),
    status TEXT NOT NULL DEFAULT 'pending',
    attempts INTEGER NOT NULL DEFAULT 0,
    created_at REAL NOT NULL
);
"""


@dataclass(frozen=True)
class Account:
    id: str
    name: str
    role: Role
    language: Language


@dataclass(frozen=True)
class Session:
    token: str
    account: Account
    expires_at: float


@dataclass(frozen=True)
class StoredRecording:
    recording: FeedbackRecording
    run_id: str | None
    status: str


def _hash_credential(credential: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", credential.encode("utf-8"), salt, PBKDF2_ITERATIONS)


class Store:
    def __init__(self, path: str):
        self.path = path
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False, isolation_level=None)
        self._conn.row_factory = sqlite3.Row
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA foreign_keys=ON")
            self._conn.executescript(_SCHEMA)
        # Constant-time-ish login for unknown accounts hashes this instead.
        self._dummy_salt = b"\x00" * 16
        self._dummy_hash = _hash_credential("invalid", self._dummy_salt)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    @contextmanager
    def _tx(self):
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                yield self._conn
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
            self._conn.execute("COMMIT")

    # -- accounts and sessions -------------------------------------------

    def ensure_account(self, name: str, credential: str, role: Role, language: Language) -> str:
        with self._tx() as conn:
            row = conn.execute("SELECT id FROM accounts WHERE name = ?", (name,)).fetchone()
            if row:
                return row["id"]
            account_id = secrets.token_hex(8)
            salt = secrets.token_bytes(16)
            conn.execute(
                "INSERT INTO accounts (id, name, role, language, pw_salt, pw_hash)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (account_id, name, role.value, language.value, salt,
                 _hash_credential(credential, salt)),
            )
            return account_id

    def verify_login(self, name: str, credential: str) -> Account | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM accounts WHERE name = ?", (name,)
            ).fetchone()
        if row is None:
            # Hash anyway so unknown names cost the same as wrong passwords.
            secrets.compare_digest(_hash_credential(credential, self._dummy_salt), self._dummy_hash)
            return None
        if not secrets.compare_digest(
            _hash_credential(credential, row["pw_salt"]), row["pw_hash"]
        ):
            return None
        return Account(
            id=row["id"], name=row["name"], role=Role(row["role"]),
            language=Language(row["language"]),
        )

    def create_session(self, account: Account, ttl_seconds: int) -> Session:
        token = secrets.token_hex(32)
        expires_at = time.time() + ttl_seconds
        with self._tx() as conn:
            conn.execute(
                "INSERT INTO sessions (token, account_id, expires_at) VALUES (?, ?, ?)",
                (token, account.id, expires_at),
            )
        return Session(token=token, account=account, expires_at=expires_at)

    def get_session(self, token: str) -> Session | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT s.token, s.expires_at, a.id, a.name, a.role, a.language"
                " FROM sessions s JOIN accounts a ON a.id = s.account_id"
                " WHERE s.token = ?",
                (token,),
            ).fetchone()
        if row is None or row["expires_at"] < time.time():
            return None
        account = Account(
            id=row["id"], name=row["name"], role=Role(row["role"]),
            language=Language(row["language"]),
        )
        return Session(token=row["token"], account=account, expires_at=row["expires_at"])

    # -- recordings ---------------------------------------------------------

    def insert_recording(self, rec: FeedbackRecording, run_id: str | None) -> bool:
        """Idempotent on the client-generated id; returns False when the id
        already exists."""
        with self._tx() as conn:
            cursor = conn.execute(
                "INSERT OR IGNORE INTO recordings"
                " (id, speaker, media_type, audio, duration, language, mode,"
                "  capture, setting, run_id, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    rec.id,
                    rec.speaker,
                    rec.media_type,
                    rec.audio,
                    rec.duration_seconds,
                    Language(rec.language).value,
                    rec.mode.value,
                    rec.capture.value,
                    rec.setting.value if rec.setting else None,
                    run_id,
                    rec.created_at.timestamp(),
                ),
            )
            return cursor.rowcount == 1

    def get_recording(self, recording_id: str) -> StoredRecording | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM recordings WHERE id = ?", (recording_id,)
            ).fetchone()
        if row is None:
            return None
        rec = FeedbackRecording(
            id=row["id"],
            speaker=row["speaker"],
            audio=row["audio"],
            media_type=row["media_type"],
            duration_seconds=row["duration"],
            language=Language(row["language"]),
            mode=FeedbackMode(row["mode"]),
            capture=CaptureModule(row["capture"]),
            setting=NoiseSetting(row["setting"]) if row["setting"] else None,
            created_at=datetime.fromtimestamp(row["created_at"], tz=timezone.utc),
        )
        return StoredRecording(recording=rec, run_id=row["run_id"], status=row["status"])

    def list_recordings(self, speaker: str | None = None) -> list[dict]:
        query = (
            "SELECT id, speaker, mode, capture, setting, run_id, status, duration, created_at"
            " FROM recordings"
        )
        args: tuple = ()
        if speaker is not None:
            query += " WHERE speaker = ?"
            args = (speaker,)
        query += " ORDER BY created_at, id"
        with self._lock:
            rows = self._conn.execute(query, args).fetchall()
        return [dict(row) for row in rows]

    def set_recording_status(self, recording_id: str, status: str) -> None:
        with self._tx() as conn:
            conn.execute(
                "UPDATE recordings SET status = ? WHERE id = ?", (status, recording_id)
            )

    # -- transcripts ----------------------------------------------------------

    def store_transcript(self, transcript: Transcript, job_id: int | None = None) -> None:
        """Write the transcript, flip the recording to transcribed, and (when
        given) complete the producing job, all in one transaction."""
        with self._tx() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO transcripts"
                " (recording_id, text, language, engine_id, edited, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (
                    transcript.recording_id,
                    transcript.text,
                    transcript.language.value,
                    transcript.engine_id,
                    int(transcript.edited),
                    time.time(),
                ),
            )
            conn.execute(
                "UPDATE recordings SET status = 'transcribed' WHERE id = ?",
                (transcript.recording_id,),
            )
            if job_id is not None:
                conn.execute("UPDATE jobs SET status = 'done' WHERE id = ?", (job_id,))

    def get_transcript(self, recording_id: str) -> Transcript | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM transcripts WHERE recording_id = ?", (recording_id,)
            ).fetchone()
        if row is None:
            return None
        return Transcript(
            recording_id=row["recording_id"],
            text=row["text"],
            language=Language(row["language"]),
            engine_id=row["engine_id"],
            edited=bool(row["edited"]),
        )

    def update_transcript_text(self, recording_id: str, text: str) -> bool:
        with self._tx() as conn:
            cursor = conn.execute(
                "UPDATE transcripts SET text = ?, edited = 1 WHERE recording_id = ?",
                (text, recording_id),
            )
            return cursor.rowcount == 1

    # -- analyses ---------------------------------------------------------------

    def store_analysis(self, recording_id: str, payload: str, status: str,
                       job_id: int | None = None) -> None:
        with self._tx() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO analyses (recording_id, payload, status, created_at)"
                " VALUES (?, ?, ?, ?)",
                (recording_id, payload, status, time.time()),
            )
            if job_id is not None:
                conn.execute("UPDATE jobs SET status = 'done' WHERE id = ?", (job_id,))

    def get_analysis(self, recording_id: str) -> tuple[str, str] | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload, status FROM analyses WHERE recording_id = ?",
                (recording_id,),
            ).fetchone()
        return (row["payload"], row["status"]) if row else None

    # -- submissions --------------------------------------------------------------

    def add_submission(self, recording_id: str, choice: str, submitted_by: str) -> str:
        submission_id = secrets.token_hex(8)
        with self._tx() as conn:
            conn.execute(
                "INSERT INTO submissions (id, recording_id, choice, submitted_by, created_at)"
                " VALUES (?, ?, ?, ?, ?)",
                (submission_id, recording_id, choice, submitted_by, time.time()),
            )
        return submission_id

    def list_submissions(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT s.id, s.recording_id, s.choice, s.submitted_by, s.priority,"
                "       r.mode, r.capture, r.setting"
                " FROM submissions s JOIN recordings r ON r.id = s.recording_id"
                " ORDER BY s.created_at, s.id"
            ).fetchall()
        return [dict(row) for row in rows]

    def set_submission_priority(self, submission_id: str, priority: int) -> bool:
        with self._tx() as conn:
            cursor = conn.execute(
                "UPDATE submissions SET priority = ? WHERE id = ?",
                (priority, submission_id),
            )
            return cursor.rowcount == 1

    # -- jobs ------------------------------------------------------------------------

    def enqueue_job(self, kind: str, recording_id: str) -> int:
        with self._tx() as conn:
            row = conn.execute(
                "SELECT id FROM jobs WHERE kind = ? AND recording_id = ?"
                " AND status IN ('pending', 'running')",
                (kind, recording_id),
            ).fetchone()
            if row:
                return row["id"]
            cursor = conn.execute(
                "INSERT INTO jobs (kind, recording_id, created_at) VALUES (?, ?, ?)",
                (kind, recording_id, time.time()),
            )
            return cursor.lastrowid

    def claim_job(self) -> dict | None:
        with self._tx() as conn:
            row = conn.execute(
                "SELECT id, kind, recording_id, attempts FROM jobs"
                " WHERE status = 'pending' ORDER BY id LIMIT 1"
            ).fetchone()
            if row is None:
                return None
            conn.execute(
                "UPDATE jobs SET status = 'running', attempts = attempts + 1 WHERE id = ?",
                (row["id"],),
            )
            return dict(row)

    def finish_job(self, job_id: int, status: str) -> None:
        with self._tx() as conn:
            conn.execute("UPDATE jobs SET status = ? WHERE id = ?", (status, job_id))

    def requeue_job(self, job_id: int) -> None:
        with self._tx() as conn:
            conn.execute("UPDATE jobs SET status = 'pending' WHERE id = ?", (job_id,))

    def reset_running_jobs(self) -> int:
        """Crash recovery: anything still marked running restarts from the
        queue (at-least-once delivery, consumers are idempotent)."""
        with self._tx() as conn:
            cursor = conn.execute(
                "UPDATE jobs SET status = 'pending' WHERE status = 'running'"
            )
            return cursor.rowcount

    def pending_jobs(self) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) AS n FROM jobs WHERE status IN ('pending', 'running')"
            ).fetchone()
        return row["n"]

    # -- reports ------------------------------------------------------------------------

    def baseline_rows(self, run_id: str) -> list[tuple[str, NoiseSetting, str]]:
        """(participant, setting, transcript text) for every transcribed
        baseline recording of the run; participant is the speaker account
        name."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT r.speaker AS participant, r.setting AS setting, t.text AS text"
                " FROM recordings r"
                " JOIN transcripts t ON t.recording_id = r.id"
                " WHERE r.mode = 'baseline' AND r.run_id = ?"
                " ORDER BY participant, setting",
                (run_id,),
            ).fetchall()
        return [
            (row["participant"], NoiseSetting(row["setting"]), row["text"]) for row in rows
        ]

    def run_exists(self, run_id: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM recordings WHERE run_id = ? LIMIT 1", (run_id,)
            ).fetchone()
        return row is not None

    # -- deletion and retention -----------------------------------------------------------

    def delete_recordings(self, recording_ids: list[str]) -> dict[str, int]:
        """Remove the recordings and every artifact derived from them;
        returns counts per kind."""
        counts = {"recordings": 0, "transcripts": 0, "analyses": 0, "submissions": 0, "jobs": 0}
        if not recording_ids:
            return counts
        marks = ",".join("?" for _ in recording_ids)
        with self._tx() as conn:
            for table, key in (
                ("submissions", "recording_id"),
                ("analyses", "recording_id"),
                ("transcripts", "recording_id"),
                ("jobs", "recording_id"),
            ):
                cursor = conn.execute(
                    f"DELETE FROM {table} WHERE {key} IN ({marks})", recording_ids
                )
                counts[table] += cursor.rowcount
            cursor = conn.execute(
                f"DELETE FROM recordings WHERE id IN ({marks})", recording_ids
            )
            counts["recordings"] += cursor.rowcount
        return counts

    def recordings_of_speaker(self, speaker: str) -> list[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id FROM recordings WHERE speaker = ?", (speaker,)
            ).fetchall()
        return [row["id"] for row in rows]

    def reference_counts(self, recording_id: str) -> dict[str, int]:
        """How many rows in any table still reference the recording; used by
        the cascade-deletion checks."""
        counts = {}
        with self._lock:
            for table, key in (
                ("recordings", "id"),
                ("transcripts", "recording_id"),
                ("analyses", "recording_id"),
                ("submissions", "recording_id"),
                ("jobs", "recording_id"),
            ):
                row = self._conn.execute(
                    f"SELECT COUNT(*) AS n FROM {table} WHERE {key} = ?", (recording_id,)
                ).fetchone()
                counts[table] = row["n"]
        return counts

    def purge_expired(self, retention: RetentionPolicy, now: float | None = None) -> dict[str, int]:
        """Apply the retention policy. Expired audio removes the recording
        and everything derived from it; expired derived artifacts are
        removed on their own."""
        now = time.time() if now is None else now
        removed = {"recordings": 0, "transcripts": 0, "analyses": 0, "submissions": 0, "jobs": 0}
        if retention.audio_days is not None:
            cutoff = now - retention.audio_days * 86400
            with self._lock:
                rows = self._conn.execute(
                    "SELECT id FROM recordings WHERE created_at < ?", (cutoff,)
                ).fetchall()
            counts = self.delete_recordings([row["id"] for row in rows])
            for key, value in counts.items():
                removed[key] += value
        for table, days in (
            ("transcripts", retention.transcript_days),
            ("analyses", retention.analysis_days),
        ):
            if days is None:
                continue
            cutoff = now - days * 86400
            with self._tx() as conn:
                cursor = conn.execute(
                    f"DELETE FROM {table} WHERE created_at < ?", (cutoff,)
                )
                removed[table] += cursor.rowcount
        return removed
