"""Transcription engines and controlled error injection.

Real speech models sit behind a small HTTP contract (audio in, text out);
the built-in mock engine is fully deterministic so every downstream metric
has exact ground truth. ``inject_errors`` fabricates hypotheses whose
minimal word alignment against a reference is known in advance.
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Mapping

from .domain import FeedbackRecording, Language, Transcript, parse_language


class EngineUnavailable(RuntimeError):
    """The external engine could not be reached; the recording must be
    retained and retried, never dropped."""


def post_json(
    url: str,
    payload: dict,
    *,
    timeout: float = 10.0,
    retries: int = 2,
    backoff_seconds: float = 0.2,
) -> dict:
    """POST a JSON body and decode the JSON response, retrying transient
    failures. Raises EngineUnavailable when the endpoint stays unreachable
    and UnsupportedLanguage on a 422."""
    body = json.dumps(payload).encode("utf-8")
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        request = urllib.request.Request(
            url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=timeout) as response:
                raw = response.read()
            parsed = json.loads(raw)
            if not isinstance(parsed, dict):
                raise EngineUnavailable(f"engine at {url} returned a non-object response")
            return parsed
        except urllib.error.HTTPError as exc:
            if exc.code == 422:
                raise UnsupportedLanguage("engine rejected the language") from exc
            last_error = exc
        except json.JSONDecodeError as exc:
            raise EngineUnavailable(f"malformed engine response: {exc}") from exc
        except (urllib.error.URLError, TimeoutError, ConnectionError, OSError) as exc:
            last_error = exc
        if attempt < retries and backoff_seconds:
            time.sleep(backoff_seconds * (attempt + 1))
    raise EngineUnavailable(f"engine at {url} unreachable: {last_error}")


class UnsupportedLanguage(ValueError):
    """The engine does not transcribe the recording's language."""


class SpecInfeasible(ValueError):
    """The requested error counts cannot be realized on this reference."""


class TranscriptionEngine:
    """Contract every transcription engine implements."""

    engine_id: str = "engine"
    languages: frozenset[Language] = frozenset(Language)

    def transcribe(self, recording: FeedbackRecording) -> Transcript:
        raise NotImplementedError

    def _check_language(self, recording: FeedbackRecording) -> Language:
        language = parse_language(recording.language)
        if language not in self.languages:
            raise UnsupportedLanguage(
                f"engine {self.engine_id} does not support {language.value}"
            )
        return language


_MOCK_WORDS = (
    "the field sensor shows dry soil near the north fence and the app "
    "map needs an update for tracking the tractor rows today"
).split()


class MockEngine(TranscriptionEngine):
    """Deterministic offline engine.

    If a sidecar mapping carries text for the recording id, that text is
    echoed verbatim; otherwise a pseudo-text is derived from the recording
    id and the seed, so the same (id, seed) always yields the same
    transcript.
    """

    def __init__(
        self,
        seed: int = 0,
        sidecar: Mapping[str, str] | None = None,
        languages: frozenset[Language] = frozenset(Language),
    ):
        self.engine_id = f"mock-{seed}"
        self.seed = seed
        self.sidecar = dict(sidecar or {})
        self.languages = languages

    def transcribe(self, recording: FeedbackRecording) -> Transcript:
        language = self._check_language(recording)
        if recording.id in self.sidecar:
            text = self.sidecar[recording.id]
        else:
            text = self._generate(recording.id)
        return Transcript(
            recording_id=recording.id,
            text=text,
            language=language,
            engine_id=self.engine_id,
        )

    def _generate(self, recording_id: str) -> str:
        digest = hashlib.sha256(f"{self.seed}:{recording_id}".encode()).digest()
        count = 8 + digest[0] % 5
        words = [
            _MOCK_WORDS[digest[1 + i] % len(_MOCK_WORDS)] for i in range(count)
        ]
        return " ".join(words)


class HttpEngine(TranscriptionEngine):
    """Client for an external engine speaking the plain request/response
    protocol: POST {audio (base64), media_type, language} -> {text,
    engine_id}."""

    def __init__(
        self,
        url: str,
        *,
        timeout: float = 10.0,
        retries: int = 2,
        backoff_seconds: float = 0.2,
        languages: frozenset[Language] = frozenset(Language),
    ):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.backoff_seconds = backoff_seconds
        self.languages = languages
        self.engine_id = f"http:{url}"

    def transcribe(self, recording: FeedbackRecording) -> Transcript:
        language = self._check_language(recording)
        parsed = post_json(
            self.url,
            {
                "audio": base64.b64encode(recording.audio).decode("ascii"),
                "media_type": recording.media_type,
                "language": language.value,
            },
            timeout=self.timeout,
            retries=self.retries,
            backoff_seconds=self.backoff_seconds,
        )
        try:
            text = parsed["text"]
        except KeyError as exc:
            raise EngineUnavailable("engine response is missing the text field") from exc
        return Transcript(
            recording_id=recording.id,
            text=text,
            language=language,
            engine_id=parsed.get("engine_id", self.engine_id),
        )


# ---------------------------------------------------------------------------
# Error injection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorInjectionSpec:
    """Exact substitution/deletion/insertion counts to plant in a reference,
    realized pseudo-randomly from the seed."""

    substitutions: int
    deletions: int
    insertions: int
    seed: int

    def __post_init__(self) -> None:
        if min(self.substitutions, self.deletions, self.insertions) < 0:
            raise ValueError("error counts must be nonnegative")


def _nonsense_tokens(count: int, forbidden: set[str]) -> list[str]:
    # Tokens guaranteed absent from real text, so minimal alignments stay
    # unique; each token is used at most once per hypothesis.
    out: list[str] = []
    index = 1
    while len(out) < count:
        candidate = f"zq{index}"
        index += 1
        if candidate not in forbidden:
            out.append(candidate)
    return out


def _untouched_between(low: int, high: int, edited: set[int]) -> int:
    return sum(1 for pos in range(low, high) if pos not in edited)


def _placement_ok(deletions: set[int], gaps: list[int], edited: set[int]) -> bool:
    # Merging k deletion/insertion pairs into substitutions saves k but
    # mismatches every untouched token the shift crosses, so the intended
    # alignment stays the strict lexicographic minimum as long as every
    # deletion and insertion gap are separated by more than min(d, i)
    # untouched tokens (substituted tokens shift cost-neutrally and do not
    # count).
    if not deletions or not gaps:
        return True
    required = min(len(deletions), len(gaps)) + 2
    for p in deletions:
        for g in gaps:
            if g > p:
                span = _untouched_between(p + 1, g, edited)
            else:
                span = _untouched_between(g, p, edited)
            if span < required:
                return False
    return True


def inject_errors(reference: str, spec: ErrorInjectionSpec) -> str:
    """Build a hypothesis whose minimal word alignment against ``reference``
    has exactly the requested (S, D, I).

    Exactness relies on replacement tokens never occurring in the reference
    and on deletions being kept apart from insertion points; when the
    reference is too short or too crowded to separate them, SpecInfeasible
    is raised rather than returning an ambiguous hypothesis.
    """
    if spec.substitutions == spec.deletions == spec.insertions == 0:
        return reference
    tokens = reference.split()
    n = len(tokens)
    s, d, i = spec.substitutions, spec.deletions, spec.insertions
    if s + d > n:
        raise SpecInfeasible(f"{s} substitutions + {d} deletions exceed {n} reference words")

    rng = random.Random(spec.seed)
    placement = None
    for _ in range(1000):
        edit_positions = rng.sample(range(n), s + d)
        sub_positions = set(edit_positions[:s])
        del_positions = set(edit_positions[s:])
        gaps = [rng.randrange(n + 1) for _ in range(i)]
        if _placement_ok(del_positions, gaps, set(edit_positions)):
            placement = (sub_positions, del_positions, gaps)
            break
    if placement is None:
        raise SpecInfeasible(
            "cannot place deletions and insertions far enough apart for an unambiguous alignment"
        )
    sub_positions, del_positions, gaps = placement

    replacements = _nonsense_tokens(s + i, set(tokens))
    sub_tokens = dict(zip(sorted(sub_positions), replacements[:s]))
    insert_tokens: dict[int, list[str]] = {}
    for gap, token in zip(sorted(gaps), replacements[s:]):
        insert_tokens.setdefault(gap, []).append(token)

    out: list[str] = []
    for index in range(n + 1):
        out.extend(insert_tokens.get(index, ()))
        if index < n:
            if index in del_positions:
                continue
            out.append(sub_tokens.get(index, tokens[index]))
    return " ".join(out)
