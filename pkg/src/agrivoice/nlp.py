"""Post-processing of transcripts and audio: keywords, extractive summary,
lexicon sentiment, audio emotion, and translation.

The built-in algorithms are deterministic pure functions of (text, language,
config); named pretrained models can be plugged in behind the same HTTP
adapter contract as the transcription engines. Lexicons and stopword lists
ship as plain UTF-8 data files, one term per line (valence entries are
term TAB signed decimal).
"""

from __future__ import annotations

import base64
import enum
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .audio import UnsupportedAudio, wav_rms
from .domain import FeedbackRecording, Language, Transcript
from .stt import EngineUnavailable, post_json

SENTIMENT_THRESHOLD = 0.1
LOUDNESS_THRESHOLD = 0.5

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_TOKEN_STRIP = re.compile(r"^\W+|\W+$", re.UNICODE)


class Sentiment(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"


class Emotion(str, enum.Enum):
    NEUTRAL = "neutral"
    HAPPY = "happy"
    SAD = "sad"
    ANGRY = "angry"


def _data_lines(relative: str) -> list[str]:
    raw = resources.files("agrivoice").joinpath(f"data/{relative}").read_text("utf-8")
    return [line.strip() for line in raw.splitlines() if line.strip() and not line.startswith("#")]


@lru_cache(maxsize=None)
def load_stopwords(language: Language) -> frozenset[str]:
    return frozenset(_data_lines(f"stopwords/{language.value}.txt"))


@lru_cache(maxsize=None)
def load_valence(language: Language) -> Mapping[str, float]:
    lexicon: dict[str, float] = {}
    for line in _data_lines(f"valence/{language.value}.tsv"):
        term, value = line.split("\t")
        valence = float(value)
        if not -1.0 <= valence <= 1.0:
            raise ValueError(f"valence for {term!r} outside [-1, 1]: {valence}")
        lexicon[term] = valence
    return lexicon


def tokenize(text: str) -> list[str]:
    """Casefolded tokens with surrounding punctuation stripped; tokens that
    are punctuation only disappear."""
    tokens = []
    for raw in text.split():
        tok = _TOKEN_STRIP.sub("", raw).casefold()
        if tok:
            tokens.append(tok)
    return tokens


# ---------------------------------------------------------------------------
# Text analysis
# ---------------------------------------------------------------------------

def extract_keywords(text: str, language: Language, k: int) -> list[str]:
    """Top-k non-stopword terms by frequency, ties broken lexicographically.
    Short texts simply yield fewer than k terms."""
    if k < 1:
        raise ValueError("k must be >= 1")
    stopwords = load_stopwords(language)
    counts = Counter(tok for tok in tokenize(text) if tok not in stopwords)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [term for term, _ in ranked[:k]]


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace. Abbreviation
    handling is out of scope."""
    stripped = text.strip()
    if not stripped:
        return []
    return [part for part in _SENTENCE_SPLIT.split(stripped) if part]


def summarize(text: str, max_sentences: int, language: Language = Language.EN) -> str:
    """Extractive summary: sentences ranked by summed non-stopword term
    frequency normalized by sentence length, emitted in original order."""
    if max_sentences < 1:
        raise ValueError("max_sentences must be >= 1")
    sentences = split_sentences(text)
    if len(sentences) <= max_sentences:
        return text.strip()
    stopwords = load_stopwords(language)
    doc_freq = Counter(
        tok for tok in tokenize(text) if tok not in stopwords
    )
    scored = []
    for index, sentence in enumerate(sentences):
        tokens = tokenize(sentence)
        weight = sum(doc_freq[tok] for tok in tokens if tok not in stopwords)
        score = weight / len(tokens) if tokens else 0.0
        scored.append((-score, index, sentence))
    selected = sorted(sorted(scored)[:max_sentences], key=lambda item: item[1])
    return " ".join(sentence for _, _, sentence in selected)


@dataclass(frozen=True)
class SentimentScore:
    label: Sentiment
    score: float


def text_sentiment(text: str, language: Language) -> SentimentScore:
    """Mean valence of matched lexicon terms; zero when nothing matches.
    The label follows the score against the fixed threshold."""
    lexicon = load_valence(language)
    matched = [lexicon[tok] for tok in tokenize(text) if tok in lexicon]
    score = sum(matched) / len(matched) if matched else 0.0
    if score > SENTIMENT_THRESHOLD:
        label = Sentiment.POSITIVE
    elif score < -SENTIMENT_THRESHOLD:
        label = Sentiment.NEGATIVE
    else:
        label = Sentiment.NEUTRAL
    return SentimentScore(label=label, score=score)


# ---------------------------------------------------------------------------
# Audio emotion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmotionScore:
    label: Emotion
    confidence: float


class HttpEmotionEngine:
    """Adapter for an external emotion model: POST {audio, media_type} ->
    {label, confidence, engine_id}."""

    def __init__(self, url: str, *, timeout: float = 10.0, retries: int = 2,
                 backoff_seconds: float = 0.2):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.backoff_seconds = backoff_seconds
        self.engine_id = f"http:{url}"

    def classify(self, recording: FeedbackRecording) -> EmotionScore:
        parsed = post_json(
            self.url,
            {
                "audio": base64.b64encode(recording.audio).decode("ascii"),
                "media_type": recording.media_type,
            },
            timeout=self.timeout,
            retries=self.retries,
            backoff_seconds=self.backoff_seconds,
        )
        try:
            label = Emotion(parsed["label"])
            confidence = float(parsed["confidence"])
        except (KeyError, ValueError, TypeError) as exc:
            raise EngineUnavailable(f"malformed emotion response: {exc}") from exc
        return EmotionScore(label=label, confidence=max(0.0, min(1.0, confidence)))


def audio_emotion(
    recording: FeedbackRecording,
    *,
    engine: HttpEmotionEngine | None = None,
    loudness_threshold: float = LOUDNESS_THRESHOLD,
) -> EmotionScore:
    """Emotion for a recording.

    With an external engine configured the call is delegated (and
    EngineUnavailable propagates so callers can mark the result pending).
    The built-in stub reports neutral at 0.5 confidence, except that RMS
    loudness above the threshold is read as anger.
    """
    if engine is not None:
        return engine.classify(recording)
    try:
        rms = wav_rms(recording.audio)
    except UnsupportedAudio:
        return EmotionScore(label=Emotion.NEUTRAL, confidence=0.5)
    if rms > loudness_threshold:
        return EmotionScore(label=Emotion.ANGRY, confidence=min(1.0, rms))
    return EmotionScore(label=Emotion.NEUTRAL, confidence=0.5)


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TranslationResult:
    text: str
    target: Language
    translated: bool


class HttpTranslationEngine:
    """Adapter for an external translator: POST {text, source, target} ->
    {text, engine_id}."""

    def __init__(self, url: str, *, timeout: float = 10.0, retries: int = 2,
                 backoff_seconds: float = 0.2):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.backoff_seconds = backoff_seconds

    def translate(self, text: str, source: Language, target: Language) -> str:
        parsed = post_json(
            self.url,
            {"text": text, "source": source.value, "target": target.value},
            timeout=self.timeout,
            retries=self.retries,
            backoff_seconds=self.backoff_seconds,
        )
        try:
            return parsed["text"]
        except KeyError as exc:
            raise EngineUnavailable("translator response is missing the text field") from exc


class Translator:
    """Caches per (text, target language); the external adapter is invoked
    at most once per key. Without an engine the input passes through
    unchanged, flagged as untranslated."""

    def __init__(self, engine: HttpTranslationEngine | None = None):
        self.engine = engine
        self._cache: dict[tuple[str, Language], TranslationResult] = {}

    def translate(self, text: str, source: Language, target: Language) -> TranslationResult:
        if source == target:
            raise ValueError("source and target language must differ")
        key = (text, target)
        if key in self._cache:
            return self._cache[key]
        if self.engine is None:
            result = TranslationResult(text=text, target=target, translated=False)
        else:
            result = TranslationResult(
                text=self.engine.translate(text, source, target),
                target=target,
                translated=True,
            )
        self._cache[key] = result
        return result


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalysisResult:
    """Per-recording analysis with a status per field: "ok", "pending" when
    an external engine is unreachable, or "absent" when the input for that
    field does not exist."""

    recording_id: str
    keywords: tuple[str, ...]
    summary: str
    sentiment: SentimentScore | None
    emotion: EmotionScore | None
    translation: TranslationResult | None
    status: Mapping[str, str]


def analyze(
    transcript: Transcript | None,
    recording: FeedbackRecording | None,
    *,
    keyword_count: int = 5,
    summary_sentences: int = 2,
    emotion_engine: HttpEmotionEngine | None = None,
    loudness_threshold: float = LOUDNESS_THRESHOLD,
    translator: Translator | None = None,
    translate_to: Language | None = None,
) -> AnalysisResult:
    """Compose keyword, summary, sentiment, emotion, and translation for one
    recording. Partial inputs produce partial results; nothing is fabricated
    for a missing side."""
    status: dict[str, str] = {}
    keywords: tuple[str, ...] = ()
    summary = ""
    sentiment = None
    if transcript is not None:
        keywords = tuple(extract_keywords(transcript.text, transcript.language, keyword_count))
        summary = summarize(transcript.text, summary_sentences, transcript.language)
        sentiment = text_sentiment(transcript.text, transcript.language)
        status["keywords"] = status["summary"] = status["sentiment"] = "ok"
    else:
        status["keywords"] = status["summary"] = status["sentiment"] = "absent"

    emotion = None
    if recording is not None and recording.audio:
        try:
            emotion = audio_emotion(
                recording, engine=emotion_engine, loudness_threshold=loudness_threshold
            )
            status["emotion"] = "ok"
        except EngineUnavailable:
            status["emotion"] = "pending"
    else:
        status["emotion"] = "absent"

    translation = None
    if transcript is None or translate_to is None or translate_to == transcript.language:
        status["translation"] = "absent"
    else:
        translator = translator or Translator()
        try:
            translation = translator.translate(transcript.text, transcript.language, translate_to)
            status["translation"] = "ok"
        except EngineUnavailable:
            status["translation"] = "pending"

    rec_id = transcript.recording_id if transcript is not None else recording.id
    return AnalysisResult(
        recording_id=rec_id,
        keywords=keywords,
        summary=summary,
        sentiment=sentiment,
        emotion=emotion,
        translation=translation,
        status=status,
    )
