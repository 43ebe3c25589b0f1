import io
import wave

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agrivoice.domain import (
    CaptureModule,
    FeedbackMode,
    FeedbackRecording,
    Language,
    Transcript,
)
from agrivoice.nlp import (
    Emotion,
    HttpEmotionEngine,
    Sentiment,
    Translator,
    analyze,
    audio_emotion,
    extract_keywords,
    load_stopwords,
    split_sentences,
    summarize,
    text_sentiment,
)

REVIEW_OFFLINE = (
    "I am still waiting offline function. We work near border of republic. "
    "There are no internet."
)
REVIEW_SUPPORT = (
    "If you tell them a problem, they will not listen to it for 48 hours. "
    "When the plants are completely damaged, their suggestion comes."
)


def make_wav(samples, framerate=8000):
    buf = io.BytesIO()
    with wave.open(buf, "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(framerate)
        writer.writeframes(b"".join(int(s).to_bytes(2, "little", signed=True) for s in samples))
    return buf.getvalue()


def make_recording(audio, capture=CaptureModule.AUDIO_SENTIMENT):
    return FeedbackRecording(
        id="rec-1",
        speaker="farmer-1",
        audio=audio,
        media_type="audio/wav",
        duration_seconds=1.0,
        language=Language.EN,
        mode=FeedbackMode.FREE_FORM,
        capture=capture,
    )


# -- keywords ------------------------------------------------------------------

def test_keywords_frequency_and_stopwords():
    text = "field field field tracking tracking the the"
    assert extract_keywords(text, Language.EN, 2) == ["field", "tracking"]


def test_keywords_empty_text():
    assert extract_keywords("", Language.EN, 3) == []


def test_keywords_review_fixture_tie_break():
    # All content words occur once; the lexicographic tie-break fills k=3.
    assert extract_keywords(REVIEW_OFFLINE, Language.EN, 3) == [
        "border",
        "function",
        "internet",
    ]


def test_keywords_short_text_returns_fewer():
    assert extract_keywords("rainfall", Language.EN, 5) == ["rainfall"]


def test_keywords_k_must_be_positive():
    with pytest.raises(ValueError):
        extract_keywords("field", Language.EN, 0)


@given(st.text(alphabet="abcdefgh itofr.", max_size=80))
@settings(max_examples=150)
def test_keywords_never_contain_stopwords(text):
    stopwords = load_stopwords(Language.EN)
    assert not set(extract_keywords(text, Language.EN, 10)) & stopwords


# -- summarize -----------------------------------------------------------------

def test_summarize_single_sentence_verbatim():
    text = "The soil sensor needs a firmware update."
    assert summarize(text, 3) == text


def test_summarize_prefers_dense_sentence():
    # Scores: 2/4 for the first, 8/6 for the second, 2/5 for the third.
    text = (
        "The weather was fine. "
        "Tractor guidance keeps tractor rows straight. "
        "We think it is okay."
    )
    assert summarize(text, 1) == "Tractor guidance keeps tractor rows straight."


def test_summarize_keeps_original_order():
    text = (
        "Tractor tractor tractor rows. "
        "Nothing of note here. "
        "Tractor tractor guidance rows."
    )
    summary = summarize(text, 2)
    assert summary == "Tractor tractor tractor rows. Tractor tractor guidance rows."


def test_summarize_no_truncation_needed():
    text = "One sentence. Two sentences."
    assert summarize(text, 2) == text
    assert summarize(text, 9) == text


@given(st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta"]), min_size=1, max_size=30))
@settings(max_examples=100)
def test_summary_is_sentence_subsequence(words):
    # Build 1-6 sentences out of the word soup.
    text = ". ".join(" ".join(words[i::5]) for i in range(min(5, len(words)))) + "."
    full = split_sentences(text)
    summary_sentences = split_sentences(summarize(text, 2))
    indexes = [full.index(s) for s in summary_sentences]
    assert indexes == sorted(indexes)
    assert all(s in full for s in summary_sentences)


# -- sentiment -------------------------------------------------------------------

def test_sentiment_positive():
    result = text_sentiment("great helpful accurate", Language.EN)
    assert result.label is Sentiment.POSITIVE
    assert result.score == pytest.approx((0.8 + 0.7 + 0.6) / 3)


def test_sentiment_empty_is_neutral():
    result = text_sentiment("", Language.EN)
    assert result.label is Sentiment.NEUTRAL
    assert result.score == 0.0


def test_sentiment_support_review_negative():
    result = text_sentiment(REVIEW_SUPPORT, Language.EN)
    assert result.label is Sentiment.NEGATIVE
    assert result.score < -0.1


def test_sentiment_german_lexicon():
    assert text_sentiment("super hilfreich", Language.DE).label is Sentiment.POSITIVE
    assert text_sentiment("kaputt und nutzlos", Language.DE).label is Sentiment.NEGATIVE


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz .", max_size=120))
@settings(max_examples=150)
def test_sentiment_score_bounded_and_consistent(text):
    result = text_sentiment(text, Language.EN)
    assert -1.0 <= result.score <= 1.0
    if result.score > 0.1:
        assert result.label is Sentiment.POSITIVE
    elif result.score < -0.1:
        assert result.label is Sentiment.NEGATIVE
    else:
        assert result.label is Sentiment.NEUTRAL


# -- audio emotion ---------------------------------------------------------------

def test_silent_audio_neutral():
    rec = make_recording(make_wav([0] * 800))
    result = audio_emotion(rec)
    assert result.label is Emotion.NEUTRAL
    assert result.confidence == 0.5


def test_full_scale_square_wave_angry():
    # RMS of a full-scale square wave is 32767/32768, far above threshold.
    samples = [32767 if i % 2 else -32767 for i in range(800)]
    rec = make_recording(make_wav(samples))
    result = audio_emotion(rec)
    assert result.label is Emotion.ANGRY
    assert result.confidence == pytest.approx(32767 / 32768, abs=1e-9)


def test_unparseable_audio_falls_back_to_neutral():
    rec = make_recording(b"OggS not really audio")
    result = audio_emotion(rec)
    assert result.label is Emotion.NEUTRAL
    assert result.confidence == 0.5


def test_engine_down_propagates():
    engine = HttpEmotionEngine("http://127.0.0.1:1", timeout=0.2, retries=0, backoff_seconds=0)
    rec = make_recording(make_wav([0] * 100))
    from agrivoice.stt import EngineUnavailable

    with pytest.raises(EngineUnavailable):
        audio_emotion(rec, engine=engine)


# -- translation -----------------------------------------------------------------

class CountingEngine:
    def __init__(self):
        self.calls = 0

    def translate(self, text, source, target):
        self.calls += 1
        return f"[{target.value}] {text}"


def test_translate_stub_passthrough():
    translator = Translator()
    result = translator.translate("der Acker ist trocken", Language.DE, Language.EN)
    assert result.text == "der Acker ist trocken"
    assert not result.translated
    assert result.target is Language.EN


def test_translate_same_language_rejected():
    with pytest.raises(ValueError):
        Translator().translate("hello", Language.EN, Language.EN)


def test_translate_cache_invokes_engine_once():
    engine = CountingEngine()
    translator = Translator(engine=engine)
    first = translator.translate("hallo", Language.DE, Language.EN)
    second = translator.translate("hallo", Language.DE, Language.EN)
    assert first == second
    assert first.translated
    assert engine.calls == 1


# -- composition -----------------------------------------------------------------

def transcript_for(text):
    return Transcript(
        recording_id="rec-1",
        text=text,
        language=Language.EN,
        engine_id="mock-0",
    )


def test_analyze_full_inputs():
    rec = make_recording(make_wav([0] * 400), capture=CaptureModule.SPEECH_TO_TEXT)
    result = analyze(transcript_for("The map is great. The map tracks every field."), rec)
    assert result.recording_id == "rec-1"
    assert "map" in result.keywords
    assert result.sentiment.label is Sentiment.POSITIVE
    assert result.emotion.label is Emotion.NEUTRAL
    assert result.status == {
        "keywords": "ok",
        "summary": "ok",
        "sentiment": "ok",
        "emotion": "ok",
        "translation": "absent",
    }


def test_analyze_audio_only():
    rec = make_recording(make_wav([0] * 400))
    result = analyze(None, rec)
    assert result.keywords == ()
    assert result.summary == ""
    assert result.sentiment is None
    assert result.emotion is not None
    assert result.status["keywords"] == "absent"
    assert result.status["emotion"] == "ok"


def test_analyze_empty_transcript():
    result = analyze(transcript_for(""), None)
    assert result.keywords == ()
    assert result.summary == ""
    assert result.sentiment.label is Sentiment.NEUTRAL
    assert result.status["emotion"] == "absent"


def test_analyze_engine_down_marks_pending():
    engine = HttpEmotionEngine("http://127.0.0.1:1", timeout=0.2, retries=0, backoff_seconds=0)
    rec = make_recording(make_wav([0] * 100))
    result = analyze(None, rec, emotion_engine=engine)
    assert result.emotion is None
    assert result.status["emotion"] == "pending"


def test_analyze_translation_requested():
    result = analyze(
        transcript_for("the field is dry"),
        None,
        translate_to=Language.DE,
    )
    assert result.translation is not None
    assert not result.translation.translated
    assert result.status["translation"] == "ok"
