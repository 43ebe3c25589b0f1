"""Minimal WAV ingestion for the loudness heuristic.

Accepts RIFF WAV containers with little-endian integer PCM, 8 or 16 bit,
any sample rate, mono or interleaved multi-channel. RMS is normalized to
[0, 1] against full scale. Compressed containers (e.g. OGG) are stored and
forwarded to external engines untouched; they yield no loudness value.
"""

from __future__ import annotations

import io
import wave

import numpy as np


class UnsupportedAudio(ValueError):
    """Payload is not PCM WAV this module can read."""


def wav_rms(data: bytes) -> float:
    """Root-mean-square level of a WAV payload, normalized to [0, 1]."""
    try:
        with wave.open(io.BytesIO(data)) as reader:
            width = reader.getsampwidth()
            frames = reader.readframes(reader.getnframes())
    except (wave.Error, EOFError) as exc:
        raise UnsupportedAudio(f"not a readable WAV payload: {exc}") from exc
    if not frames:
        return 0.0
    if width == 2:
        samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 1:
        # 8-bit WAV is unsigned with a 128 midpoint.
        samples = (np.frombuffer(frames, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        raise UnsupportedAudio(f"{8 * width}-bit PCM is not supported")
    return float(np.sqrt(np.mean(np.square(samples))))
