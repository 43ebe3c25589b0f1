"""Transcription accuracy metrics and the significance test behind the
evaluation report.

Everything here is a pure function; parallel invocation is safe. Word
alignment uses unit costs for substitution, deletion and insertion, with
ties broken in favour of substitutions over insertion+deletion pairs.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .domain import BaselineText


class EmptyReference(ValueError):
    """The reference token list is empty, so a rate cannot be formed."""


class InsufficientData(ValueError):
    """Fewer than two values; a sample standard deviation needs n >= 2."""


class InsufficientPairs(ValueError):
    """Fewer than two matched pairs; the paired test needs n >= 2."""


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationPolicy:
    """Token preprocessing applied before word alignment.

    The policy is recorded in the report header so results stay
    interpretable. Tokenization always splits on Unicode whitespace.
    """

    fold_case: bool = True
    strip_punctuation: bool = True


DEFAULT_POLICY = NormalizationPolicy()


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def normalize(text: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> list[str]:
    """Deterministically turn text into the token list used for alignment.

    Tokens that consist only of punctuation are dropped entirely under the
    default policy. Empty text yields an empty list.
    """
    tokens = []
    for raw in text.split():
        tok = _strip_punct(raw) if policy.strip_punctuation else raw
        if policy.fold_case:
            tok = tok.casefold()
        if tok:
            tokens.append(tok)
    return tokens


# ---------------------------------------------------------------------------
# Edit distances
# ---------------------------------------------------------------------------

def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance over Unicode scalar values, unit costs.

    Row-wise dynamic program; the insertion recurrence is resolved with a
    prefix-minimum so each row is vectorized.
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    ca = np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32)
    cb = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32)
    n = cb.size
    prev = np.arange(n + 1, dtype=np.int64)
    cur = np.empty(n + 1, dtype=np.int64)
    jj = np.arange(1, n + 1, dtype=np.int64)
    for i in range(1, ca.size + 1):
        # Best of substitution/match and deletion, before insertions.
        m = np.minimum(prev[:-1] + (cb != ca[i - 1]), prev[1:] + 1)
        # cur[j] = min(m[j-1], cur[j-1] + 1) == j + prefix-min of (m[k-1] - k).
        cur[0] = i
        np.subtract(m, jj, out=cur[1:])
        np.minimum.accumulate(cur, out=cur)
        cur[1:] += jj
        prev, cur = cur, prev
    return int(prev[n])


@dataclass(frozen=True)
class TokenAlignment:
    """Error counts of a minimum-cost word alignment against a reference of
    ``reference_length`` words."""

    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    def __post_init__(self) -> None:
        if min(self.substitutions, self.deletions, self.insertions, self.reference_length) < 0:
            raise ValueError("alignment counts must be nonnegative")
        if self.substitutions + self.deletions > self.reference_length:
            raise ValueError("substitutions + deletions cannot exceed the reference length")

    @property
    def total_errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align(reference: Sequence[str], hypothesis: Sequence[str]) -> TokenAlignment:
    """Minimum-cost word alignment under unit costs.

    Each cell carries (cost, deletions) and is minimized lexicographically;
    within one cell deletions minus insertions is fixed, so minimizing
    deletions prefers a substitution over an insertion+deletion pair
    whenever the total cost ties.
    """
    ref = list(reference)
    hyp = list(hypothesis)
    m, n = len(ref), len(hyp)
    prev = [(j, 0) for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [(i, i)] + [(0, 0)] * n
        ri = ref[i - 1]
        for j in range(1, n + 1):
            pc, pd = prev[j - 1]
            best = (pc + (ri != hyp[j - 1]), pd)
            dc, dd = prev[j]
            if (dc + 1, dd + 1) < best:
                best = (dc + 1, dd + 1)
            ic, idel = cur[j - 1]
            if (ic + 1, idel) < best:
                best = (ic + 1, idel)
            cur[j] = best
        prev = cur
    cost, deletions = prev[n]
    insertions = deletions - (m - n)
    substitutions = cost - deletions - insertions
    return TokenAlignment(substitutions, deletions, insertions, m)


def word_error_rate(alignment: TokenAlignment) -> float:
    """(S + D + I) / N. May exceed 1.0 when insertions dominate."""
    if alignment.reference_length == 0:
        raise EmptyReference("word error rate is undefined for an empty reference")
    return alignment.total_errors / alignment.reference_length


# ---------------------------------------------------------------------------
# Length metrics
# ---------------------------------------------------------------------------

class LengthMetrics(NamedTuple):
    target_bytes: int
    byte_difference: int
    target_characters: int
    character_difference: int


def length_metrics(transcript: str, baseline: BaselineText) -> LengthMetrics:
    """Transcript size versus the baseline text; differences are
    target minus source."""
    target_bytes = len(transcript.encode("utf-8"))
    target_characters = len(transcript)
    return LengthMetrics(
        target_bytes=target_bytes,
        byte_difference=target_bytes - baseline.source_bytes,
        target_characters=target_characters,
        character_difference=target_characters - baseline.source_characters,
    )


# ---------------------------------------------------------------------------
# Aggregation and the paired one-tailed t-test
# ---------------------------------------------------------------------------

def mean(values: Iterable[float]) -> float:
    vals = [float(v) for v in values]
    if not vals:
        raise InsufficientData("mean of an empty sequence")
    return math.fsum(vals) / len(vals)


def aggregate(values: Iterable[float]) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (n-1 denominator).

    Welford's update keeps the running second moment stable.
    """
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise InsufficientData("sample standard deviation needs at least 2 values")
    running_mean = 0.0
    m2 = 0.0
    for k, x in enumerate(vals, 1):
        delta = x - running_mean
        running_mean += delta / k
        m2 += delta * (x - running_mean)
    return running_mean, math.sqrt(m2 / (len(vals) - 1))


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Lentz's method for the continued fraction of the incomplete beta.
    max_iterations = 300
    eps = 1e-16
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to well below 1e-9 for the parameter ranges a
    t-distribution tail needs."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_upper_tail(t: float, df: int) -> float:
    """P(T >= t) for Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    x = df / (df + t * t)
    half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return half_tail if t >= 0 else 1.0 - half_tail


@dataclass(frozen=True)
class SignificanceResult:
    """Outcome of the paired one-tailed t-test for one metric."""

    metric: str
    mean_difference: float
    sd_difference: float
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    alpha: float
    significant: bool
    degenerate: bool = False


def paired_t_one_tailed(
    pairs: Sequence[tuple[float, float]],
    *,
    metric: str = "",
    worse: str = "higher",
    alpha: float = 0.10,
) -> SignificanceResult:
    """Paired one-tailed t-test over (office_value, field_value) pairs.

    The orientation is configurable per metric so that the
    hypothesized-worse direction is positive: with ``worse="higher"`` the
    differences are field minus office, with ``worse="lower"`` they are
    office minus field. A zero-variance difference series is reported as a
    degenerate result (p = 0 when the mean difference supports the
    hypothesis, 1 otherwise) rather than an error.
    """
    if worse not in ("higher", "lower"):
        raise ValueError(f"worse must be 'higher' or 'lower', got {worse!r}")
    if len(pairs) < 2:
        raise InsufficientPairs("paired test needs at least 2 matched pairs")
    if worse == "higher":
        d = [field - office for office, field in pairs]
    else:
        d = [office - field for office, field in pairs]
    n = len(d)
    mean_d, sd_d = aggregate(d)
    df = n - 1
    if sd_d == 0.0:
        if mean_d > 0:
            t_stat, p = math.inf, 0.0
        elif mean_d < 0:
            t_stat, p = -math.inf, 1.0
        else:
            t_stat, p = 0.0, 1.0
        return SignificanceResult(
            metric=metric,
            mean_difference=mean_d,
            sd_difference=sd_d,
            t_statistic=t_stat,
            degrees_of_freedom=df,
            p_value=p,
            alpha=alpha,
            significant=p < alpha,
            degenerate=True,
        )
    t_stat = mean_d / (sd_d / math.sqrt(n))
    p = student_t_upper_tail(t_stat, df)
    return SignificanceResult(
        metric=metric,
        mean_difference=mean_d,
        sd_difference=sd_d,
        t_statistic=t_stat,
        degrees_of_freedom=df,
        p_value=p,
        alpha=alpha,
        significant=p < alpha,
    )
