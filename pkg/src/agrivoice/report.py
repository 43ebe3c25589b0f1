"""Evaluation report assembly and serialization.

A report covers one baseline run: per-recording metric rows keyed by
(participant, setting), per-setting aggregates, and the paired one-tailed
significance test per metric. Identical inputs always produce byte-identical
serialized output; both writers derive from the same dataclasses and neither
embeds wall-clock state.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

from .domain import BaselineText, NoiseSetting
from .metrics import (
    DEFAULT_POLICY,
    InsufficientData,
    InsufficientPairs,
    NormalizationPolicy,
    SignificanceResult,
    aggregate,
    align,
    length_metrics,
    levenshtein,
    mean,
    normalize,
    paired_t_one_tailed,
    word_error_rate,
)

REPORT_SCHEMA = "agrivoice.evaluation-report/1"

# Row metric columns, in serialization order.
ROW_METRICS = (
    "wer",
    "levenshtein",
    "target_bytes",
    "byte_difference",
    "target_characters",
    "character_difference",
)

# Metrics that get a significance comparison, with the direction that is
# hypothesized to be worse in the noisy setting: error metrics grow, length
# metrics shrink when transcription struggles.
COMPARED_METRICS = (
    ("wer", "higher"),
    ("levenshtein", "higher"),
    ("target_bytes", "lower"),
    ("target_characters", "lower"),
)

CSV_HEADER = ("participant", "setting") + ROW_METRICS

SETTING_ORDER = tuple(NoiseSetting)


class MissingBaseline(ValueError):
    """No baseline text is configured for this run."""


@dataclass(frozen=True)
class TranscribedRecording:
    """One evaluated transcript: who spoke, under which noise setting, and
    the transcript text produced for them."""

    participant: str
    setting: NoiseSetting
    text: str


@dataclass(frozen=True)
class RecordingMetrics:
    participant: str
    setting: NoiseSetting
    wer: float
    levenshtein: int
    target_bytes: int
    byte_difference: int
    target_characters: int
    character_difference: int

    def value(self, metric: str) -> float:
        return getattr(self, metric)


@dataclass(frozen=True)
class SettingAggregate:
    """Mean and sample SD (n-1) per metric over the participants of one
    setting; SD is None when fewer than two rows exist."""

    setting: NoiseSetting
    n: int
    metrics: Mapping[str, tuple[float, float | None]]


@dataclass(frozen=True)
class EvaluationReport:
    baseline_bytes: int
    baseline_characters: int
    normalization: NormalizationPolicy
    alpha: float
    rows: tuple[RecordingMetrics, ...]
    aggregates: tuple[SettingAggregate, ...]
    comparisons: tuple[SignificanceResult, ...]
    warnings: tuple[str, ...] = ()


def score_transcript(
    text: str,
    baseline: BaselineText,
    policy: NormalizationPolicy = DEFAULT_POLICY,
) -> dict[str, float | int]:
    """All six row metrics for one transcript against the baseline.

    WER is computed on normalized tokens; the character distance is computed
    on the raw strings so that casing and punctuation errors stay visible.
    """
    alignment = align(normalize(baseline.text, policy), normalize(text, policy))
    lm = length_metrics(text, baseline)
    return {
        "wer": word_error_rate(alignment),
        "levenshtein": levenshtein(baseline.text, text),
        "target_bytes": lm.target_bytes,
        "byte_difference": lm.byte_difference,
        "target_characters": lm.target_characters,
        "character_difference": lm.character_difference,
    }


def build_report(
    recordings: Iterable[TranscribedRecording],
    baseline: BaselineText | None,
    *,
    policy: NormalizationPolicy = DEFAULT_POLICY,
    alpha: float = 0.10,
) -> EvaluationReport:
    """Assemble the full evaluation report.

    Participants present in only one setting are excluded from the
    comparisons and listed in the warnings; comparisons are omitted entirely
    (with a warning) when fewer than two matched pairs remain.
    """
    if baseline is None:
        raise MissingBaseline("no baseline text configured")

    entries = list(recordings)
    seen: set[tuple[str, NoiseSetting]] = set()
    for entry in entries:
        key = (entry.participant, entry.setting)
        if key in seen:
            raise ValueError(f"duplicate row for participant {key[0]!r} in setting {key[1].value}")
        seen.add(key)

    rows = tuple(
        RecordingMetrics(
            participant=entry.participant,
            setting=entry.setting,
            **score_transcript(entry.text, baseline, policy),
        )
        for entry in sorted(entries, key=lambda e: (e.participant, SETTING_ORDER.index(e.setting)))
    )

    warnings: list[str] = []
    aggregates = []
    for setting in SETTING_ORDER:
        setting_rows = [r for r in rows if r.setting is setting]
        if not setting_rows:
            continue
        metric_stats: dict[str, tuple[float, float | None]] = {}
        for metric in ROW_METRICS:
            values = [float(r.value(metric)) for r in setting_rows]
            try:
                metric_stats[metric] = aggregate(values)
            except InsufficientData:
                metric_stats[metric] = (mean(values), None)
        if len(setting_rows) < 2:
            warnings.append(
                f"standard deviations omitted for {setting.value}: only {len(setting_rows)} row(s)"
            )
        aggregates.append(SettingAggregate(setting=setting, n=len(setting_rows), metrics=metric_stats))

    by_participant: dict[str, dict[NoiseSetting, RecordingMetrics]] = {}
    for row in rows:
        by_participant.setdefault(row.participant, {})[row.setting] = row
    paired = sorted(p for p, cells in by_participant.items() if len(cells) == len(SETTING_ORDER))
    unpaired = sorted(p for p, cells in by_participant.items() if len(cells) != len(SETTING_ORDER))
    for participant in unpaired:
        warnings.append(
            f"participant {participant} present in only one setting; excluded from comparisons"
        )

    comparisons: list[SignificanceResult] = []
    if paired:
        pairs_by_metric = {
            metric: [
                (
                    float(by_participant[p][NoiseSetting.OFFICE].value(metric)),
                    float(by_participant[p][NoiseSetting.FIELD].value(metric)),
                )
                for p in paired
            ]
            for metric, _ in COMPARED_METRICS
        }
        try:
            for metric, worse in COMPARED_METRICS:
                comparisons.append(
                    paired_t_one_tailed(
                        pairs_by_metric[metric], metric=metric, worse=worse, alpha=alpha
                    )
                )
        except InsufficientPairs:
            comparisons = []
            warnings.append(
                f"comparisons omitted: only {len(paired)} participant(s) paired across settings"
            )
    elif entries:
        warnings.append("comparisons omitted: no participant appears in both settings")

    return EvaluationReport(
        baseline_bytes=baseline.source_bytes,
        baseline_characters=baseline.source_characters,
        normalization=policy,
        alpha=alpha,
        rows=rows,
        aggregates=tuple(aggregates),
        comparisons=tuple(comparisons),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _comparison_dict(result: SignificanceResult) -> dict:
    d = asdict(result)
    # Infinities from degenerate series are not valid JSON numbers.
    if result.t_statistic in (float("inf"), float("-inf")):
        d["t_statistic"] = "inf" if result.t_statistic > 0 else "-inf"
    return d


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "baseline": {
            "source_bytes": report.baseline_bytes,
            "source_characters": report.baseline_characters,
        },
        "normalization": {
            "fold_case": report.normalization.fold_case,
            "strip_punctuation": report.normalization.strip_punctuation,
        },
        "alpha": report.alpha,
        "rows": [
            {
                "participant": r.participant,
                "setting": r.setting.value,
                **{metric: r.value(metric) for metric in ROW_METRICS},
            }
            for r in report.rows
        ],
        "aggregates": {
            agg.setting.value: {
                "n": agg.n,
                "metrics": {
                    metric: {"mean": agg.metrics[metric][0], "sd": agg.metrics[metric][1]}
                    for metric in ROW_METRICS
                },
            }
            for agg in report.aggregates
        },
        "comparisons": [_comparison_dict(c) for c in report.comparisons],
        "warnings": list(report.warnings),
    }


def to_json_bytes(report: EvaluationReport) -> bytes:
    """Canonical JSON: sorted keys, UTF-8, no insignificant whitespace."""
    payload = json.dumps(
        report_to_dict(report), sort_keys=True, ensure_ascii=False, separators=(",", ":")
    )
    return (payload + "\n").encode("utf-8")


def to_csv_bytes(report: EvaluationReport) -> bytes:
    """One row per (participant, setting); ratios carry 4 fractional digits,
    counts are plain integers."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.rows:
        writer.writerow(
            [
                r.participant,
                r.setting.value,
                f"{r.wer:.4f}",
                r.levenshtein,
                r.target_bytes,
                r.byte_difference,
                r.target_characters,
                r.character_difference,
            ]
        )
    return buf.getvalue().encode("utf-8")


def serialize(report: EvaluationReport, fmt: str) -> bytes:
    if fmt == "json":
        return to_json_bytes(report)
    if fmt == "csv":
        return to_csv_bytes(report)
    raise ValueError(f"unknown report format {fmt!r}")
