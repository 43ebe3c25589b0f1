import json

import numpy as np
import pytest

from agrivoice.domain import BaselineText, NoiseSetting
from agrivoice.report import (
    CSV_HEADER,
    MissingBaseline,
    ROW_METRICS,
    TranscribedRecording,
    build_report,
    report_to_dict,
    to_csv_bytes,
    to_json_bytes,
)

BASELINE = BaselineText.from_text(
    "the tractor guidance keeps the rows straight and the soil sensor "
    "reports moisture for every field block"
)


def rec(participant, setting, text):
    return TranscribedRecording(participant=participant, setting=setting, text=text)


def two_by_two():
    return [
        rec("P1", NoiseSetting.OFFICE, BASELINE.text),
        rec("P1", NoiseSetting.FIELD, BASELINE.text.replace("sensor", "zq1")),
        rec("P2", NoiseSetting.OFFICE, BASELINE.text.replace("soil", "zq1")),
        rec("P2", NoiseSetting.FIELD, BASELINE.text.replace("rows straight", "zq1 zq2")),
    ]


def test_missing_baseline():
    with pytest.raises(MissingBaseline):
        build_report([], None)


def test_rows_sorted_and_complete():
    report = build_report(two_by_two(), BASELINE)
    keys = [(r.participant, r.setting) for r in report.rows]
    assert keys == [
        ("P1", NoiseSetting.OFFICE),
        ("P1", NoiseSetting.FIELD),
        ("P2", NoiseSetting.OFFICE),
        ("P2", NoiseSetting.FIELD),
    ]
    assert report.baseline_bytes == BASELINE.source_bytes
    assert report.baseline_characters == BASELINE.source_characters


def test_aggregates_match_numpy():
    report = build_report(two_by_two(), BASELINE)
    for agg in report.aggregates:
        rows = [r for r in report.rows if r.setting is agg.setting]
        for metric in ROW_METRICS:
            values = [float(r.value(metric)) for r in rows]
            got_mean, got_sd = agg.metrics[metric]
            assert got_mean == pytest.approx(np.mean(values), abs=1e-12)
            assert got_sd == pytest.approx(np.std(values, ddof=1), abs=1e-12)


def test_comparisons_cover_the_four_metrics():
    report = build_report(two_by_two(), BASELINE)
    assert [c.metric for c in report.comparisons] == [
        "wer",
        "levenshtein",
        "target_bytes",
        "target_characters",
    ]
    for c in report.comparisons:
        assert c.degrees_of_freedom == 1
        assert c.alpha == 0.10
        assert c.significant == (c.p_value < 0.10)


def test_identity_transcripts_are_all_zero_and_degenerate():
    entries = [
        rec(p, setting, BASELINE.text)
        for p in ("P1", "P2", "P3")
        for setting in NoiseSetting
    ]
    report = build_report(entries, BASELINE)
    assert all(r.wer == 0.0 for r in report.rows)
    assert all(r.byte_difference == 0 for r in report.rows)
    assert all(c.degenerate for c in report.comparisons)
    assert all(c.p_value == 1.0 for c in report.comparisons)
    # Degenerate statistics still serialize to strictly valid JSON.
    payload = to_json_bytes(report).decode("utf-8")
    assert "Infinity" not in payload and "NaN" not in payload
    parsed = json.loads(payload)
    assert all(c["degenerate"] for c in parsed["comparisons"])


def test_degenerate_infinite_t_serializes_as_string():
    entries = [
        rec(p, NoiseSetting.OFFICE, BASELINE.text)
        for p in ("P1", "P2", "P3")
    ] + [
        rec(p, NoiseSetting.FIELD, BASELINE.text.replace("sensor", "zq1"))
        for p in ("P1", "P2", "P3")
    ]
    report = build_report(entries, BASELINE)
    wer_comparison = report.comparisons[0]
    assert wer_comparison.degenerate
    assert wer_comparison.p_value == 0.0
    parsed = json.loads(to_json_bytes(report))
    assert parsed["comparisons"][0]["t_statistic"] == "inf"


def test_single_participant_skips_comparisons_with_warning():
    entries = [
        rec("P1", NoiseSetting.OFFICE, BASELINE.text),
        rec("P1", NoiseSetting.FIELD, BASELINE.text),
    ]
    report = build_report(entries, BASELINE)
    assert len(report.rows) == 2
    assert report.comparisons == ()
    assert any("comparisons omitted" in w for w in report.warnings)


def test_unpaired_participant_excluded():
    entries = two_by_two() + [rec("P3", NoiseSetting.OFFICE, BASELINE.text)]
    report = build_report(entries, BASELINE)
    assert len(report.rows) == 5
    assert any("P3" in w for w in report.warnings)
    # P3 contributes to office aggregates but not to the paired test.
    office = next(a for a in report.aggregates if a.setting is NoiseSetting.OFFICE)
    assert office.n == 3
    assert report.comparisons[0].degrees_of_freedom == 1


def test_duplicate_cell_rejected():
    entries = two_by_two() + [rec("P1", NoiseSetting.OFFICE, "again")]
    with pytest.raises(ValueError, match="duplicate"):
        build_report(entries, BASELINE)


def test_serialization_deterministic():
    a = build_report(two_by_two(), BASELINE)
    b = build_report(two_by_two(), BASELINE)
    assert to_json_bytes(a) == to_json_bytes(b)
    assert to_csv_bytes(a) == to_csv_bytes(b)


def test_json_shape():
    report = build_report(two_by_two(), BASELINE)
    payload = json.loads(to_json_bytes(report))
    assert payload["schema"].startswith("agrivoice.evaluation-report/")
    assert payload["baseline"] == {
        "source_bytes": BASELINE.source_bytes,
        "source_characters": BASELINE.source_characters,
    }
    assert payload["normalization"] == {"fold_case": True, "strip_punctuation": True}
    assert set(payload["aggregates"]) == {"office", "field"}
    assert len(payload["rows"]) == 4
    assert json.dumps(report_to_dict(report)) == json.dumps(report_to_dict(report))


def test_csv_shape():
    report = build_report(two_by_two(), BASELINE)
    lines = to_csv_bytes(report).decode("utf-8").strip().split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 5
    first = lines[1].split(",")
    assert first[0] == "P1"
    assert first[1] == "office"
    # Ratio formatted to 4 fractional digits, counts unpadded.
    assert first[2] == "0.0000"
    assert first[4] == str(BASELINE.source_bytes)
