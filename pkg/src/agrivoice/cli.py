"""Batch and operator interface.

Subcommands: serve (run the HTTP service), evaluate (score an offline run
manifest into a report), classify (label a review corpus), inject (plant
known errors into a reference text), fixtures (write a deterministic
evaluation run for testing).

Exit codes are a stable contract: 0 success, 1 input or configuration
error, 2 internal error. All randomness is seeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from .domain import BaselineText, NoiseSetting
from .report import TranscribedRecording, build_report, serialize
from .reviews import (
    CorpusFormatError,
    CueLexicons,
    bootstrap_sample,
    classify_corpus,
    distribution,
    preprocess,
    read_corpus,
    write_labeled_jsonl,
)
from .stt import ErrorInjectionSpec, SpecInfeasible, inject_errors

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class _Parser(argparse.ArgumentParser):
    # Usage errors are input errors (exit 1), not internal ones.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_with_message(message)


class SystemExit_with_message(SystemExit):
    def __init__(self, message: str):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(EXIT_INPUT)


class InputError(Exception):
    """Bad manifest, corpus, or flags; maps to exit code 1."""


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def load_manifest(path: Path) -> tuple[BaselineText, list[TranscribedRecording]]:
    try:
        raw = json.loads(path.read_text("utf-8"))
    except FileNotFoundError:
        raise InputError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest is not valid JSON: {exc}")
    base_dir = path.parent
    try:
        baseline_path = base_dir / raw["baseline"]
        rows = raw["rows"]
    except (KeyError, TypeError):
        raise InputError("manifest needs 'baseline' and 'rows'")
    if not baseline_path.exists():
        raise InputError(f"baseline text not found: {baseline_path}")
    baseline = BaselineText.from_text(baseline_path.read_text("utf-8"))
    entries = []
    for index, row in enumerate(rows):
        try:
            setting = NoiseSetting(row["setting"])
            if "text" in row:
                text = row["text"]
            else:
                text = (base_dir / row["transcript"]).read_text("utf-8")
            entries.append(
                TranscribedRecording(
                    participant=row["participant"], setting=setting, text=text
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"manifest row {index} is malformed: {exc}")
        except FileNotFoundError as exc:
            raise InputError(f"manifest row {index}: {exc}")
    return baseline, entries


def cmd_evaluate(args) -> int:
    baseline, entries = load_manifest(Path(args.manifest))
    try:
        report = build_report(entries, baseline)
    except ValueError as exc:
        raise InputError(str(exc))
    payload = serialize(report, args.format)
    out = Path(args.out)
    out.write_bytes(payload)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {args.format} report with {len(report.rows)} rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    corpus_path = Path(args.corpus)
    if not corpus_path.exists():
        raise InputError(f"corpus not found: {corpus_path}")
    try:
        corpus, row_errors = read_corpus(corpus_path, strict=args.strict)
    except CorpusFormatError as exc:
        raise InputError(str(exc))
    for line_error in row_errors:
        print(f"warning: {line_error}", file=sys.stderr)
    lexicons = CueLexicons.load(Path(args.lexicons)) if args.lexicons else None
    kept, removals = preprocess(corpus)
    for removal in removals:
        print(
            f"removed {removal.review_id}: {removal.reason} ({removal.detail})",
            file=sys.stderr,
        )
    if args.cap:
        print(f"sampling up to {args.cap} reviews per app with seed {args.seed}", file=sys.stderr)
        kept = bootstrap_sample(kept, args.cap, args.seed)
    labeled = classify_corpus(kept, lexicons)
    write_labeled_jsonl(Path(args.out), labeled)
    report = distribution(labeled)
    if args.distribution:
        Path(args.distribution).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8"
        )
    print(report.to_text_table())
    return EXIT_OK


# ---------------------------------------------------------------------------
# inject
# ---------------------------------------------------------------------------

def cmd_inject(args) -> int:
    reference_path = Path(args.reference)
    if not reference_path.exists():
        raise InputError(f"reference not found: {reference_path}")
    reference = reference_path.read_text("utf-8")
    spec = ErrorInjectionSpec(
        substitutions=args.substitutions,
        deletions=args.deletions,
        insertions=args.insertions,
        seed=args.seed,
    )
    try:
        hypothesis = inject_errors(reference, spec)
    except SpecInfeasible as exc:
        raise InputError(str(exc))
    Path(args.out).write_text(hypothesis, "utf-8")
    print(f"wrote hypothesis with (s={spec.substitutions}, d={spec.deletions}, "
          f"i={spec.insertions}) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app
    from .service.config import ServiceConfig

    config_path = Path(args.config)
    if not config_path.exists():
        raise InputError(f"config not found: {config_path}")
    try:
        config = ServiceConfig.from_file(config_path)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"bad config: {exc}")
    app = create_app(config)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except SystemExit as exc:
        # uvicorn exits non-zero on bind failures
        if exc.code not in (0, None):
            raise InputError(f"server failed to start (port {config.port} in use?)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

# Hand-written preamble carrying exactly 25 two-byte characters, so the
# padded baseline lands on the documented source sizes.
_BASELINE_PREAMBLE = (
    "Prüfbericht für die tägliche Rückmeldung über Gerät und Gelände: "
    "Die Bodensensoren prüfen Wärme, Kälte und Nässe, während der Mähdrescher "
    "über die Äcker fährt und die Körner zählt. "
    "Später erklärt der Prüfer die Qualität der Übertragung für alle Gespräche."
)

# Distinct compound filler words: repeated tokens in the reference would
# make minimal alignments ambiguous, so the padding never reuses a word.
_COMPOUND_PREFIXES = (
    "feld hof korn saat boden wetter regen acker stall silo funk spur "
    "ernte futter weide"
).split()
_COMPOUND_SUFFIXES = (
    "rand weg karte plan wert probe daten zeit platz dienst punkt liste "
    "blick stand halter bereich bericht signal meldung"
).split()
_FILLER_COMPOUNDS = [p + s for p in _COMPOUND_PREFIXES for s in _COMPOUND_SUFFIXES]

# One closing word per length so the padding can land exactly on target.
_CLOSING_WORDS = {
    2: "so", 3: "gut", 4: "zaun", 5: "pflug", 6: "kabine", 7: "empfang",
    8: "maschine", 9: "lenkachse", 10: "bodenprobe",
}

BASELINE_TARGET_BYTES = 1597
BASELINE_TARGET_CHARACTERS = 1572

# Error counts per participant index for the two settings; the field setting
# is engineered to be worse so the one-tailed comparisons point the
# hypothesized way.
OFFICE_SPEC = lambda p: (4 + p, 2, 1)  # noqa: E731
FIELD_SPEC = lambda p: (10 + 2 * p, 4, 2)  # noqa: E731


def build_baseline_text(seed: int) -> BaselineText:
    """Deterministic read-aloud text with exactly the documented source
    sizes: 1,597 bytes and 1,572 characters."""
    rng = random.Random(seed)
    text = _BASELINE_PREAMBLE
    two_byte = sum(1 for ch in text if len(ch.encode("utf-8")) == 2)
    if two_byte != BASELINE_TARGET_BYTES - BASELINE_TARGET_CHARACTERS:
        raise AssertionError("preamble umlaut count drifted")
    pool = rng.sample(_FILLER_COMPOUNDS, len(_FILLER_COMPOUNDS))
    remaining = BASELINE_TARGET_CHARACTERS - len(text)
    skipped = 0
    while remaining > 12:
        if skipped > len(pool):
            raise AssertionError("filler pool exhausted before reaching the target size")
        word = pool.pop()
        if remaining - (len(word) + 1) < 4:
            pool.insert(0, word)
            skipped += 1
            continue  # leave room for the closing word and period
        text += " " + word
        remaining -= len(word) + 1
        skipped = 0
    # Close with one exactly-fitting word and a period.
    closing = _CLOSING_WORDS.get(remaining - 2)
    if closing is None:
        raise AssertionError(f"no closing word of length {remaining - 2}")
    text += " " + closing + "."
    baseline = BaselineText.from_text(text)
    assert baseline.source_characters == BASELINE_TARGET_CHARACTERS
    assert baseline.source_bytes == BASELINE_TARGET_BYTES
    return baseline


def _verified_hypothesis(baseline_text: str, s: int, d: int, i: int, cell_seed: int) -> tuple[str, int]:
    """Inject errors and confirm the alignment recovers exactly the planted
    counts; on ambiguity, step the seed deterministically and retry."""
    from .metrics import align, normalize

    reference_tokens = normalize(baseline_text)
    for attempt in range(50):
        seed_used = cell_seed + attempt * 100003
        hypothesis = inject_errors(
            baseline_text, ErrorInjectionSpec(substitutions=s, deletions=d, insertions=i, seed=seed_used)
        )
        alignment = align(reference_tokens, normalize(hypothesis))
        if (alignment.substitutions, alignment.deletions, alignment.insertions) == (s, d, i):
            return hypothesis, seed_used
    raise AssertionError(f"could not realize ({s},{d},{i}) unambiguously")


def write_fixture_run(out_dir: Path, seed: int) -> dict:
    """Write baseline.txt, ten engineered transcripts, manifest.json, and
    specs.json (the planted error counts) into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    baseline = build_baseline_text(seed)
    (out_dir / "baseline.txt").write_text(baseline.text, "utf-8")
    rows = []
    specs = {}
    for index in range(5):
        participant = f"P{index + 1}"
        for setting, (s, d, i) in (
            (NoiseSetting.OFFICE, OFFICE_SPEC(index)),
            (NoiseSetting.FIELD, FIELD_SPEC(index)),
        ):
            cell_seed = seed * 1000 + index * 10 + (0 if setting is NoiseSetting.OFFICE else 1)
            hypothesis, seed_used = _verified_hypothesis(baseline.text, s, d, i, cell_seed)
            name = f"{participant.lower()}_{setting.value}.txt"
            (out_dir / name).write_text(hypothesis, "utf-8")
            rows.append(
                {"participant": participant, "setting": setting.value, "transcript": name}
            )
            specs[f"{participant}:{setting.value}"] = {
                "substitutions": s, "deletions": d, "insertions": i, "seed": seed_used,
            }
    manifest = {"baseline": "baseline.txt", "seed": seed, "rows": rows}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    (out_dir / "specs.json").write_text(
        json.dumps(specs, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return manifest


def cmd_fixtures(args) -> int:
    manifest = write_fixture_run(Path(args.out), args.seed)
    print(f"wrote fixture run with {len(manifest['rows'])} transcripts to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="agrivoice", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score an offline run manifest into a report")
    p_eval.add_argument("--manifest", required=True, help="run manifest JSON path")
    p_eval.add_argument("--out", required=True, help="output report path")
    p_eval.add_argument("--format", choices=("json", "csv"), default="json")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cls = sub.add_parser("classify", help="label a review corpus")
    p_cls.add_argument("--corpus", required=True, help="CSV or JSON-lines corpus")
    p_cls.add_argument("--out", required=True, help="labeled JSON-lines output")
    p_cls.add_argument("--lexicons", help="directory with cue lexicon files")
    p_cls.add_argument("--distribution", help="write the distribution report JSON here")
    p_cls.add_argument("--cap", type=int, help="per-app sample cap (enables sampling)")
    p_cls.add_argument("--seed", type=int, default=0)
    p_cls.add_argument("--strict", action="store_true",
                       help="fail on the first malformed corpus row")
    p_cls.set_defaults(func=cmd_classify)

    p_inj = sub.add_parser("inject", help="plant known errors into a reference text")
    p_inj.add_argument("--reference", required=True)
    p_inj.add_argument("--out", required=True)
    p_inj.add_argument("-s", "--substitutions", type=int, default=0)
    p_inj.add_argument("-d", "--deletions", type=int, default=0)
    p_inj.add_argument("-i", "--insertions", type=int, default=0)
    p_inj.add_argument("--seed", type=int, default=0)
    p_inj.set_defaults(func=cmd_inject)

    p_srv = sub.add_parser("serve", help="run the feedback service")
    p_srv.add_argument("--config", required=True, help="service config JSON path")
    p_srv.set_defaults(func=cmd_serve)

    p_fix = sub.add_parser("fixtures", help="write a deterministic evaluation run")
    p_fix.add_argument("--out", required=True, help="output directory")
    p_fix.add_argument("--seed", type=int, default=7)
    p_fix.set_defaults(func=cmd_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - the contract maps these to exit 2
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
