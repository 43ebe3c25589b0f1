"""Online-review mining toolkit: corpus ingestion and pre-processing, seeded
per-app sampling, rule/lexicon multi-label classification, distribution
reporting, and the eight-category farming vocabulary scan.

The classifier is deliberately lexicon-based with versioned cue files; the
domain corpus is far too small to train on without over-fitting, and cue
lists keep every decision inspectable.
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

from .domain import Language
from .nlp import load_stopwords, tokenize

SYSTEM = "System"
OPERATIONS = "Operations"
CUSTOMER_SUPPORT = "CustomerSupport"
NONE = "None"
CLASSES = (SYSTEM, OPERATIONS, CUSTOMER_SUPPORT)

VOCABULARY_CATEGORY_NAMES = (
    "crops & livestock",
    "property & inventory",
    "measurements",
    "weather & irrigation",
    "personnel & equipment",
    "GPS guidance",
    "system",
    "fertilizers & pesticides",
)


@dataclass(frozen=True)
class ReviewDocument:
    """One online user review. ``labels`` is None until classified, then
    either a non-empty subset of the three classes or the singleton
    {"None"}."""

    id: str
    app_name: str
    source: str
    text: str
    labels: frozenset[str] | None = None


def validate_labels(labels: frozenset[str]) -> None:
    if not labels:
        raise ValueError("classified labels must be non-empty")
    if NONE in labels and len(labels) > 1:
        raise ValueError("the None marker excludes every other class")
    unknown = labels - set(CLASSES) - {NONE}
    if unknown:
        raise ValueError(f"unknown labels: {sorted(unknown)}")


# ---------------------------------------------------------------------------
# Pre-processing
# ---------------------------------------------------------------------------

class Removal(NamedTuple):
    review_id: str
    reason: str
    detail: str


DUPLICATE = "Duplicate"
LENGTH_FILTER = "LengthFilter"
SPURIOUS = "Spurious"

MIN_REVIEW_CHARACTERS = 11  # reviews of 10 characters or fewer are dropped


def _mostly_symbols(text: str) -> bool:
    visible = [ch for ch in text if not ch.isspace()]
    if not visible:
        return True
    alnum = sum(1 for ch in visible if ch.isalnum())
    return alnum / len(visible) < 0.5


def preprocess(
    corpus: Iterable[ReviewDocument],
    *,
    stopword_ratio: float = 0.05,
) -> tuple[list[ReviewDocument], list[Removal]]:
    """Drop exact-text duplicates (first occurrence kept), very short
    reviews, and spurious content (mostly symbols/emoji, or too few English
    stopwords to plausibly be English). Every removal is logged with a
    reason. Idempotent: re-running on the survivors removes nothing."""
    stopwords = load_stopwords(Language.EN)
    kept: list[ReviewDocument] = []
    removals: list[Removal] = []
    seen: set[str] = set()
    for review in corpus:
        if review.text in seen:
            removals.append(Removal(review.id, DUPLICATE, "exact text seen before"))
            continue
        seen.add(review.text)
        if _mostly_symbols(review.text):
            removals.append(Removal(review.id, SPURIOUS, "mostly special characters"))
            continue
        if len(review.text) < MIN_REVIEW_CHARACTERS:
            removals.append(
                Removal(review.id, LENGTH_FILTER, f"{len(review.text)} characters")
            )
            continue
        tokens = tokenize(review.text)
        hits = sum(1 for tok in tokens if tok in stopwords)
        if tokens and hits / len(tokens) < stopword_ratio:
            removals.append(Removal(review.id, SPURIOUS, "non-target language"))
            continue
        kept.append(review)
    return kept, removals


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def bootstrap_sample(
    corpus: Iterable[ReviewDocument], per_app_cap: int, seed: int
) -> list[ReviewDocument]:
    """Per app, draw min(cap, available) reviews without replacement,
    deterministically from the seed."""
    if per_app_cap < 1:
        raise ValueError("per_app_cap must be >= 1")
    by_app: dict[str, list[ReviewDocument]] = {}
    for review in corpus:
        by_app.setdefault(review.app_name, []).append(review)
    rng = random.Random(seed)
    sample: list[ReviewDocument] = []
    for app in sorted(by_app):
        reviews = by_app[app]
        if len(reviews) <= per_app_cap:
            sample.extend(reviews)
        else:
            sample.extend(rng.sample(reviews, per_app_cap))
    return sample


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CueLexicons:
    """Cue term lists per class. Single-word cues match whole tokens,
    multi-word cues match token sequences."""

    system: frozenset[str]
    operations: frozenset[str]
    customer_support: frozenset[str]

    @classmethod
    def load(cls, directory: Path | None = None) -> "CueLexicons":
        def read(name: str) -> frozenset[str]:
            if directory is not None:
                raw = (directory / f"{name}.txt").read_text("utf-8")
            else:
                raw = (
                    resources.files("agrivoice")
                    .joinpath(f"data/cues/{name}.txt")
                    .read_text("utf-8")
                )
            return frozenset(
                line.strip().casefold()
                for line in raw.splitlines()
                if line.strip() and not line.startswith("#")
            )

        return cls(
            system=read("system"),
            operations=read("operations"),
            customer_support=read("customer_support"),
        )


_DEFAULT_LEXICONS: CueLexicons | None = None


def default_lexicons() -> CueLexicons:
    global _DEFAULT_LEXICONS
    if _DEFAULT_LEXICONS is None:
        _DEFAULT_LEXICONS = CueLexicons.load()
    return _DEFAULT_LEXICONS


def _matches(cues: frozenset[str], token_set: set[str], padded: str) -> bool:
    for cue in cues:
        if " " in cue:
            if f" {cue} " in padded:
                return True
        elif cue in token_set:
            return True
    return False


def classify(
    review: ReviewDocument, lexicons: CueLexicons | None = None
) -> frozenset[str]:
    """Assign every class with at least one cue match; reviews matching no
    class are marked None."""
    lexicons = lexicons or default_lexicons()
    tokens = tokenize(review.text)
    token_set = set(tokens)
    padded = f" {' '.join(tokens)} "
    labels = set()
    if _matches(lexicons.system, token_set, padded):
        labels.add(SYSTEM)
    if _matches(lexicons.operations, token_set, padded):
        labels.add(OPERATIONS)
    if _matches(lexicons.customer_support, token_set, padded):
        labels.add(CUSTOMER_SUPPORT)
    result = frozenset(labels) if labels else frozenset({NONE})
    validate_labels(result)
    return result


def classify_corpus(
    corpus: Iterable[ReviewDocument], lexicons: CueLexicons | None = None
) -> list[ReviewDocument]:
    return [replace(review, labels=classify(review, lexicons)) for review in corpus]


# ---------------------------------------------------------------------------
# Distribution report
# ---------------------------------------------------------------------------

REGION_KEYS = (
    "system",
    "operations",
    "customer_support",
    "system+operations",
    "system+customer_support",
    "operations+customer_support",
    "system+operations+customer_support",
)

_REGION_BY_LABELSET = {
    frozenset({SYSTEM}): "system",
    frozenset({OPERATIONS}): "operations",
    frozenset({CUSTOMER_SUPPORT}): "customer_support",
    frozenset({SYSTEM, OPERATIONS}): "system+operations",
    frozenset({SYSTEM, CUSTOMER_SUPPORT}): "system+customer_support",
    frozenset({OPERATIONS, CUSTOMER_SUPPORT}): "operations+customer_support",
    frozenset({SYSTEM, OPERATIONS, CUSTOMER_SUPPORT}): "system+operations+customer_support",
}


@dataclass(frozen=True)
class DistributionReport:
    """Counts of the seven exclusive/overlap regions of the three classes,
    plus the None count. Regions plus None always sum to the corpus size."""

    regions: dict[str, int]
    none: int
    total: int = field(default=0)

    def __post_init__(self) -> None:
        if set(self.regions) != set(REGION_KEYS):
            raise ValueError("distribution must carry exactly the seven regions")
        if any(count < 0 for count in self.regions.values()) or self.none < 0:
            raise ValueError("region counts must be nonnegative")
        expected = sum(self.regions.values()) + self.none
        if self.total == 0:
            object.__setattr__(self, "total", expected)
        elif self.total != expected:
            raise ValueError(
                f"regions plus None sum to {expected}, not the stated total {self.total}"
            )

    def class_total(self, label: str) -> int:
        key = {SYSTEM: "system", OPERATIONS: "operations", CUSTOMER_SUPPORT: "customer_support"}[label]
        return sum(count for region, count in self.regions.items() if key in region.split("+"))

    def to_dict(self) -> dict:
        return {"regions": dict(self.regions), "none": self.none, "total": self.total}

    def to_text_table(self) -> str:
        rows = [("region", "count")]
        rows += [(region, str(self.regions[region])) for region in REGION_KEYS]
        rows += [("none", str(self.none)), ("total", str(self.total))]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name.ljust(width)}  {count}" for name, count in rows)


def distribution(corpus: Iterable[ReviewDocument]) -> DistributionReport:
    """Exact Venn-region counts over a fully classified corpus."""
    counts = Counter()
    none = 0
    total = 0
    for review in corpus:
        if review.labels is None:
            raise ValueError(f"review {review.id} has not been classified")
        validate_labels(review.labels)
        total += 1
        if review.labels == frozenset({NONE}):
            none += 1
        else:
            counts[_REGION_BY_LABELSET[review.labels]] += 1
    regions = {key: counts.get(key, 0) for key in REGION_KEYS}
    return DistributionReport(regions=regions, none=none, total=total)


# ---------------------------------------------------------------------------
# Vocabulary scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VocabularyCategory:
    name: str
    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        if any(term != term.casefold() for term in self.terms):
            raise ValueError("seed terms must be lowercase")


def load_vocabulary() -> tuple[VocabularyCategory, ...]:
    raw = resources.files("agrivoice").joinpath("data/vocabulary.json").read_text("utf-8")
    data = json.loads(raw)["categories"]
    categories = tuple(
        VocabularyCategory(name=name, terms=tuple(data[name]))
        for name in VOCABULARY_CATEGORY_NAMES
    )
    if len(categories) != 8:
        raise ValueError("the vocabulary must have exactly eight categories")
    return categories


@dataclass(frozen=True)
class CategoryScan:
    category: str
    seed_hits: dict[str, int]
    cooccurring: tuple[tuple[str, int], ...]


def vocabulary_scan(
    corpus: Iterable[ReviewDocument],
    categories: Iterable[VocabularyCategory] | None = None,
) -> dict[str, CategoryScan]:
    """Per category: seed-term frequencies over the corpus, and the ranked
    non-stopword terms that co-occur in reviews with at least one seed
    hit."""
    categories = tuple(categories) if categories is not None else load_vocabulary()
    stopwords = load_stopwords(Language.EN)
    result: dict[str, CategoryScan] = {}
    tokenized = [(review, tokenize(review.text)) for review in corpus]
    for category in categories:
        seed_hits: Counter = Counter()
        cooccurring: Counter = Counter()
        single = {t for t in category.terms if " " not in t}
        phrases = [t for t in category.terms if " " in t]
        for review, tokens in tokenized:
            padded = f" {' '.join(tokens)} "
            hits_here = Counter(tok for tok in tokens if tok in single)
            for phrase in phrases:
                occurrences = padded.count(f" {phrase} ")
                if occurrences:
                    hits_here[phrase] += occurrences
            if not hits_here:
                continue
            seed_hits.update(hits_here)
            for tok in tokens:
                if tok not in stopwords and tok not in single:
                    cooccurring[tok] += 1
        ranked = tuple(
            sorted(cooccurring.items(), key=lambda item: (-item[1], item[0]))
        )
        result[category.name] = CategoryScan(
            category=category.name, seed_hits=dict(seed_hits), cooccurring=ranked
        )
    return result


# ---------------------------------------------------------------------------
# Corpus and manifest I/O
# ---------------------------------------------------------------------------

class CorpusFormatError(ValueError):
    """A corpus row is missing required fields or is malformed."""


def read_corpus(path: Path, *, strict: bool = False) -> tuple[list[ReviewDocument], list[str]]:
    """Load reviews from CSV (id, app, source, text headers) or JSON lines.
    Malformed rows are logged; with strict=True the first one raises."""
    reviews: list[ReviewDocument] = []
    errors: list[str] = []

    def fail(message: str) -> None:
        if strict:
            raise CorpusFormatError(message)
        errors.append(message)

    if path.suffix.lower() == ".csv":
        with path.open(newline="", encoding="utf-8") as handle:
            for line_no, row in enumerate(csv.DictReader(handle), 2):
                try:
                    reviews.append(
                        ReviewDocument(
                            id=row["id"], app_name=row["app"],
                            source=row.get("source", ""), text=row["text"],
                        )
                    )
                except (KeyError, TypeError):
                    fail(f"{path.name}:{line_no}: missing id/app/text column")
    else:
        for line_no, line in enumerate(path.read_text("utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                reviews.append(
                    ReviewDocument(
                        id=str(row["id"]), app_name=row["app"],
                        source=row.get("source", ""), text=row["text"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError):
                fail(f"{path.name}:{line_no}: malformed JSON line")
    return reviews, errors


def write_labeled_jsonl(path: Path, corpus: Iterable[ReviewDocument]) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for review in corpus:
            labels = sorted(review.labels) if review.labels is not None else None
            handle.write(
                json.dumps(
                    {
                        "id": review.id,
                        "app": review.app_name,
                        "source": review.source,
                        "text": review.text,
                        "labels": labels,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


@dataclass(frozen=True)
class ManifestRow:
    app: str
    reviews: int
    sample: int | None
    category: str


def read_manifest(path: Path | None = None) -> list[ManifestRow]:
    """Corpus manifest CSV: app, reviews, sample, category. Defaults to the
    bundled digital-farming app table."""
    if path is None:
        raw = resources.files("agrivoice").joinpath("data/df_apps.csv").read_text("utf-8")
    else:
        raw = path.read_text("utf-8")
    rows = []
    for record in csv.DictReader(io.StringIO(raw)):
        sample = record.get("sample")
        rows.append(
            ManifestRow(
                app=record["app"],
                reviews=int(record["reviews"]),
                sample=int(sample) if sample not in (None, "") else None,
                category=record["category"],
            )
        )
    names = [row.app for row in rows]
    if len(names) != len(set(names)):
        raise CorpusFormatError("manifest app names must be unique")
    if any(row.reviews < 0 for row in rows):
        raise CorpusFormatError("manifest review counts must be nonnegative")
    return rows
