"""Ingestion and validation of the seed legal corpora.

Corpus files are line-delimited JSON, one document per line, with fields
`doc_id`, `source` ("eurlex" | "eurlex_sum"), `text`, and the source-specific
metadata: `labels` (list of ints) for eurlex, `summary` and `celex_id` for
eurlex_sum. Unknown fields are preserved across a load/save round trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Sequence

from lexforge import jsonl
from lexforge.complexity import (
    BandThresholds,
    LengthBand,
    band_thresholds,
    classify_band,
    nearest_rank,
    token_count,
)


class Source(str, Enum):
    EURLEX = "eurlex"
    EURLEX_SUM = "eurlex_sum"


class CorpusError(ValueError):
    """A corpus file or record violates the corpus contract."""


_KNOWN_FIELDS = ("doc_id", "source", "text", "summary", "labels", "celex_id")


@dataclass(frozen=True)
class LegalDocument:
    """One source-corpus entry.

    eurlex documents carry multi-label ids (opaque integers); eurlex_sum
    documents carry a human summary and a CELEX identifier. The `extra`
    mapping holds any unknown record fields so round-trips are lossless.
    """

    doc_id: str
    source: Source
    text: str
    summary: str | None = None
    labels: tuple[int, ...] | None = None
    celex_id: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.doc_id or not str(self.doc_id).strip():
            raise CorpusError("doc_id must be a non-empty string")
        if not self.text.strip():
            raise CorpusError(f"document {self.doc_id!r} has empty text")
        if self.source is Source.EURLEX:
            if self.labels is None:
                raise CorpusError(f"eurlex document {self.doc_id!r} is missing labels")
            if self.summary is not None or self.celex_id is not None:
                raise CorpusError(
                    f"eurlex document {self.doc_id!r} must not carry summary or celex_id"
                )
        else:
            if self.summary is None or not self.summary.strip():
                raise CorpusError(f"eurlex_sum document {self.doc_id!r} is missing a summary")
            if self.celex_id is None or not self.celex_id.strip():
                raise CorpusError(f"eurlex_sum document {self.doc_id!r} is missing a celex_id")
            if self.labels is not None:
                raise CorpusError(f"eurlex_sum document {self.doc_id!r} must not carry labels")
        object.__setattr__(self, "extra", MappingProxyType(dict(self.extra)))

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {"doc_id": self.doc_id, "source": self.source.value, "text": self.text}
        if self.summary is not None:
            record["summary"] = self.summary
        if self.labels is not None:
            record["labels"] = list(self.labels)
        if self.celex_id is not None:
            record["celex_id"] = self.celex_id
        record.update(self.extra)
        return record

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "LegalDocument":
        for key in ("doc_id", "source", "text"):
            if key not in record:
                raise CorpusError(f"record is missing required field {key!r}")
        try:
            source = Source(record["source"])
        except ValueError:
            raise CorpusError(f"unknown source {record['source']!r}") from None
        for key in ("text", "summary", "celex_id"):
            value = record.get(key)
            if value is not None and not isinstance(value, str):
                raise CorpusError(f"field {key!r} of {record['doc_id']!r} must be a string")
        labels = record.get("labels")
        if labels is not None:
            if not isinstance(labels, list) or not all(isinstance(x, int) for x in labels):
                raise CorpusError(f"labels of {record['doc_id']!r} must be a list of integers")
            labels = tuple(labels)
        extra = {k: v for k, v in record.items() if k not in _KNOWN_FIELDS}
        return cls(
            doc_id=str(record["doc_id"]),
            source=source,
            text=record["text"],
            summary=record.get("summary"),
            labels=labels,
            celex_id=record.get("celex_id"),
            extra=extra,
        )


Corpus = list[LegalDocument]


@dataclass(frozen=True)
class CorpusStats:
    document_count: int
    token_count_quantiles: Mapping[float, int]
    band_counts: Mapping[LengthBand, int]

    def __post_init__(self) -> None:
        if sum(self.band_counts.values()) != self.document_count:
            raise ValueError("band counts must sum to the document count")


def load_corpus(path: str | Path, source: Source) -> Corpus:
    """Load and validate one corpus file; every record must match `source`.

    Raises CorpusError naming the offending line for malformed records,
    duplicate doc_ids, and source/schema mismatches.
    """
    documents: Corpus = []
    seen: dict[str, int] = {}
    for lineno, record in jsonl.read_records(path):
        try:
            doc = LegalDocument.from_record(record)
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        if doc.source is not source:
            raise CorpusError(
                f"{path}:{lineno}: record source {doc.source.value!r} does not match "
                f"declared corpus source {source.value!r}"
            )
        if doc.doc_id in seen:
            raise CorpusError(
                f"{path}:{lineno}: duplicate doc_id {doc.doc_id!r} "
                f"(first seen on line {seen[doc.doc_id]})"
            )
        seen[doc.doc_id] = lineno
        documents.append(doc)
    return documents


def save_corpus(corpus: Sequence[LegalDocument], path: str | Path) -> int:
    """Serialize documents back to the corpus record format; returns line count."""
    return jsonl.write_records(path, (doc.to_record() for doc in corpus))


def corpus_stats(
    corpus: Sequence[LegalDocument],
    quantiles: Sequence[float],
    thresholds: BandThresholds | None = None,
) -> CorpusStats:
    """Token-count quantiles (nearest-rank) and per-band document counts.

    When `thresholds` is omitted, tertile cutoffs are derived from the corpus;
    a corpus with no length variation then classifies entirely as SHORT.
    """
    if not corpus:
        raise CorpusError("cannot compute stats for an empty corpus")
    counts = [token_count(doc.text) for doc in corpus]
    quantile_map = {q: nearest_rank(counts, q) for q in quantiles}
    if thresholds is None:
        try:
            thresholds = band_thresholds(corpus)
        except ValueError:
            constant = max(counts)
            thresholds = BandThresholds(short_max=constant, medium_max=constant + 1)
    band_counts = {band: 0 for band in LengthBand}
    for count in counts:
        band_counts[classify_band(count, thresholds)] += 1
    return CorpusStats(
        document_count=len(corpus),
        token_count_quantiles=quantile_map,
        band_counts=band_counts,
    )
