"""Synthetic QA generation: question formulation, prompting, and record assembly.

Questions follow four strategies (factual extraction, definitions, legal
reasoning, comparisons). Each draft carries a context excerpt from its source
document; the backend answers under a sliding-window rate limit with
exponential-backoff retries. Successful answers become QA records in the
canonical schema: question, keyword, answer, type, metadata, difficulty.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence

from lexforge import jsonl
from lexforge.backends import (
    GenerationBackend,
    PermanentBackendError,
    TransientBackendError,
)
from lexforge.corpus import LegalDocument, Source
from lexforge.ratelimit import Clock, RateLimitPolicy, SlidingWindowRateLimiter, SystemClock


class QuestionStrategy(str, Enum):
    FACTUAL = "factual"
    DEFINITION = "definition"
    REASONING = "reasoning"
    COMPARISON = "comparison"


STRATEGY_ORDER: tuple[QuestionStrategy, ...] = tuple(QuestionStrategy)


class Difficulty(str, Enum):
    EASY = "easy"
    HARD = "hard"


# Difficulty is a total function of strategy: extraction-style questions are
# easy, inference-style questions are hard.
DIFFICULTY_BY_STRATEGY: dict[QuestionStrategy, Difficulty] = {
    QuestionStrategy.FACTUAL: Difficulty.EASY,
    QuestionStrategy.DEFINITION: Difficulty.EASY,
    QuestionStrategy.REASONING: Difficulty.HARD,
    QuestionStrategy.COMPARISON: Difficulty.HARD,
}

DEFAULT_EXCERPT_CHARS = 12_000

DEFAULT_TEMPLATES: dict[QuestionStrategy, tuple[str, ...]] = {
    QuestionStrategy.FACTUAL: (
        "When did the event described in the document occur?",
        "What organization is involved in this legal matter?",
        "What specific dates, figures, or named parties does the document mention?",
        "Which member states or sectors does this document apply to?",
    ),
    QuestionStrategy.DEFINITION: (
        "How does the document define the key term it introduces?",
        "What is the meaning of the principal legal term used in this document?",
        "Which concepts does the document explicitly define, and how?",
    ),
    QuestionStrategy.REASONING: (
        "How does the document justify the decision concerning this?",
        "What legal basis does the document rely on for its conclusions?",
        "Why was the measure described in the document considered necessary?",
    ),
    QuestionStrategy.COMPARISON: (
        "What comparison or contrast is being made in this section of the document?",
        "How does this document differ from the earlier instruments it references?",
        "What similarities or differences does the document draw between the measures involved?",
    ),
}

PROMPT_HEADER = (
    "You are a legal research assistant. Answer the question using only the "
    "provided context from an official legal document. Be precise and ground "
    "every claim in the cited passage."
)


@dataclass(frozen=True)
class QuestionDraft:
    question_text: str
    strategy: QuestionStrategy
    context_excerpt: str
    source_doc_id: str

    def __post_init__(self) -> None:
        if not self.question_text.strip():
            raise ValueError("question_text must be non-empty")


@dataclass(frozen=True)
class QaRecord:
    """One synthetic question/answer pair in the canonical record schema."""

    question: str
    keyword: str
    answer: str
    type: str
    metadata: Mapping[str, Any]
    difficulty: Difficulty

    def __post_init__(self) -> None:
        strategy = QuestionStrategy(self.type)
        if self.difficulty is not DIFFICULTY_BY_STRATEGY[strategy]:
            raise ValueError(
                f"difficulty {self.difficulty.value!r} is invalid for type {self.type!r}"
            )
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    def to_record(self) -> dict[str, Any]:
        return {
            "question": self.question,
            "keyword": self.keyword,
            "answer": self.answer,
            "type": self.type,
            "metadata": dict(self.metadata),
            "difficulty": self.difficulty.value,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "QaRecord":
        missing = {"question", "keyword", "answer", "type", "metadata", "difficulty"} - set(record)
        if missing:
            raise ValueError(f"QA record is missing fields: {sorted(missing)}")
        return cls(
            question=record["question"],
            keyword=record["keyword"],
            answer=record["answer"],
            type=record["type"],
            metadata=record["metadata"],
            difficulty=Difficulty(record["difficulty"]),
        )


@dataclass
class GenerationReport:
    """Bookkeeping for one generation run; counts reconcile exactly:
    succeeded + skipped == drafts_total and calls_issued == drafts_total + retries."""

    drafts_total: int = 0
    succeeded: int = 0
    skipped: int = 0
    retries: int = 0
    calls_issued: int = 0
    failures: list[dict[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "drafts_total": self.drafts_total,
            "succeeded": self.succeeded,
            "skipped": self.skipped,
            "retries": self.retries,
            "calls_issued": self.calls_issued,
            "failures": list(self.failures),
        }


def _derive_rng(seed: int, doc_id: str) -> random.Random:
    """Per-document RNG so template choice is stable regardless of doc order."""
    digest = hashlib.blake2b(f"{seed}:{doc_id}".encode("utf-8"), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def load_templates(path: str | Path) -> dict[QuestionStrategy, tuple[str, ...]]:
    """Parse a strategy-sectioned template file.

    Sections are headed by `[factual]`, `[definition]`, `[reasoning]`, or
    `[comparison]`; each following non-blank line is one template. Every
    strategy must end up with at least one template.
    """
    templates: dict[QuestionStrategy, list[str]] = {s: [] for s in STRATEGY_ORDER}
    current: QuestionStrategy | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip().lower()
                try:
                    current = QuestionStrategy(name)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: unknown strategy section {name!r}") from None
                continue
            if current is None:
                raise ValueError(f"{path}:{lineno}: template line before any [strategy] section")
            templates[current].append(line)
    empty = [s.value for s in STRATEGY_ORDER if not templates[s]]
    if empty:
        raise ValueError(f"template file {path} has no templates for: {empty}")
    return {s: tuple(lines) for s, lines in templates.items()}


def formulate_questions(
    doc: LegalDocument,
    per_doc: int,
    seed: int,
    templates: Mapping[QuestionStrategy, Sequence[str]] | None = None,
    excerpt_chars: int = DEFAULT_EXCERPT_CHARS,
) -> list[QuestionDraft]:
    """Create per_doc drafts for one document.

    Strategies rotate round-robin in enum order starting at `seed mod 4`;
    the question text is drawn from the strategy's template set by a seeded,
    per-document RNG. The context excerpt is the document prefix capped at
    `excerpt_chars` characters.
    """
    if per_doc < 1:
        raise ValueError("per_doc must be at least 1")
    if excerpt_chars < 1:
        raise ValueError("excerpt_chars must be at least 1")
    pool = templates if templates is not None else DEFAULT_TEMPLATES
    rng = _derive_rng(seed, doc.doc_id)
    start = seed % len(STRATEGY_ORDER)
    excerpt = doc.text[:excerpt_chars]
    drafts = []
    for i in range(per_doc):
        strategy = STRATEGY_ORDER[(start + i) % len(STRATEGY_ORDER)]
        question = rng.choice(list(pool[strategy]))
        drafts.append(
            QuestionDraft(
                question_text=question,
                strategy=strategy,
                context_excerpt=excerpt,
                source_doc_id=doc.doc_id,
            )
        )
    return drafts


def build_prompt(draft: QuestionDraft) -> str:
    """Render the byte-stable prompt: header, context block, question block."""
    if not draft.context_excerpt.strip():
        raise ValueError(f"draft for {draft.source_doc_id!r} has an empty context excerpt")
    return (
        f"{PROMPT_HEADER}\n\n"
        f"Context:\n{draft.context_excerpt}\n\n"
        f"Question:\n{draft.question_text}\n\n"
        "Answer:"
    )


def assemble_record(draft: QuestionDraft, answer: str, doc: LegalDocument) -> QaRecord:
    """Build a QA record, tagging source metadata and strategy-derived difficulty.

    Metadata carries the source document's celex_id (eurlex_sum) or labels
    (eurlex), plus source_doc_id so downstream stages can resolve provenance.
    """
    if not answer.strip():
        raise ValueError("answer must be non-empty")
    if doc.doc_id != draft.source_doc_id:
        raise ValueError(
            f"draft source {draft.source_doc_id!r} does not match document {doc.doc_id!r}"
        )
    metadata: dict[str, Any] = {"source_doc_id": doc.doc_id}
    if doc.source is Source.EURLEX_SUM:
        metadata["celex_id"] = doc.celex_id
    else:
        metadata["labels"] = list(doc.labels or ())
    return QaRecord(
        question=draft.question_text,
        keyword=draft.context_excerpt,
        answer=answer,
        type=draft.strategy.value,
        metadata=metadata,
        difficulty=DIFFICULTY_BY_STRATEGY[draft.strategy],
    )


def generate(
    backend: GenerationBackend,
    drafts: Sequence[QuestionDraft],
    policy: RateLimitPolicy,
    clock: Clock | None = None,
    docs: Mapping[str, LegalDocument] | None = None,
) -> tuple[list[QaRecord], GenerationReport]:
    """Answer every draft through the backend under the rate-limit policy.

    Every backend call (including each retry) passes the sliding-window gate.
    Transient failures back off exponentially up to max_retries; permanent
    failures and exhausted retries skip the draft and land in the report.
    A fully unreachable backend therefore returns zero records, not an error.
    """
    if not drafts:
        raise ValueError("drafts must be non-empty")
    if docs is None:
        raise ValueError("generate needs a doc_id -> LegalDocument mapping for metadata")
    clock = clock if clock is not None else SystemClock()
    limiter = SlidingWindowRateLimiter(policy.max_requests, policy.window_seconds, clock)
    report = GenerationReport(drafts_total=len(drafts))
    records: list[QaRecord] = []
    for draft in drafts:
        try:
            doc = docs[draft.source_doc_id]
        except KeyError:
            raise ValueError(f"no document for draft source {draft.source_doc_id!r}") from None
        prompt = build_prompt(draft)
        attempt = 0
        while True:
            limiter.acquire()
            report.calls_issued += 1
            try:
                answer = backend.complete(prompt)
            except TransientBackendError as exc:
                if attempt >= policy.max_retries:
                    report.skipped += 1
                    report.failures.append(_failure(draft, f"retries exhausted: {exc}"))
                    break
                clock.sleep(policy.backoff_delay(attempt))
                attempt += 1
                report.retries += 1
                continue
            except PermanentBackendError as exc:
                report.skipped += 1
                report.failures.append(_failure(draft, str(exc)))
                break
            records.append(assemble_record(draft, answer, doc))
            report.succeeded += 1
            break
    return records, report


def _failure(draft: QuestionDraft, message: str) -> dict[str, str]:
    return {
        "source_doc_id": draft.source_doc_id,
        "strategy": draft.strategy.value,
        "error": message,
    }


def save_qa_records(records: Iterable[QaRecord], path: str | Path) -> int:
    return jsonl.write_records(path, (r.to_record() for r in records))


def load_qa_records(path: str | Path) -> list[QaRecord]:
    records = []
    for lineno, record in jsonl.read_records(path):
        try:
            records.append(QaRecord.from_record(record))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return records
