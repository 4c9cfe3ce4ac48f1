"""Task formatting, leakage-safe splitting, and manifest export.

Splits are assigned at the source-document level and inherited by every
derived example, real or synthetic, so no document's content can leak across
train/validation/test. The train file preserves curriculum order; validation
and test files are sorted by document id.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

from lexforge import jsonl
from lexforge.complexity import TextProfiler
from lexforge.corpus import LegalDocument, Source
from lexforge.curriculum import CurriculumManifest, Origin, Task, TrainingExample
from lexforge.qagen import QaRecord
from lexforge.sampler import largest_remainder

DEFAULT_RATIOS = (0.8, 0.1, 0.1)

TRAIN_FILE = "train.jsonl"
VALIDATION_FILE = "validation.jsonl"
TEST_FILE = "test.jsonl"
META_FILE = "manifest_meta.json"


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


SPLIT_ORDER: tuple[Split, ...] = (Split.TRAIN, Split.VALIDATION, Split.TEST)


@dataclass(frozen=True)
class SplitAssignment:
    """Document-level split assignment; examples inherit their document's split."""

    ratios: tuple[float, float, float]
    assignment: Mapping[str, Split]

    def split_of(self, example: TrainingExample) -> Split:
        try:
            return self.assignment[example.source_doc_id]
        except KeyError:
            raise ValueError(
                f"example {example.example_id!r} has no split: source document "
                f"{example.source_doc_id!r} is unassigned"
            ) from None


def _qa_prompt(record: QaRecord) -> str:
    return f"Context:\n{record.keyword}\n\nQuestion:\n{record.question}"


def to_training_example(
    item: LegalDocument | QaRecord,
    task: Task,
    profiler: TextProfiler,
    example_id: str | None = None,
) -> TrainingExample:
    """Format one document or QA record as a prompt/target training example.

    LABELING targets are the sorted label ids joined by commas;
    SUMMARIZATION targets the summary verbatim; QA prompts combine the
    record's keyword context and question, targeting the answer.
    """
    if task is Task.QA:
        if not isinstance(item, QaRecord):
            raise ValueError("QA examples must be built from a QaRecord")
        source_doc_id = item.metadata.get("source_doc_id")
        if not source_doc_id:
            raise ValueError("QA record metadata is missing source_doc_id")
        prompt = _qa_prompt(item)
        if example_id is None:
            digest = hashlib.sha256(
                "\x00".join((item.question, item.keyword, item.answer)).encode("utf-8")
            ).hexdigest()[:12]
            example_id = f"{source_doc_id}:qa:{digest}"
        return TrainingExample(
            example_id=example_id,
            task=Task.QA,
            prompt=prompt,
            target=item.answer,
            origin=Origin.SYNTHETIC,
            source_doc_id=str(source_doc_id),
            complexity=profiler.profile(prompt),
            difficulty=item.difficulty,
        )
    if not isinstance(item, LegalDocument):
        raise ValueError(f"{task.value} examples must be built from a LegalDocument")
    if task is Task.LABELING:
        if item.source is not Source.EURLEX:
            raise ValueError(f"document {item.doc_id!r} has no labels for a labeling task")
        target = ",".join(str(label) for label in sorted(item.labels or ()))
    elif task is Task.SUMMARIZATION:
        if item.source is not Source.EURLEX_SUM:
            raise ValueError(f"document {item.doc_id!r} has no summary for a summarization task")
        target = item.summary or ""
    else:
        raise ValueError(f"unsupported task {task!r}")
    return TrainingExample(
        example_id=example_id if example_id is not None else f"{item.doc_id}:{task.value}",
        task=task,
        prompt=item.text,
        target=target,
        origin=Origin.REAL,
        source_doc_id=item.doc_id,
        complexity=profiler.profile(item.text),
    )


def task_for_source(source: Source) -> Task:
    """The real task a source corpus trains: labels for eurlex, summaries for eurlex_sum."""
    return Task.LABELING if source is Source.EURLEX else Task.SUMMARIZATION


def split(
    examples: Sequence[TrainingExample],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitAssignment:
    """Assign each distinct source document to a split.

    The distinct document ids are shuffled with the seed and partitioned by
    largest-remainder counts over the ratios, so document-level split sizes
    match the targets exactly and all derived examples stay together.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    if not examples:
        raise ValueError("no examples to split")
    doc_ids = sorted({example.source_doc_id for example in examples})
    nonzero = sum(1 for r in ratios if r > 0)
    if len(doc_ids) < nonzero:
        raise ValueError(
            f"{len(doc_ids)} distinct source documents cannot fill {nonzero} non-empty splits"
        )
    rng = random.Random(seed)
    rng.shuffle(doc_ids)
    counts = largest_remainder(list(ratios), len(doc_ids))
    assignment: dict[str, Split] = {}
    cursor = 0
    for split_name, count in zip(SPLIT_ORDER, counts):
        for doc_id in doc_ids[cursor : cursor + count]:
            assignment[doc_id] = split_name
        cursor += count
    return SplitAssignment(ratios=tuple(ratios), assignment=assignment)


def example_to_record(stage_index: int, example: TrainingExample) -> dict[str, Any]:
    return {
        "example_id": example.example_id,
        "stage_index": stage_index,
        "task": example.task.value,
        "prompt": example.prompt,
        "target": example.target,
        "origin": example.origin.value,
        "source_doc_id": example.source_doc_id,
        "difficulty": example.difficulty.value if example.difficulty is not None else None,
    }


def read_example_records(path: str | Path) -> list[dict[str, Any]]:
    """Load an exported example file back into record dicts, in file order."""
    return [record for _, record in jsonl.read_records(path)]


def export_manifest(
    manifest: CurriculumManifest,
    assignment: SplitAssignment,
    out_dir: str | Path,
    seed: int | None = None,
    config_echo: Mapping[str, Any] | None = None,
) -> dict[str, Path]:
    """Write train/validation/test JSONL files plus manifest_meta.json.

    The train file preserves curriculum order; validation and test are sorted
    by (source_doc_id, example_id). The content hash covers the bytes of the
    three example files only, so metadata timestamps never perturb it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_split: dict[Split, list[dict[str, Any]]] = {s: [] for s in SPLIT_ORDER}
    counts: dict[Split, dict[str, int]] = {
        s: {origin.value: 0 for origin in Origin} for s in SPLIT_ORDER
    }
    for stage_index, example in manifest.ordered_examples:
        target = assignment.split_of(example)
        per_split[target].append(example_to_record(stage_index, example))
        counts[target][example.origin.value] += 1
    for split_name in (Split.VALIDATION, Split.TEST):
        per_split[split_name].sort(key=lambda r: (r["source_doc_id"], r["example_id"]))

    paths = {
        Split.TRAIN: out / TRAIN_FILE,
        Split.VALIDATION: out / VALIDATION_FILE,
        Split.TEST: out / TEST_FILE,
    }
    hasher = hashlib.sha256()
    for split_name in SPLIT_ORDER:
        jsonl.write_records(paths[split_name], per_split[split_name])
        hasher.update(paths[split_name].read_bytes())
        hasher.update(b"\x00")

    meta = {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "ratios": list(assignment.ratios),
        "n_stages": manifest.n_stages,
        "counts": {
            s.value: {**counts[s], "total": sum(counts[s].values())} for s in SPLIT_ORDER
        },
        "config": dict(config_echo) if config_echo is not None else None,
        "content_hash": hasher.hexdigest(),
        "complete": True,
    }
    meta_path = out / META_FILE
    meta_path.write_text(json.dumps(meta, indent=2, ensure_ascii=False) + "\n", "utf-8")
    result = {s.value: paths[s] for s in SPLIT_ORDER}
    result["manifest_meta"] = meta_path
    return result


def mark_incomplete(out_dir: str | Path, stage: str, error: str) -> None:
    """Best-effort marker so partially written outputs are never taken as complete."""
    meta_path = Path(out_dir) / META_FILE
    try:
        meta = {
            "created_at": datetime.now(timezone.utc).isoformat(),
            "complete": False,
            "failed_stage": stage,
            "error": error,
        }
        meta_path.write_text(json.dumps(meta, indent=2, ensure_ascii=False) + "\n", "utf-8")
    except OSError:
        pass
