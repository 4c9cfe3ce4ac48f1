"""Merge real and synthetic examples and order them easy-to-hard into stages.

The ordering key is (difficulty rank, composite score, example id): a HARD
synthetic tag outranks any score, EASY and untagged real examples order by
score alone, and the id breaks remaining ties deterministically. Stages are
contiguous near-equal partitions of the sorted sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from lexforge.complexity import ComplexityProfile
from lexforge.qagen import Difficulty

DEFAULT_STAGES = 3


class Task(str, Enum):
    LABELING = "labeling"
    SUMMARIZATION = "summarization"
    QA = "qa"


class Origin(str, Enum):
    REAL = "real"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class TrainingExample:
    """A unified prompt/target unit: a real task or a synthetic QA pair."""

    example_id: str
    task: Task
    prompt: str
    target: str
    origin: Origin
    source_doc_id: str
    complexity: ComplexityProfile
    difficulty: Difficulty | None = None

    def __post_init__(self) -> None:
        if not self.example_id:
            raise ValueError("example_id must be non-empty")
        if self.task is Task.QA and self.origin is not Origin.SYNTHETIC:
            raise ValueError(f"QA example {self.example_id!r} must be synthetic")
        if self.task is not Task.QA and self.origin is not Origin.REAL:
            raise ValueError(f"{self.task.value} example {self.example_id!r} must be real")
        if (self.difficulty is not None) != (self.origin is Origin.SYNTHETIC):
            raise ValueError(
                f"example {self.example_id!r}: difficulty must be present "
                "iff the example is synthetic"
            )


@dataclass(frozen=True)
class CurriculumManifest:
    """Stage-annotated, complexity-ordered sequence of training examples."""

    ordered_examples: tuple[tuple[int, TrainingExample], ...]
    n_stages: int

    def examples(self) -> list[TrainingExample]:
        return [example for _, example in self.ordered_examples]

    def stage_sizes(self) -> list[int]:
        sizes = [0] * self.n_stages
        for stage, _ in self.ordered_examples:
            sizes[stage] += 1
        return sizes


def difficulty_rank(example: TrainingExample) -> int:
    """0 for EASY or untagged (real) examples, 1 for HARD synthetic ones."""
    return 1 if example.difficulty is Difficulty.HARD else 0


def ordering_key(example: TrainingExample) -> tuple[int, float, str]:
    return (difficulty_rank(example), example.complexity.composite_score, example.example_id)


def build_manifest(
    examples: Sequence[TrainingExample], n_stages: int = DEFAULT_STAGES
) -> CurriculumManifest:
    """Sort by ordering key and partition into contiguous near-equal stages.

    Stage sizes differ by at most one; earlier stages take the extra example.
    """
    if not examples:
        raise ValueError("cannot build a curriculum from zero examples")
    if not 1 <= n_stages <= len(examples):
        raise ValueError(
            f"n_stages must lie in [1, {len(examples)}], got {n_stages}"
        )
    ordered = sorted(examples, key=ordering_key)
    base, extra = divmod(len(ordered), n_stages)
    annotated: list[tuple[int, TrainingExample]] = []
    position = 0
    for stage in range(n_stages):
        size = base + (1 if stage < extra else 0)
        for example in ordered[position : position + size]:
            annotated.append((stage, example))
        position += size
    return CurriculumManifest(ordered_examples=tuple(annotated), n_stages=n_stages)
