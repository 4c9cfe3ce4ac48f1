"""Manifest reading, byte-level tokenization, and order-preserving batching."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch

from trainadapter.model import BOS_ID, EOS_ID, PAD_ID

REQUIRED_FIELDS = ("example_id", "stage_index", "prompt", "target")


@dataclass(frozen=True)
class ManifestExample:
    example_id: str
    stage_index: int
    prompt: str
    target: str


def read_manifest(path: str | Path) -> list[ManifestExample]:
    """Load train.jsonl in file order; the file order IS the curriculum."""
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            missing = [key for key in REQUIRED_FIELDS if key not in record]
            if missing:
                raise ValueError(f"{path}:{lineno}: record is missing fields {missing}")
            examples.append(
                ManifestExample(
                    example_id=str(record["example_id"]),
                    stage_index=int(record["stage_index"]),
                    prompt=str(record["prompt"]),
                    target=str(record["target"]),
                )
            )
    if not examples:
        raise ValueError(f"{path}: manifest contains no examples")
    stages = [e.stage_index for e in examples]
    if any(a > b for a, b in zip(stages, stages[1:])):
        raise ValueError(f"{path}: stage_index decreases within the manifest")
    return examples


def encode_example(example: ManifestExample, max_seq_len: int) -> tuple[list[int], list[int]]:
    """Token ids and labels for one example.

    Layout: BOS + prompt bytes + target bytes + EOS. When the sequence would
    exceed max_seq_len, the prompt's tail is cut; the target is never
    truncated (it carries the supervision signal), so a target that cannot
    fit at all is an error. Labels mask BOS and the prompt with -100.
    """
    prompt_bytes = list(example.prompt.encode("utf-8"))
    target_bytes = list(example.target.encode("utf-8"))
    budget = max_seq_len - len(target_bytes) - 2
    if budget < 0:
        raise ValueError(
            f"example {example.example_id!r}: target of {len(target_bytes)} bytes "
            f"cannot fit in max_seq_len {max_seq_len}"
        )
    prompt_bytes = prompt_bytes[:budget]
    ids = [BOS_ID] + prompt_bytes + target_bytes + [EOS_ID]
    labels = [-100] * (1 + len(prompt_bytes)) + target_bytes + [EOS_ID]
    return ids, labels


def collate(batch: list[ManifestExample], max_seq_len: int) -> tuple[torch.Tensor, torch.Tensor]:
    encoded = [encode_example(example, max_seq_len) for example in batch]
    width = max(len(ids) for ids, _ in encoded)
    input_ids = torch.full((len(batch), width), PAD_ID, dtype=torch.long)
    labels = torch.full((len(batch), width), -100, dtype=torch.long)
    for row, (ids, labs) in enumerate(encoded):
        input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        labels[row, : len(labs)] = torch.tensor(labs, dtype=torch.long)
    return input_ids, labels


def stage_batches(
    examples: list[ManifestExample],
    batch_size: int,
    shuffle_within_stage: bool = False,
    seed: int = 0,
) -> list[list[ManifestExample]]:
    """Batch examples without ever crossing a stage boundary.

    Manifest order is preserved; with shuffle_within_stage the order inside
    each stage block is permuted (seeded) but stages stay contiguous.
    """
    stages: list[list[ManifestExample]] = []
    for example in examples:
        if not stages or stages[-1][0].stage_index != example.stage_index:
            stages.append([example])
        else:
            stages[-1].append(example)
    rng = random.Random(seed)
    batches = []
    for stage in stages:
        if shuffle_within_stage:
            stage = stage[:]
            rng.shuffle(stage)
        for i in range(0, len(stage), batch_size):
            batches.append(stage[i : i + batch_size])
    return batches
