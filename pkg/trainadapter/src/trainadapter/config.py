"""Reader for the exported training_config.json."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class TrainingSetup:
    base_model_id: str = "unsloth/gemma-3-12b-it"
    lora_rank: int = 8
    lora_alpha: int = 16
    lora_dropout: float = 0.0
    target_modules: tuple[str, ...] = (
        "q_proj",
        "k_proj",
        "v_proj",
        "o_proj",
        "gate_proj",
        "up_proj",
        "down_proj",
    )
    load_8bit: bool = True
    max_seq_len: int = 8192
    batch_size: int = 8
    optimizer: str = "adamw-8bit"
    learning_rate: float = 2e-5
    scheduler: str = "linear"
    warmup_steps: int = 5
    weight_decay: float = 0.01
    epochs: int = 10

    def __post_init__(self) -> None:
        if self.lora_rank < 1 or self.lora_alpha < 1:
            raise ValueError("lora_rank and lora_alpha must be positive")
        if self.max_seq_len < 4:
            raise ValueError("max_seq_len is too small to hold any example")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def load_training_setup(path: str | Path) -> TrainingSetup:
    data = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: training config must be a JSON object")
    known = {f.name for f in fields(TrainingSetup)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"{path}: unknown training config keys: {sorted(unknown)}")
    if "target_modules" in data:
        data = {**data, "target_modules": tuple(data["target_modules"])}
    return TrainingSetup(**data)
