"""Typed configuration for the pipeline and the exported training setup.

Config files are JSON with two optional top-level sections, "pipeline" and
"training". Unknown keys are rejected anywhere. An empty file (or `{}`)
yields the documented defaults; the training defaults are the exact
hyperparameter set the exported datasets are meant to be trained with.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from lexforge.complexity import (
    DEFAULT_MEDIUM_QUANTILE,
    DEFAULT_NORM_QUANTILE,
    DEFAULT_SHORT_QUANTILE,
)
from lexforge.corpus import Source
from lexforge.dataset import DEFAULT_RATIOS
from lexforge.qagen import DEFAULT_EXCERPT_CHARS
from lexforge.ratelimit import RateLimitPolicy

DEFAULT_TARGET_MODULES = (
    "q_proj",
    "k_proj",
    "v_proj",
    "o_proj",
    "gate_proj",
    "up_proj",
    "down_proj",
)

TRAINING_CONFIG_FILE = "training_config.json"


class ConfigError(ValueError):
    """The configuration file is malformed or violates an invariant."""


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters exported for the downstream fine-tuning adapter."""

    base_model_id: str = "unsloth/gemma-3-12b-it"
    lora_rank: int = 8
    lora_alpha: int = 16
    lora_dropout: float = 0.0
    target_modules: tuple[str, ...] = DEFAULT_TARGET_MODULES
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
        if self.lora_rank < 1:
            raise ConfigError("lora_rank must be a positive integer")
        if self.lora_alpha < 1:
            raise ConfigError("lora_alpha must be a positive integer")
        if not 0.0 <= self.lora_dropout < 1.0:
            raise ConfigError("lora_dropout must lie in [0, 1)")
        if not self.target_modules:
            raise ConfigError("target_modules must be non-empty")
        if self.max_seq_len < 1 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("max_seq_len, batch_size, and epochs must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.warmup_steps < 0 or self.weight_decay < 0:
            raise ConfigError("warmup_steps and weight_decay must be non-negative")


@dataclass(frozen=True)
class CorpusSpec:
    path: str
    source: Source


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = ""
    model: str = ""


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob the end-to-end run needs, derivable from one file."""

    corpora: tuple[CorpusSpec, ...] = ()
    lexicon_path: str | None = None
    template_path: str | None = None
    short_quantile: float = DEFAULT_SHORT_QUANTILE
    medium_quantile: float = DEFAULT_MEDIUM_QUANTILE
    length_weight: float = 0.5
    density_weight: float = 0.5
    norm_quantile: float = DEFAULT_NORM_QUANTILE
    sample_size: int = 100
    per_doc_questions: int = 5
    excerpt_chars: int = DEFAULT_EXCERPT_CHARS
    rate_limit: RateLimitPolicy = field(default_factory=RateLimitPolicy)
    n_stages: int = 3
    split_ratios: tuple[float, float, float] = DEFAULT_RATIOS
    seed: int = 0
    output_dir: str = "out"
    split_by_origin: bool = False
    backend: BackendConfig = field(default_factory=BackendConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.short_quantile < self.medium_quantile < 1.0:
            raise ConfigError("band quantiles must satisfy 0 < short < medium < 1")
        if not 0.0 < self.norm_quantile < 1.0:
            raise ConfigError("norm_quantile must lie in (0, 1)")
        if self.length_weight < 0 or self.density_weight < 0:
            raise ConfigError("composite weights must be non-negative")
        if self.length_weight == 0 and self.density_weight == 0:
            raise ConfigError("composite weights must not both be zero")
        if self.sample_size < 1:
            raise ConfigError("sample_size must be at least 1")
        if self.per_doc_questions < 1:
            raise ConfigError("per_doc_questions must be at least 1")
        if self.excerpt_chars < 1:
            raise ConfigError("excerpt_chars must be at least 1")
        if self.n_stages < 1:
            raise ConfigError("n_stages must be at least 1")
        if len(self.split_ratios) != 3 or any(r < 0 for r in self.split_ratios):
            raise ConfigError("split_ratios must be three non-negative fractions")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ConfigError("split_ratios must sum to 1")


def _build(cls, data: Mapping[str, Any], context: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    kwargs = dict(data)
    for key in ("target_modules", "corpora", "split_ratios"):
        if key in kwargs and isinstance(kwargs[key], list):
            kwargs[key] = tuple(kwargs[key])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {context} configuration: {exc}") from None


def parse_config(data: Mapping[str, Any]) -> tuple[PipelineConfig, TrainingConfig]:
    """Validate a parsed config mapping; unknown keys anywhere are rejected."""
    unknown = set(data) - {"pipeline", "training"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    pipeline_data = dict(data.get("pipeline", {}))
    if "corpora" in pipeline_data:
        corpora = []
        for i, entry in enumerate(pipeline_data["corpora"]):
            if not isinstance(entry, Mapping) or set(entry) != {"path", "source"}:
                raise ConfigError(f"corpora[{i}] must have exactly 'path' and 'source'")
            try:
                corpora.append(CorpusSpec(path=entry["path"], source=Source(entry["source"])))
            except ValueError:
                raise ConfigError(f"corpora[{i}] has unknown source {entry['source']!r}") from None
        pipeline_data["corpora"] = tuple(corpora)
    if "rate_limit" in pipeline_data:
        pipeline_data["rate_limit"] = _build(
            RateLimitPolicy, pipeline_data["rate_limit"], "rate_limit"
        )
    if "backend" in pipeline_data:
        pipeline_data["backend"] = _build(BackendConfig, pipeline_data["backend"], "backend")
    pipeline = _build(PipelineConfig, pipeline_data, "pipeline")
    training = _build(TrainingConfig, data.get("training", {}), "training")
    return pipeline, training


def load_config(path: str | Path) -> tuple[PipelineConfig, TrainingConfig]:
    """Load, default, and validate a JSON config file."""
    text = Path(path).read_text("utf-8")
    if not text.strip():
        data: dict[str, Any] = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return parse_config(data)


def pipeline_to_dict(config: PipelineConfig) -> dict[str, Any]:
    return {
        "corpora": [{"path": c.path, "source": c.source.value} for c in config.corpora],
        "lexicon_path": config.lexicon_path,
        "template_path": config.template_path,
        "short_quantile": config.short_quantile,
        "medium_quantile": config.medium_quantile,
        "length_weight": config.length_weight,
        "density_weight": config.density_weight,
        "norm_quantile": config.norm_quantile,
        "sample_size": config.sample_size,
        "per_doc_questions": config.per_doc_questions,
        "excerpt_chars": config.excerpt_chars,
        "rate_limit": {
            "max_requests": config.rate_limit.max_requests,
            "window_seconds": config.rate_limit.window_seconds,
            "max_retries": config.rate_limit.max_retries,
            "backoff_base_seconds": config.rate_limit.backoff_base_seconds,
        },
        "n_stages": config.n_stages,
        "split_ratios": list(config.split_ratios),
        "seed": config.seed,
        "output_dir": config.output_dir,
        "split_by_origin": config.split_by_origin,
        "backend": {"endpoint": config.backend.endpoint, "model": config.backend.model},
    }


def training_to_dict(config: TrainingConfig) -> dict[str, Any]:
    return {
        "base_model_id": config.base_model_id,
        "lora_rank": config.lora_rank,
        "lora_alpha": config.lora_alpha,
        "lora_dropout": config.lora_dropout,
        "target_modules": list(config.target_modules),
        "load_8bit": config.load_8bit,
        "max_seq_len": config.max_seq_len,
        "batch_size": config.batch_size,
        "optimizer": config.optimizer,
        "learning_rate": config.learning_rate,
        "scheduler": config.scheduler,
        "warmup_steps": config.warmup_steps,
        "weight_decay": config.weight_decay,
        "epochs": config.epochs,
    }


def config_to_dict(pipeline: PipelineConfig, training: TrainingConfig) -> dict[str, Any]:
    return {"pipeline": pipeline_to_dict(pipeline), "training": training_to_dict(training)}


def stage_seed(seed: int, stage: str) -> int:
    """Derive a per-stage seed from the run seed and the stage name.

    Derivation: the big-endian integer of the first 8 bytes of
    blake2b(f"{seed}:{stage}"), masked to 63 bits. One config knob, no
    accidental correlation between stages.
    """
    digest = hashlib.blake2b(f"{seed}:{stage}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") & (2**63 - 1)
