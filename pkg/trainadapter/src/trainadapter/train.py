"""The training loop: LoRA fine-tune in manifest order, loss log out."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import torch

from trainadapter.config import TrainingSetup, load_training_setup
from trainadapter.data import collate, read_manifest, stage_batches
from trainadapter.model import (
    apply_lora,
    lora_state_dict,
    resolve_model,
    trainable_parameters,
)


@dataclass(frozen=True)
class TrainRun:
    run_name: str
    manifest_path: str
    config_path: str
    dataset: str = "combined"
    model_id: str = "tiny"
    device: str = "cpu"
    out_dir: str = "."
    dry_run: bool = False
    shuffle_within_stage: bool = False
    seed: int = 0
    log_every: int = 1
    epochs_override: int | None = None


@dataclass
class TrainResult:
    loss_log_path: Path | None
    adapter_path: Path | None
    consumed_order_path: Path | None
    epoch_averages: dict[int, float]
    effective_optimizer: str
    steps: int


def build_optimizer(model: torch.nn.Module, setup: TrainingSetup) -> tuple[torch.optim.Optimizer, str]:
    """AdamW with the configured lr/weight decay.

    The configured name "adamw-8bit" needs bitsandbytes and a GPU; on this
    adapter's CPU targets it degrades to standard AdamW with identical
    hyperparameters, and the effective name is reported alongside the run.
    """
    params = trainable_parameters(model)
    optimizer = torch.optim.AdamW(
        params, lr=setup.learning_rate, weight_decay=setup.weight_decay
    )
    effective = "adamw" if setup.optimizer == "adamw-8bit" else setup.optimizer
    if setup.optimizer not in ("adamw", "adamw-8bit"):
        raise ValueError(f"unsupported optimizer {setup.optimizer!r}")
    return optimizer, effective


def linear_warmup_schedule(
    optimizer: torch.optim.Optimizer, warmup_steps: int, total_steps: int
) -> torch.optim.lr_scheduler.LambdaLR:
    """Linear ramp over `warmup_steps`, then linear decay to zero at `total_steps`."""

    def factor(step: int) -> float:
        if warmup_steps > 0 and step < warmup_steps:
            return (step + 1) / warmup_steps
        if total_steps <= warmup_steps:
            return 1.0
        return max(0.0, (total_steps - step) / (total_steps - warmup_steps))

    return torch.optim.lr_scheduler.LambdaLR(optimizer, factor)


def train(run: TrainRun) -> TrainResult:
    """Fine-tune on the manifest and write the loss log and adapter weights.

    Examples are consumed strictly in manifest order (the curriculum);
    batches never span a stage boundary. A dry run records the consumption
    order and writes no model artifacts.
    """
    setup = load_training_setup(run.config_path)
    if run.epochs_override is not None:
        if run.epochs_override < 1:
            raise ValueError("epochs override must be positive")
        setup = dataclasses.replace(setup, epochs=run.epochs_override)
    examples = read_manifest(run.manifest_path)
    out = Path(run.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    batches = stage_batches(
        examples, setup.batch_size, run.shuffle_within_stage, seed=run.seed
    )
    consumed = [example.example_id for batch in batches for example in batch]

    if run.dry_run:
        order_path = out / f"{run.run_name}.consumed_order.json"
        order_path.write_text(json.dumps(consumed, indent=2) + "\n", "utf-8")
        return TrainResult(
            loss_log_path=None,
            adapter_path=None,
            consumed_order_path=order_path,
            epoch_averages={},
            effective_optimizer="none (dry run)",
            steps=0,
        )

    torch.manual_seed(run.seed)
    device = torch.device(run.device)
    model = resolve_model(run.model_id, seed=run.seed).to(device)
    apply_lora(
        model, list(setup.target_modules), setup.lora_rank, setup.lora_alpha, setup.lora_dropout
    )
    optimizer, effective_optimizer = build_optimizer(model, setup)
    total_steps = len(batches) * setup.epochs
    scheduler = linear_warmup_schedule(optimizer, setup.warmup_steps, total_steps)

    loss_log_path = out / f"{run.run_name}.{run.dataset}.losslog.jsonl"
    epoch_averages: dict[int, float] = {}
    step = 0
    model.train()
    with open(loss_log_path, "w", encoding="utf-8") as log:
        for epoch in range(1, setup.epochs + 1):
            epoch_losses = []
            for batch in batches:
                input_ids, labels = collate(batch, setup.max_seq_len)
                input_ids = input_ids.to(device)
                labels = labels.to(device)
                optimizer.zero_grad()
                loss = model.loss(input_ids, labels)
                if not math.isfinite(loss.item()):
                    raise RuntimeError(f"non-finite loss at step {step}")
                loss.backward()
                optimizer.step()
                scheduler.step()
                step += 1
                epoch_losses.append(loss.item())
                if step % run.log_every == 0:
                    log.write(
                        json.dumps({"epoch": epoch, "step": step, "loss": loss.item()}) + "\n"
                    )
            epoch_averages[epoch] = sum(epoch_losses) / len(epoch_losses)

    averages_path = out / f"{run.run_name}.epoch_averages.json"
    averages_path.write_text(
        json.dumps({str(e): avg for e, avg in epoch_averages.items()}, indent=2) + "\n", "utf-8"
    )
    adapter_path = out / f"{run.run_name}.adapter.pt"
    torch.save(lora_state_dict(model), adapter_path)
    return TrainResult(
        loss_log_path=loss_log_path,
        adapter_path=adapter_path,
        consumed_order_path=None,
        epoch_averages=epoch_averages,
        effective_optimizer=effective_optimizer,
        steps=step,
    )
