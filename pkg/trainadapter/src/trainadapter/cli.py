"""CLI for the fine-tuning adapter.

Exit codes: 0 success, 1 usage error, 2 data/model error (unresolvable model,
malformed manifest or config, non-finite loss, out-of-memory).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from trainadapter.train import TrainRun, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trainadapter",
        description="LoRA fine-tune on an exported curriculum manifest.",
    )
    parser.add_argument("--manifest", required=True, help="train.jsonl from the pipeline export")
    parser.add_argument("--config", required=True, help="training_config.json from the export")
    parser.add_argument("--run-name", required=True, help="run name for output artifacts")
    parser.add_argument("--model", default="tiny", help="base model id (only 'tiny' resolves)")
    parser.add_argument(
        "--dry-run", action="store_true",
        help="record the consumption order without training",
    )
    parser.add_argument("--dataset", default="combined", help="dataset name for the losslog file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--device", default="cpu", help="torch device")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-every", type=int, default=1, help="steps between loss entries")
    parser.add_argument(
        "--shuffle-within-stage", action="store_true",
        help="permute examples inside each stage (stages stay contiguous)",
    )
    parser.add_argument("--epochs", type=int, default=None, help="override configured epochs")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    run = TrainRun(
        run_name=args.run_name,
        manifest_path=args.manifest,
        config_path=args.config,
        dataset=args.dataset,
        model_id=args.model,
        device=args.device,
        out_dir=args.out,
        dry_run=args.dry_run,
        shuffle_within_stage=args.shuffle_within_stage,
        seed=args.seed,
        log_every=args.log_every,
        epochs_override=args.epochs,
    )
    try:
        result = train(run)
    except (ValueError, OSError, RuntimeError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if result.loss_log_path is not None:
        print(
            f"trained {result.steps} steps with {result.effective_optimizer}; "
            f"loss log: {result.loss_log_path}; adapter: {result.adapter_path}"
        )
        for epoch, average in result.epoch_averages.items():
            print(f"  epoch {epoch}: mean loss {average:.4f}")
    else:
        print(f"dry run complete; consumption order: {result.consumed_order_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
