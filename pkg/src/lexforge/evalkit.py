"""Evaluation kit: ROUGE-N, ROUGE-L, micro-F1, and loss-run comparison tables.

ROUGE here is the plain deterministic variant: lowercased whitespace tokens,
no stemming, no stopword removal. Loss logs are JSONL files of
{"epoch", "step", "loss"} rows named `<run_name>.<dataset>.losslog.jsonl`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from lexforge import jsonl

LOSSLOG_SUFFIX = ".losslog.jsonl"


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _tokens(text: str) -> list[str]:
    return text.lower().split()


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """N-gram multiset overlap over whitespace tokens.

    Returns all-zero scores when either side has no n-grams (including n
    larger than both token counts), never an error.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    cand = _tokens(candidate)
    ref = _tokens(reference)
    cand_grams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
    ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
    if not cand_grams or not ref_grams:
        return RougeScore(0.0, 0.0, 0.0)
    overlap = sum((cand_grams & ref_grams).values())
    precision = overlap / sum(cand_grams.values())
    recall = overlap / sum(ref_grams.values())
    return RougeScore(precision, recall, _f1(precision, recall))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence overlap over whitespace tokens."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return RougeScore(precision, recall, _f1(precision, recall))


def micro_f1(
    predictions: Sequence[set[int] | frozenset[int]],
    references: Sequence[set[int] | frozenset[int]],
) -> float:
    """Micro-averaged F1 over pooled true-positive/false-positive/false-negative counts."""
    if len(predictions) != len(references):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(references)} references"
        )
    tp = fp = fn = 0
    for pred, ref in zip(predictions, references):
        tp += len(pred & ref)
        fp += len(pred - ref)
        fn += len(ref - pred)
    denominator = 2 * tp + fp + fn
    if denominator == 0:
        return 1.0
    return 2 * tp / denominator


@dataclass(frozen=True)
class LossEntry:
    epoch: int
    step: int
    loss: float


@dataclass(frozen=True)
class LossLog:
    run_name: str
    entries: tuple[LossEntry, ...]

    def __post_init__(self) -> None:
        epochs = [e.epoch for e in self.entries]
        if any(a > b for a, b in zip(epochs, epochs[1:])):
            raise ValueError(f"loss log {self.run_name!r} has decreasing epochs")

    def final_loss(self) -> float:
        if not self.entries:
            raise ValueError(f"loss log {self.run_name!r} is empty")
        return self.entries[-1].loss


@dataclass(frozen=True)
class RunComparison:
    rows: tuple[tuple[str, str, float], ...]  # (run_name, dataset_name, final_loss)
    winner_per_dataset: dict[str, str]


def parse_losslog_filename(path: str | Path) -> tuple[str, str]:
    """Split `<run_name>.<dataset>.losslog.jsonl` into (run_name, dataset)."""
    name = Path(path).name
    if not name.endswith(LOSSLOG_SUFFIX):
        raise ValueError(f"{name!r} does not follow <run>.<dataset>{LOSSLOG_SUFFIX}")
    stem = name[: -len(LOSSLOG_SUFFIX)]
    run_name, sep, dataset = stem.rpartition(".")
    if not sep or not run_name or not dataset:
        raise ValueError(f"{name!r} does not follow <run>.<dataset>{LOSSLOG_SUFFIX}")
    return run_name, dataset


def read_loss_log(path: str | Path) -> tuple[LossLog, str]:
    """Read one loss-log file; the run name and dataset come from the filename."""
    run_name, dataset = parse_losslog_filename(path)
    entries = []
    for lineno, record in jsonl.read_records(path):
        try:
            entries.append(
                LossEntry(
                    epoch=int(record["epoch"]),
                    step=int(record["step"]),
                    loss=float(record["loss"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad loss entry: {exc}") from None
    return LossLog(run_name=run_name, entries=tuple(entries)), dataset


def write_loss_log(log: LossLog, dataset: str, out_dir: str | Path) -> Path:
    path = Path(out_dir) / f"{log.run_name}.{dataset}{LOSSLOG_SUFFIX}"
    jsonl.write_records(
        path,
        ({"epoch": e.epoch, "step": e.step, "loss": e.loss} for e in log.entries),
    )
    return path


def compare_runs(logs: Sequence[LossLog], dataset_names: Sequence[str]) -> RunComparison:
    """Final loss per run/dataset; the per-dataset winner is the minimum."""
    if len(logs) != len(dataset_names):
        raise ValueError("logs and dataset_names must be parallel lists")
    if not logs:
        raise ValueError("no logs to compare")
    rows = []
    best: dict[str, tuple[float, str]] = {}
    for log, dataset in zip(logs, dataset_names):
        final = log.final_loss()
        rows.append((log.run_name, dataset, final))
        if dataset not in best or final < best[dataset][0]:
            best[dataset] = (final, log.run_name)
    return RunComparison(
        rows=tuple(rows),
        winner_per_dataset={dataset: run for dataset, (_, run) in best.items()},
    )


def render_comparison(comparison: RunComparison) -> str:
    """Plain-text table: datasets as columns, runs as rows, winners starred."""
    datasets = list(dict.fromkeys(dataset for _, dataset, _ in comparison.rows))
    runs = list(dict.fromkeys(run for run, _, _ in comparison.rows))
    cells = {(run, dataset): loss for run, dataset, loss in comparison.rows}
    header = ["run"] + datasets
    table_rows = [header]
    for run in runs:
        row = [run]
        for dataset in datasets:
            if (run, dataset) in cells:
                mark = "*" if comparison.winner_per_dataset.get(dataset) == run else " "
                row.append(f"{cells[(run, dataset)]:.4f}{mark}")
            else:
                row.append("-")
        table_rows.append(row)
    widths = [max(len(row[i]) for row in table_rows) for i in range(len(header))]
    lines = []
    for idx, row in enumerate(table_rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    lines.append("(* = lowest final loss per dataset)")
    return "\n".join(lines)


def comparison_to_dict(comparison: RunComparison) -> dict[str, Any]:
    return {
        "rows": [
            {"run_name": run, "dataset": dataset, "final_loss": loss}
            for run, dataset, loss in comparison.rows
        ],
        "winner_per_dataset": dict(comparison.winner_per_dataset),
    }
