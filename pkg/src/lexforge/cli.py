"""Command-line surface: one subcommand per pipeline stage plus `run` and `eval`.

Exit codes are stable: 0 success, 1 usage error, 2 data error (bad files,
bad config, failed stages), 3 backend error (missing API key, unreachable
endpoint). Every subcommand accepts --config, --seed, and --out; flags
override the corresponding config-file values. Intermediate stages are
recomputed deterministically from (config, seed), so chained subcommands see
exactly the documents an earlier `run` or `generate` saw.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from lexforge import complexity, dataset, jsonl, pipeline, qagen, sampler
from lexforge.backends import BackendError, HttpBackend, MockBackend
from lexforge.config import (
    ConfigError,
    PipelineConfig,
    TrainingConfig,
    load_config,
    stage_seed,
)
from lexforge.corpus import corpus_stats, save_corpus
from lexforge.curriculum import build_manifest
from lexforge.dataset import split as split_examples
from lexforge.evalkit import (
    compare_runs,
    comparison_to_dict,
    read_loss_log,
    render_comparison,
)
from lexforge.pipeline import StageError
from lexforge.ratelimit import SimulatedClock, SystemClock


class UsageError(Exception):
    """Bad flags or arguments; maps to exit code 1."""


class _Formatter(argparse.HelpFormatter):
    def __init__(self, prog: str):
        super().__init__(prog, width=96, max_help_position=26)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lexforge",
        formatter_class=_Formatter,
        description="Corpus-to-curriculum pipeline for legal fine-tuning datasets.",
    )
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    common.add_argument("--out", metavar="DIR", help="override the config output directory")
    common.add_argument(
        "--stats-json", metavar="PATH", help="also write machine-readable stats to PATH"
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    sub.add_parser(
        "ingest", parents=[common], formatter_class=_Formatter,
        help="validate corpora and write normalized copies",
    )
    sub.add_parser(
        "score", parents=[common], formatter_class=_Formatter,
        help="write complexity profiles and band thresholds",
    )
    sub.add_parser(
        "sample", parents=[common], formatter_class=_Formatter,
        help="write the stratified document sample per corpus",
    )
    p_generate = sub.add_parser(
        "generate", parents=[common], formatter_class=_Formatter,
        help="generate synthetic QA records through a backend",
    )
    p_generate.add_argument(
        "--backend", choices=("mock", "live"), default="mock",
        help="mock needs no network or key (default)",
    )
    p_curriculum = sub.add_parser(
        "curriculum", parents=[common], formatter_class=_Formatter,
        help="merge real and synthetic examples into an ordered curriculum",
    )
    p_curriculum.add_argument(
        "--qa", metavar="PATH", help="QA records file (default: <out>/qa_records.jsonl)"
    )
    p_export = sub.add_parser(
        "export", parents=[common], formatter_class=_Formatter,
        help="split and export train/validation/test manifests",
    )
    p_export.add_argument(
        "--qa", metavar="PATH", help="QA records file (default: <out>/qa_records.jsonl)"
    )
    p_eval = sub.add_parser(
        "eval", parents=[common], formatter_class=_Formatter,
        help="evaluation utilities",
    )
    eval_sub = p_eval.add_subparsers(dest="eval_command", metavar="ACTION")
    p_compare = eval_sub.add_parser(
        "compare", parents=[common], formatter_class=_Formatter,
        help="compare final losses across run logs",
    )
    p_compare.add_argument(
        "--logs", required=True, metavar="PATHS",
        help="comma-separated <run>.<dataset>.losslog.jsonl files",
    )
    p_run = sub.add_parser(
        "run", parents=[common], formatter_class=_Formatter,
        help="execute the full pipeline end to end",
    )
    p_run.add_argument(
        "--backend", choices=("mock", "live"), default="mock",
        help="mock needs no network or key (default)",
    )
    return parser


def _load_configs(args: argparse.Namespace) -> tuple[PipelineConfig, TrainingConfig]:
    if getattr(args, "config", None):
        pipeline_cfg, training_cfg = load_config(args.config)
    else:
        pipeline_cfg, training_cfg = PipelineConfig(), TrainingConfig()
    overrides: dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if overrides:
        pipeline_cfg = dataclasses.replace(pipeline_cfg, **overrides)
    return pipeline_cfg, training_cfg


def _require_corpora(config: PipelineConfig) -> None:
    if not config.corpora:
        raise ConfigError("no corpora configured; set pipeline.corpora in the config file")


def _make_backend(kind: str, config: PipelineConfig):
    """Backend plus the clock that rate-limits it.

    The mock backend answers instantly and offline, so it runs against a
    simulated clock: rate-limit waits advance simulated time instead of
    stalling CI. Live backends keep the real clock.
    """
    if kind == "mock":
        return MockBackend(seed=stage_seed(config.seed, "backend")), SimulatedClock()
    return HttpBackend(endpoint=config.backend.endpoint, model=config.backend.model), SystemClock()


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args: argparse.Namespace, summary_line: str, stats: dict[str, Any]) -> None:
    print(summary_line)
    if getattr(args, "stats_json", None):
        Path(args.stats_json).write_text(
            json.dumps(stats, indent=2, ensure_ascii=False) + "\n", "utf-8"
        )


def _prepared(config: PipelineConfig):
    """Shared front half of the pipeline: corpora, profiler, profiles, sample."""
    corpora = pipeline.load_corpora(config)
    all_docs = [doc for docs in corpora.values() for doc in docs]
    profiler = pipeline.build_profiler(config, all_docs)
    profiles = complexity.profile_corpus(all_docs, profiler)
    sampled = []
    for index, spec in enumerate(config.corpora):
        sampled.extend(
            sampler.stratified_sample(
                corpora[spec.path],
                profiles,
                config.sample_size,
                stage_seed(config.seed, f"sample:{index}:{spec.source.value}"),
            )
        )
    return corpora, all_docs, profiler, profiles, sampled


def cmd_ingest(args: argparse.Namespace) -> int:
    config, _ = _load_configs(args)
    _require_corpora(config)
    out = _out_dir(config)
    corpora = pipeline.load_corpora(config)
    stats: dict[str, Any] = {"corpora": []}
    total = 0
    for index, spec in enumerate(config.corpora):
        documents = corpora[spec.path]
        path = out / f"corpus_{index}_{spec.source.value}.jsonl"
        save_corpus(documents, path)
        info = corpus_stats(documents, (0.25, 0.5, 0.75, 0.95))
        stats["corpora"].append(
            {
                "path": spec.path,
                "source": spec.source.value,
                "documents": info.document_count,
                "token_count_quantiles": {str(q): v for q, v in info.token_count_quantiles.items()},
                "normalized_copy": str(path),
            }
        )
        total += info.document_count
    _emit(args, f"ingested {total} documents from {len(config.corpora)} corpora", stats)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    config, _ = _load_configs(args)
    _require_corpora(config)
    out = _out_dir(config)
    _, all_docs, profiler, profiles, _ = _prepared(config)
    rows = []
    for doc in all_docs:
        profile = profiles[doc.doc_id]
        rows.append(
            {
                "doc_id": doc.doc_id,
                "token_count": profile.token_count,
                "char_count": profile.char_count,
                "concept_density": profile.concept_density,
                "band": profile.band.value,
                "composite_score": profile.composite_score,
            }
        )
    jsonl.write_records(out / "profiles.jsonl", rows)
    thresholds = {
        "short_max": profiler.thresholds.short_max,
        "medium_max": profiler.thresholds.medium_max,
        "norm": profiler.norm,
    }
    (out / "thresholds.json").write_text(json.dumps(thresholds, indent=2) + "\n", "utf-8")
    bands = {band.value: 0 for band in complexity.LengthBand}
    for profile in profiles.values():
        bands[profile.band.value] += 1
    _emit(
        args,
        f"scored {len(rows)} documents; bands {bands}",
        {"documents": len(rows), "bands": bands, "thresholds": thresholds},
    )
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    config, _ = _load_configs(args)
    _require_corpora(config)
    out = _out_dir(config)
    corpora, _, _, profiles, _ = _prepared(config)
    stats: dict[str, Any] = {"samples": []}
    total = 0
    for index, spec in enumerate(config.corpora):
        sample = sampler.stratified_sample(
            corpora[spec.path],
            profiles,
            config.sample_size,
            stage_seed(config.seed, f"sample:{index}:{spec.source.value}"),
        )
        path = out / f"sampled_{index}_{spec.source.value}.jsonl"
        save_corpus(sample, path)
        bands = {band.value: 0 for band in complexity.LengthBand}
        for doc in sample:
            bands[profiles[doc.doc_id].band.value] += 1
        stats["samples"].append(
            {"source": spec.source.value, "documents": len(sample), "bands": bands, "path": str(path)}
        )
        total += len(sample)
    _emit(args, f"sampled {total} documents across {len(config.corpora)} corpora", stats)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    config, _ = _load_configs(args)
    _require_corpora(config)
    out = _out_dir(config)
    backend, clock = _make_backend(args.backend, config)
    _, all_docs, _, _, sampled = _prepared(config)
    drafts = pipeline._formulate_all(config, sampled)
    docs_by_id = {doc.doc_id: doc for doc in all_docs}
    records, report = qagen.generate(
        backend, drafts, config.rate_limit, clock=clock, docs=docs_by_id
    )
    qagen.save_qa_records(records, out / pipeline.QA_RECORDS_FILE)
    (out / pipeline.REPORT_FILE).write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", "utf-8"
    )
    _emit(
        args,
        f"generated {report.succeeded}/{report.drafts_total} QA records "
        f"({report.skipped} skipped, {report.retries} retries)",
        report.to_dict(),
    )
    return 0


def _build_examples(config: PipelineConfig, qa_path: Path):
    _, all_docs, profiler, _, sampled = _prepared(config)
    records = qagen.load_qa_records(qa_path)
    examples = [
        dataset.to_training_example(doc, dataset.task_for_source(doc.source), profiler)
        for doc in sampled
    ]
    qa_index: dict[str, int] = {}
    for record in records:
        doc_id = str(record.metadata["source_doc_id"])
        index = qa_index.get(doc_id, 0)
        qa_index[doc_id] = index + 1
        examples.append(
            dataset.to_training_example(
                record, dataset.Task.QA, profiler, example_id=f"{doc_id}:qa:{index}"
            )
        )
    return examples


def cmd_curriculum(args: argparse.Namespace) -> int:
    config, _ = _load_configs(args)
    _require_corpora(config)
    out = _out_dir(config)
    qa_path = Path(args.qa) if args.qa else out / pipeline.QA_RECORDS_FILE
    examples = _build_examples(config, qa_path)
    manifest = build_manifest(examples, config.n_stages)
    rows = [dataset.example_to_record(stage, ex) for stage, ex in manifest.ordered_examples]
    jsonl.write_records(out / "curriculum.jsonl", rows)
    sizes = manifest.stage_sizes()
    _emit(
        args,
        f"ordered {len(rows)} examples into {manifest.n_stages} stages {sizes}",
        {"examples": len(rows), "n_stages": manifest.n_stages, "stage_sizes": sizes},
    )
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config, training = _load_configs(args)
    _require_corpora(config)
    out = _out_dir(config)
    qa_path = Path(args.qa) if args.qa else out / pipeline.QA_RECORDS_FILE
    examples = _build_examples(config, qa_path)
    manifest = build_manifest(examples, config.n_stages)
    assignment = split_examples(examples, config.split_ratios, stage_seed(config.seed, "split"))
    records = qagen.load_qa_records(qa_path)
    paths = pipeline.export_artifacts(config, training, manifest, assignment, records, None)
    counts = {
        name: len(dataset.read_example_records(paths[name]))
        for name in ("train", "validation", "test")
    }
    _emit(
        args,
        f"exported {sum(counts.values())} examples: {counts}",
        {"counts": counts, "paths": {k: str(v) for k, v in paths.items()}},
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.eval_command != "compare":
        raise UsageError("eval requires an action (try: eval compare --logs a,b)")
    logs = []
    datasets = []
    for raw in args.logs.split(","):
        path = raw.strip()
        if not path:
            continue
        log, dataset_name = read_loss_log(path)
        logs.append(log)
        datasets.append(dataset_name)
    if not logs:
        raise UsageError("--logs must name at least one loss log")
    comparison = compare_runs(logs, datasets)
    print(render_comparison(comparison))
    if getattr(args, "stats_json", None):
        Path(args.stats_json).write_text(
            json.dumps(comparison_to_dict(comparison), indent=2) + "\n", "utf-8"
        )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config, training = _load_configs(args)
    _require_corpora(config)
    backend, clock = _make_backend(args.backend, config)
    summary = pipeline.run_pipeline(config, training, backend, clock=clock)
    report = summary.report
    _emit(
        args,
        f"pipeline complete: {summary.real_examples} real + {summary.qa_records} synthetic "
        f"examples -> {summary.split_counts} in {summary.output_dir} "
        f"({report.skipped if report else 0} drafts skipped)",
        summary.to_dict(),
    )
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "sample": cmd_sample,
    "generate": cmd_generate,
    "curriculum": cmd_curriculum,
    "export": cmd_export,
    "eval": cmd_eval,
    "run": cmd_run,
}


def _exit_code(exc: BaseException) -> int:
    cursor: BaseException | None = exc
    while cursor is not None:
        if isinstance(cursor, BackendError):
            return 3
        cursor = cursor.__cause__
    return 2


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (BackendError, StageError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        label = "backend error" if code == 3 else "error"
        print(f"{label}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
