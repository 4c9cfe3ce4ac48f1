"""End-to-end orchestration: ingest, score, sample, generate, order, split, export.

Stages run sequentially; every stage failure propagates as a StageError
naming the stage, and a failure after files start appearing leaves a
manifest_meta marked incomplete. Under the mock backend the whole run is a
pure function of (config, seed): two runs produce byte-identical outputs,
except the created_at timestamp in manifest_meta (which the content hash
deliberately excludes).
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from lexforge import complexity, dataset, jsonl, qagen, sampler
from lexforge.backends import GenerationBackend
from lexforge.config import (
    TRAINING_CONFIG_FILE,
    PipelineConfig,
    TrainingConfig,
    config_to_dict,
    stage_seed,
    training_to_dict,
)
from lexforge.corpus import LegalDocument, load_corpus
from lexforge.curriculum import CurriculumManifest, Origin, TrainingExample, build_manifest
from lexforge.dataset import SplitAssignment, split, task_for_source, to_training_example
from lexforge.qagen import GenerationReport

QA_RECORDS_FILE = "qa_records.jsonl"
REPORT_FILE = "generation_report.json"


class StageError(RuntimeError):
    """A pipeline stage failed; `stage` names which one."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, str(exc)) from exc


@dataclass
class PipelineSummary:
    documents: dict[str, int] = field(default_factory=dict)
    sampled: int = 0
    drafts: int = 0
    qa_records: int = 0
    real_examples: int = 0
    examples_total: int = 0
    split_counts: dict[str, int] = field(default_factory=dict)
    output_dir: str = ""
    report: GenerationReport | None = None
    paths: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "documents": dict(self.documents),
            "sampled": self.sampled,
            "drafts": self.drafts,
            "qa_records": self.qa_records,
            "real_examples": self.real_examples,
            "examples_total": self.examples_total,
            "split_counts": dict(self.split_counts),
            "output_dir": self.output_dir,
            "report": self.report.to_dict() if self.report else None,
            "paths": dict(self.paths),
        }


def build_profiler(
    config: PipelineConfig, corpus: list[LegalDocument]
) -> complexity.TextProfiler:
    lexicon = (
        complexity.ConceptLexicon.from_file(config.lexicon_path)
        if config.lexicon_path
        else complexity.ConceptLexicon.bundled()
    )
    thresholds = complexity.band_thresholds(
        corpus, config.short_quantile, config.medium_quantile
    )
    return complexity.TextProfiler(
        lexicon=lexicon,
        thresholds=thresholds,
        weights=(config.length_weight, config.density_weight),
        norm=complexity.length_norm(corpus, config.norm_quantile),
    )


def load_corpora(config: PipelineConfig) -> dict[str, list[LegalDocument]]:
    """Load every configured corpus; doc_ids must be unique across all of them."""
    if not config.corpora:
        raise ValueError("no corpora configured")
    corpora: dict[str, list[LegalDocument]] = {}
    seen: dict[str, str] = {}
    for spec in config.corpora:
        documents = load_corpus(spec.path, spec.source)
        for doc in documents:
            if doc.doc_id in seen:
                raise ValueError(
                    f"doc_id {doc.doc_id!r} appears in both {seen[doc.doc_id]} and {spec.path}"
                )
            seen[doc.doc_id] = spec.path
        corpora[spec.path] = documents
    return corpora


def _formulate_all(
    config: PipelineConfig, sampled: list[LegalDocument]
) -> list[qagen.QuestionDraft]:
    templates = qagen.load_templates(config.template_path) if config.template_path else None
    seed = stage_seed(config.seed, "qagen")
    drafts: list[qagen.QuestionDraft] = []
    for doc in sampled:
        drafts.extend(
            qagen.formulate_questions(
                doc,
                config.per_doc_questions,
                seed,
                templates=templates,
                excerpt_chars=config.excerpt_chars,
            )
        )
    return drafts


def run_pipeline(
    config: PipelineConfig,
    training: TrainingConfig,
    backend: GenerationBackend,
    clock=None,
) -> PipelineSummary:
    """Execute every stage and write all artifacts under config.output_dir.

    Real training examples come from the sampled documents (the same ones
    that seed QA generation), one per document: labeling for eurlex,
    summarization for eurlex_sum.
    """
    summary = PipelineSummary(output_dir=config.output_dir)
    out = Path(config.output_dir)

    with _stage("ingest"):
        corpora = load_corpora(config)
        all_docs = [doc for documents in corpora.values() for doc in documents]
        for spec in config.corpora:
            key = spec.source.value
            summary.documents[key] = summary.documents.get(key, 0) + len(corpora[spec.path])

    with _stage("complexity"):
        profiler = build_profiler(config, all_docs)
        profiles = complexity.profile_corpus(all_docs, profiler)

    with _stage("sample"):
        sampled: list[LegalDocument] = []
        for index, spec in enumerate(config.corpora):
            documents = corpora[spec.path]
            sampled.extend(
                sampler.stratified_sample(
                    documents,
                    profiles,
                    config.sample_size,
                    stage_seed(config.seed, f"sample:{index}:{spec.source.value}"),
                )
            )
        summary.sampled = len(sampled)

    with _stage("generate"):
        drafts = _formulate_all(config, sampled)
        summary.drafts = len(drafts)
        docs_by_id = {doc.doc_id: doc for doc in all_docs}
        records, report = qagen.generate(
            backend, drafts, config.rate_limit, clock=clock, docs=docs_by_id
        )
        summary.qa_records = len(records)
        summary.report = report

    with _stage("merge"):
        examples: list[TrainingExample] = []
        for doc in sampled:
            examples.append(to_training_example(doc, task_for_source(doc.source), profiler))
        summary.real_examples = len(examples)
        qa_index: dict[str, int] = {}
        for record in records:
            doc_id = str(record.metadata["source_doc_id"])
            index = qa_index.get(doc_id, 0)
            qa_index[doc_id] = index + 1
            examples.append(
                to_training_example(
                    record,
                    dataset.Task.QA,
                    profiler,
                    example_id=f"{doc_id}:qa:{index}",
                )
            )
        summary.examples_total = len(examples)

    with _stage("curriculum"):
        manifest = build_manifest(examples, config.n_stages)

    with _stage("split"):
        assignment = split(examples, config.split_ratios, stage_seed(config.seed, "split"))

    try:
        with _stage("export"):
            paths = export_artifacts(
                config, training, manifest, assignment, records, report
            )
            summary.paths = {name: str(path) for name, path in paths.items()}
            for split_name in ("train", "validation", "test"):
                path = Path(summary.paths[split_name])
                with open(path, "r", encoding="utf-8") as fh:
                    summary.split_counts[split_name] = sum(1 for line in fh if line.strip())
    except StageError as exc:
        dataset.mark_incomplete(out, exc.stage, str(exc))
        raise
    return summary


def export_artifacts(
    config: PipelineConfig,
    training: TrainingConfig,
    manifest: CurriculumManifest,
    assignment: SplitAssignment,
    records: list[qagen.QaRecord],
    report: GenerationReport | None,
) -> dict[str, Path]:
    """Write the manifest files plus QA records, report, and training config.

    `report` may be None when exporting from a pre-existing QA file (the
    `export` subcommand), so a real generation report is never overwritten
    with an empty one.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = dataset.export_manifest(
        manifest,
        assignment,
        out,
        seed=config.seed,
        config_echo=config_to_dict(config, training),
    )
    qa_path = out / QA_RECORDS_FILE
    qagen.save_qa_records(records, qa_path)
    paths["qa_records"] = qa_path
    if report is not None:
        report_path = out / REPORT_FILE
        report_path.write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", "utf-8"
        )
        paths["generation_report"] = report_path
    training_path = out / TRAINING_CONFIG_FILE
    training_path.write_text(
        json.dumps(training_to_dict(training), indent=2, ensure_ascii=False) + "\n", "utf-8"
    )
    paths["training_config"] = training_path
    if config.split_by_origin:
        paths.update(_export_by_origin(out))
    return paths


def _export_by_origin(out: Path) -> dict[str, Path]:
    """Split the train file by origin, preserving curriculum order."""
    train_records = dataset.read_example_records(out / dataset.TRAIN_FILE)
    result: dict[str, Path] = {}
    for origin in Origin:
        path = out / f"train_{origin.value}.jsonl"
        subset = [r for r in train_records if r["origin"] == origin.value]
        jsonl.write_records(path, subset)
        result[f"train_{origin.value}"] = path
    return result
