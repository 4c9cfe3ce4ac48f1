import json
from pathlib import Path

import pytest

from lexforge.backends import MockBackend
from lexforge.config import CorpusSpec, PipelineConfig, TrainingConfig, stage_seed
from lexforge.corpus import Source
from lexforge.dataset import read_example_records
from lexforge.pipeline import StageError, run_pipeline
from lexforge.ratelimit import SimulatedClock

from helpers import mixed_corpus, write_corpus_file


def write_fixture_corpora(tmp_path, n_eurlex=100, n_eurlex_sum=100, seed=0):
    docs = mixed_corpus(n_eurlex, n_eurlex_sum, seed=seed)
    eurlex_path = tmp_path / "eurlex.jsonl"
    eurlex_sum_path = tmp_path / "eurlex_sum.jsonl"
    write_corpus_file(eurlex_path, [d.to_record() for d in docs if d.source is Source.EURLEX])
    write_corpus_file(
        eurlex_sum_path, [d.to_record() for d in docs if d.source is Source.EURLEX_SUM]
    )
    return eurlex_path, eurlex_sum_path


def fixture_config(tmp_path, out_name="out", **overrides) -> PipelineConfig:
    eurlex_path, eurlex_sum_path = write_fixture_corpora(
        tmp_path, overrides.pop("n_eurlex", 100), overrides.pop("n_eurlex_sum", 100)
    )
    defaults = dict(
        corpora=(
            CorpusSpec(str(eurlex_path), Source.EURLEX),
            CorpusSpec(str(eurlex_sum_path), Source.EURLEX_SUM),
        ),
        sample_size=100,
        per_doc_questions=5,
        seed=1234,
        output_dir=str(tmp_path / out_name),
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


def run_fixture(config: PipelineConfig, failure_rate=0.0):
    backend = MockBackend(
        seed=stage_seed(config.seed, "backend"), transient_failure_rate=failure_rate
    )
    return run_pipeline(config, TrainingConfig(), backend, clock=SimulatedClock())


def test_two_hundred_docs_yield_real_plus_synthetic(tmp_path):
    config = fixture_config(tmp_path)
    summary = run_fixture(config, failure_rate=0.07)
    assert summary.sampled == 200
    assert summary.drafts == 1000
    assert summary.real_examples == 200
    report = summary.report
    assert summary.qa_records == 1000 - report.skipped
    assert summary.examples_total == summary.real_examples + summary.qa_records
    assert sum(summary.split_counts.values()) == summary.examples_total


def test_summary_counts_reconcile_with_files(tmp_path):
    config = fixture_config(tmp_path, n_eurlex=30, n_eurlex_sum=30, sample_size=20)
    summary = run_fixture(config)
    out = Path(config.output_dir)
    for name, count in summary.split_counts.items():
        assert len(read_example_records(out / f"{name}.jsonl")) == count
    meta = json.loads((out / "manifest_meta.json").read_text())
    assert meta["complete"] is True
    assert meta["seed"] == config.seed
    for name in ("train", "validation", "test"):
        assert meta["counts"][name]["total"] == summary.split_counts[name]
    report = json.loads((out / "generation_report.json").read_text())
    assert report["succeeded"] == summary.qa_records


def test_unreadable_corpus_fails_in_ingest_with_no_complete_export(tmp_path):
    out_dir = tmp_path / "out"
    config = PipelineConfig(
        corpora=(CorpusSpec(str(tmp_path / "missing.jsonl"), Source.EURLEX),),
        output_dir=str(out_dir),
    )
    with pytest.raises(StageError) as info:
        run_fixture(config)
    assert info.value.stage == "ingest"
    meta_path = out_dir / "manifest_meta.json"
    assert not meta_path.exists() or json.loads(meta_path.read_text())["complete"] is False


def test_oversized_sample_fails_in_sample_stage(tmp_path):
    config = fixture_config(tmp_path, n_eurlex=5, n_eurlex_sum=5, sample_size=50)
    with pytest.raises(StageError) as info:
        run_fixture(config)
    assert info.value.stage == "sample"


def test_identical_config_and_seed_reproduce_all_bytes(tmp_path):
    config = fixture_config(tmp_path, n_eurlex=40, n_eurlex_sum=40, sample_size=25)
    run_fixture(config, failure_rate=0.07)
    out = Path(config.output_dir)
    snapshot = {p.name: p.read_bytes() for p in out.iterdir()}
    run_fixture(config, failure_rate=0.07)
    for path in sorted(out.iterdir()):
        if path.name == "manifest_meta.json":
            before = json.loads(snapshot[path.name])
            after = json.loads(path.read_text())
            before.pop("created_at")
            after.pop("created_at")
            assert before == after
        else:
            assert path.read_bytes() == snapshot[path.name], path.name


def test_split_by_origin_writes_filtered_train_files(tmp_path):
    config = fixture_config(
        tmp_path, n_eurlex=20, n_eurlex_sum=20, sample_size=15, split_by_origin=True
    )
    summary = run_fixture(config)
    out = Path(config.output_dir)
    train = read_example_records(out / "train.jsonl")
    real = read_example_records(out / "train_real.jsonl")
    synthetic = read_example_records(out / "train_synthetic.jsonl")
    assert [r["example_id"] for r in real] == [
        r["example_id"] for r in train if r["origin"] == "real"
    ]
    assert [r["example_id"] for r in synthetic] == [
        r["example_id"] for r in train if r["origin"] == "synthetic"
    ]
    assert summary.paths["train_real"].endswith("train_real.jsonl")


def test_qa_records_file_matches_record_count(tmp_path):
    config = fixture_config(tmp_path, n_eurlex=10, n_eurlex_sum=10, sample_size=8)
    summary = run_fixture(config)
    out = Path(config.output_dir)
    lines = [l for l in (out / "qa_records.jsonl").read_text().splitlines() if l.strip()]
    assert len(lines) == summary.qa_records
