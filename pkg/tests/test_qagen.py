from pathlib import Path

import pytest

from lexforge.backends import (
    MockBackend,
    PermanentBackendError,
    TransientBackendError,
)
from lexforge.qagen import (
    DEFAULT_TEMPLATES,
    DIFFICULTY_BY_STRATEGY,
    Difficulty,
    QaRecord,
    QuestionDraft,
    QuestionStrategy,
    assemble_record,
    build_prompt,
    formulate_questions,
    generate,
    load_qa_records,
    load_templates,
    save_qa_records,
)
from lexforge.ratelimit import RateLimitPolicy, SimulatedClock

from helpers import eurlex_doc, eurlex_sum_doc
from test_ratelimit import assert_window_compliant

GOLDEN_PROMPT = Path(__file__).parent / "data" / "golden_prompt.txt"


class RecordingBackend:
    """Stamps the clock at every call so tests can audit the issued-call trace."""

    def __init__(self, inner, clock):
        self.inner = inner
        self.clock = clock
        self.call_times = []

    def complete(self, prompt: str) -> str:
        self.call_times.append(self.clock.now())
        return self.inner.complete(prompt)


class FlakyBackend:
    """Fails transiently a fixed number of times, then answers."""

    def __init__(self, failures: int):
        self.remaining = failures
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        if self.remaining > 0:
            self.remaining -= 1
            raise TransientBackendError("flaky")
        return "a steady answer"


class DeadBackend:
    def complete(self, prompt: str) -> str:
        raise PermanentBackendError("gone for good")


def drafts_for(doc, per_doc=4, seed=0):
    return formulate_questions(doc, per_doc, seed)


class TestFormulateQuestions:
    def test_four_drafts_cover_all_strategies(self):
        doc = eurlex_doc("d1", 50)
        drafts = drafts_for(doc, per_doc=4)
        assert {d.strategy for d in drafts} == set(QuestionStrategy)

    def test_round_robin_start_from_seed(self):
        doc = eurlex_doc("d1", 50)
        (draft,) = formulate_questions(doc, 1, seed=8)  # 8 mod 4 == 0
        assert draft.strategy is QuestionStrategy.FACTUAL
        (draft,) = formulate_questions(doc, 1, seed=9)
        assert draft.strategy is QuestionStrategy.DEFINITION

    def test_factual_template_inventory_has_the_dated_event_question(self):
        assert "When did the event described in the document occur?" in DEFAULT_TEMPLATES[
            QuestionStrategy.FACTUAL
        ]
        doc = eurlex_doc("approval", 30)
        questions = {
            formulate_questions(doc, 1, seed=s * 4)[0].question_text for s in range(40)
        }
        assert "When did the event described in the document occur?" in questions

    def test_excerpt_is_document_prefix(self):
        doc = eurlex_doc("d1", 500)
        drafts = formulate_questions(doc, 2, seed=0, excerpt_chars=64)
        for draft in drafts:
            assert draft.context_excerpt == doc.text[:64]
            assert draft.context_excerpt in doc.text

    def test_deterministic_given_seed(self):
        doc = eurlex_sum_doc("d2", 80)
        assert drafts_for(doc, 6, 123) == drafts_for(doc, 6, 123)

    def test_per_doc_must_be_positive(self):
        with pytest.raises(ValueError):
            formulate_questions(eurlex_doc("d", 5), 0, seed=0)


class TestBuildPrompt:
    def test_same_draft_same_bytes(self):
        doc = eurlex_doc("d1", 40)
        (draft,) = formulate_questions(doc, 1, seed=0)
        assert build_prompt(draft) == build_prompt(draft)

    def test_empty_excerpt_rejected_before_backend(self):
        draft = QuestionDraft(
            question_text="Why?",
            strategy=QuestionStrategy.REASONING,
            context_excerpt="   ",
            source_doc_id="d1",
        )
        with pytest.raises(ValueError, match="empty context"):
            build_prompt(draft)

    def test_matches_golden_snapshot(self):
        draft = QuestionDraft(
            question_text="When did the event described in the document occur?",
            strategy=QuestionStrategy.FACTUAL,
            context_excerpt="COMMISSION DECISION of 23 March 1981 approving the outline plan",
            source_doc_id="fixture",
        )
        assert build_prompt(draft) == GOLDEN_PROMPT.read_text("utf-8")


class TestAssembleRecord:
    def test_eurlex_sum_metadata_carries_celex(self):
        doc = eurlex_sum_doc("eurlex_sum_283", 30, celex_id="32009H1205(01)")
        (draft,) = formulate_questions(doc, 1, seed=8)
        record = assemble_record(draft, "The Council of the European Union.", doc)
        assert record.metadata["celex_id"] == "32009H1205(01)"
        assert record.difficulty is Difficulty.EASY
        assert record.type == "factual"

    def test_eurlex_metadata_carries_labels(self):
        doc = eurlex_doc("eurlex_15107", 30, labels=(9, 23, 93, 96, 97))
        (draft,) = formulate_questions(doc, 1, seed=10)  # 10 mod 4 == 2 -> REASONING
        assert draft.strategy is QuestionStrategy.REASONING
        record = assemble_record(draft, "Because the interim agreement bridges the gap.", doc)
        assert record.metadata["labels"] == [9, 23, 93, 96, 97]
        assert record.difficulty is Difficulty.HARD

    def test_comparison_is_hard(self):
        doc = eurlex_doc("d", 30)
        (draft,) = formulate_questions(doc, 1, seed=11)  # 11 mod 4 == 3 -> COMPARISON
        assert draft.strategy is QuestionStrategy.COMPARISON
        record = assemble_record(draft, "It contrasts the two regulations.", doc)
        assert record.difficulty is Difficulty.HARD

    def test_empty_answer_rejected(self):
        doc = eurlex_doc("d", 30)
        (draft,) = formulate_questions(doc, 1, seed=0)
        with pytest.raises(ValueError, match="answer"):
            assemble_record(draft, "  ", doc)

    def test_difficulty_mapping_is_total(self):
        assert set(DIFFICULTY_BY_STRATEGY) == set(QuestionStrategy)
        for strategy, difficulty in DIFFICULTY_BY_STRATEGY.items():
            expected = (
                Difficulty.EASY
                if strategy in (QuestionStrategy.FACTUAL, QuestionStrategy.DEFINITION)
                else Difficulty.HARD
            )
            assert difficulty is expected

    def test_record_rejects_mismatched_difficulty(self):
        with pytest.raises(ValueError):
            QaRecord(
                question="q",
                keyword="k",
                answer="a",
                type="factual",
                metadata={},
                difficulty=Difficulty.HARD,
            )


class TestGenerate:
    def setup_method(self):
        self.policy = RateLimitPolicy()
        self.clock = SimulatedClock()

    def _docs(self, count=4):
        docs = [eurlex_doc(f"d{i}", 40 + i) for i in range(count)]
        return docs, {d.doc_id: d for d in docs}

    def test_fifteen_drafts_complete_with_zero_waiting(self):
        docs, by_id = self._docs(15)
        drafts = [formulate_questions(d, 1, seed=0)[0] for d in docs]
        records, report = generate(
            MockBackend(), drafts, self.policy, clock=self.clock, docs=by_id
        )
        assert len(records) == 15
        assert self.clock.now() == 0.0

    def test_sixteenth_draft_waits_a_full_window(self):
        docs, by_id = self._docs(16)
        drafts = [formulate_questions(d, 1, seed=0)[0] for d in docs]
        _, report = generate(MockBackend(), drafts, self.policy, clock=self.clock, docs=by_id)
        assert report.calls_issued == 16
        assert self.clock.now() >= 60.0

    def test_two_failures_then_success_counts_two_retries(self):
        docs, by_id = self._docs(1)
        drafts = [formulate_questions(docs[0], 1, seed=0)[0]]
        backend = FlakyBackend(failures=2)
        records, report = generate(backend, drafts, self.policy, clock=self.clock, docs=by_id)
        assert len(records) == 1
        assert report.retries == 2
        assert report.succeeded == 1
        assert report.calls_issued == 3

    def test_unreachable_backend_returns_report_not_error(self):
        docs, by_id = self._docs(3)
        drafts = [formulate_questions(d, 1, seed=0)[0] for d in docs]
        records, report = generate(DeadBackend(), drafts, self.policy, clock=self.clock, docs=by_id)
        assert records == []
        assert report.succeeded == 0
        assert report.skipped == 3
        assert len(report.failures) == 3

    def test_retries_exhausted_skips_draft(self):
        docs, by_id = self._docs(1)
        drafts = [formulate_questions(docs[0], 1, seed=0)[0]]
        backend = FlakyBackend(failures=10)
        records, report = generate(backend, drafts, self.policy, clock=self.clock, docs=by_id)
        assert records == []
        assert report.retries == self.policy.max_retries
        assert report.calls_issued == 1 + self.policy.max_retries

    def test_idempotent_under_mock(self):
        docs, by_id = self._docs(6)
        drafts = [d for doc in docs for d in formulate_questions(doc, 3, seed=5)]
        first, _ = generate(
            MockBackend(seed=9), drafts, self.policy, clock=SimulatedClock(), docs=by_id
        )
        second, _ = generate(
            MockBackend(seed=9), drafts, self.policy, clock=SimulatedClock(), docs=by_id
        )
        assert first == second

    def test_rate_limit_holds_with_retries_in_the_mix(self):
        docs, by_id = self._docs(10)
        drafts = [d for doc in docs for d in formulate_questions(doc, 4, seed=1)]
        inner = MockBackend(
            seed=2, transient_failure_rate=0.25, clock=self.clock, latency_range=(0.0, 2.0)
        )
        backend = RecordingBackend(inner, self.clock)
        records, report = generate(backend, drafts, self.policy, clock=self.clock, docs=by_id)
        assert report.calls_issued == report.drafts_total + report.retries
        assert report.succeeded + report.skipped == report.drafts_total
        assert len(backend.call_times) == report.calls_issued
        assert_window_compliant(backend.call_times, self.policy.max_requests, self.policy.window_seconds)

    def test_keyword_is_substring_of_source_text(self):
        docs, by_id = self._docs(5)
        drafts = [d for doc in docs for d in formulate_questions(doc, 2, seed=3)]
        records, _ = generate(MockBackend(), drafts, self.policy, clock=self.clock, docs=by_id)
        for record in records:
            assert record.keyword in by_id[record.metadata["source_doc_id"]].text

    def test_empty_drafts_rejected(self):
        with pytest.raises(ValueError):
            generate(MockBackend(), [], self.policy, clock=self.clock, docs={})


class TestQaRecordFiles:
    def test_round_trip_and_exact_field_set(self, tmp_path):
        doc = eurlex_sum_doc("s1", 25, celex_id="31999L0001")
        drafts = formulate_questions(doc, 4, seed=0)
        records, _ = generate(
            MockBackend(), drafts, RateLimitPolicy(), clock=SimulatedClock(), docs={"s1": doc}
        )
        path = tmp_path / "qa.jsonl"
        save_qa_records(records, path)
        import json

        for line in path.read_text().splitlines():
            assert list(json.loads(line)) == [
                "question",
                "keyword",
                "answer",
                "type",
                "metadata",
                "difficulty",
            ]
        assert load_qa_records(path) == records


class TestTemplateOverride:
    def test_strategy_sectioned_file(self, tmp_path):
        path = tmp_path / "templates.txt"
        path.write_text(
            "# custom templates\n"
            "[factual]\nWhat happened?\n"
            "[definition]\nWhat does it mean?\n"
            "[reasoning]\nWhy?\n"
            "[comparison]\nHow do they differ?\n"
        )
        templates = load_templates(path)
        assert templates[QuestionStrategy.FACTUAL] == ("What happened?",)
        doc = eurlex_doc("d", 20)
        (draft,) = formulate_questions(doc, 1, seed=8, templates=templates)
        assert draft.question_text == "What happened?"

    def test_missing_section_rejected(self, tmp_path):
        path = tmp_path / "templates.txt"
        path.write_text("[factual]\nWhat happened?\n")
        with pytest.raises(ValueError, match="no templates"):
            load_templates(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "templates.txt"
        path.write_text("[riddle]\nWhat walks on four legs?\n")
        with pytest.raises(ValueError, match="unknown strategy"):
            load_templates(path)
