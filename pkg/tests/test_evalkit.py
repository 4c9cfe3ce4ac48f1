import random
from functools import lru_cache

import pytest

from lexforge.evalkit import (
    LossEntry,
    LossLog,
    compare_runs,
    comparison_to_dict,
    micro_f1,
    parse_losslog_filename,
    read_loss_log,
    render_comparison,
    rouge_l,
    rouge_n,
    write_loss_log,
)


# ---------------------------------------------------------------------------
# Independent oracles: deliberately different algorithms from the library.
# ---------------------------------------------------------------------------

def brute_rouge_n(candidate: str, reference: str, n: int):
    cand = candidate.lower().split()
    ref = reference.lower().split()
    cand_grams = [tuple(cand[i : i + n]) for i in range(max(len(cand) - n + 1, 0))]
    ref_grams = [tuple(ref[i : i + n]) for i in range(max(len(ref) - n + 1, 0))]
    if not cand_grams or not ref_grams:
        return (0.0, 0.0, 0.0)
    remaining = list(ref_grams)
    overlap = 0
    for gram in cand_grams:
        if gram in remaining:
            remaining.remove(gram)
            overlap += 1
    p = overlap / len(cand_grams)
    r = overlap / len(ref_grams)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return (p, r, f)


def brute_lcs(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


def brute_rouge_l(candidate: str, reference: str):
    cand = tuple(candidate.lower().split())
    ref = tuple(reference.lower().split())
    if not cand or not ref:
        return (0.0, 0.0, 0.0)
    lcs = brute_lcs(cand, ref)
    p = lcs / len(cand)
    r = lcs / len(ref)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return (p, r, f)


def brute_micro_f1(predictions, references) -> float:
    tp = sum(1 for p, r in zip(predictions, references) for label in p if label in r)
    fp = sum(1 for p, r in zip(predictions, references) for label in p if label not in r)
    fn = sum(1 for p, r in zip(predictions, references) for label in r if label not in p)
    if 2 * tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def random_sentence(rng: random.Random, max_len: int = 10) -> str:
    vocab = ["a", "b", "c", "d", "treaty", "council"]
    return " ".join(rng.choice(vocab) for _ in range(rng.randint(0, max_len)))


class TestRougeN:
    def test_identity_is_one(self):
        score = rouge_n("the council met today", "the council met today", 1)
        assert score.f1 == 1.0

    def test_disjoint_is_zero(self):
        assert rouge_n("alpha beta", "gamma delta", 1).f1 == 0.0

    def test_bigram_half_overlap(self):
        score = rouge_n("a b c", "a b d", 2)
        assert score.precision == pytest.approx(0.5)
        assert score.recall == pytest.approx(0.5)
        assert score.f1 == pytest.approx(0.5)

    def test_n_longer_than_both_is_zero_not_error(self):
        assert rouge_n("a b", "c d", 5).f1 == 0.0

    def test_swap_exchanges_precision_and_recall(self):
        a, b = "a b c d", "a b x"
        fwd = rouge_n(a, b, 1)
        rev = rouge_n(b, a, 1)
        assert fwd.precision == pytest.approx(rev.recall)
        assert fwd.recall == pytest.approx(rev.precision)
        assert fwd.f1 == pytest.approx(rev.f1)

    def test_case_insensitive(self):
        assert rouge_n("Council Regulation", "council regulation", 1).f1 == 1.0

    def test_matches_brute_force(self):
        rng = random.Random(99)
        for _ in range(300):
            cand = random_sentence(rng)
            ref = random_sentence(rng)
            n = rng.randint(1, 3)
            score = rouge_n(cand, ref, n)
            expected = brute_rouge_n(cand, ref, n)
            assert score.precision == pytest.approx(expected[0], abs=1e-12)
            assert score.recall == pytest.approx(expected[1], abs=1e-12)
            assert score.f1 == pytest.approx(expected[2], abs=1e-12)


class TestRougeL:
    def test_identity_is_one(self):
        assert rouge_l("one two three", "one two three").f1 == 1.0

    def test_transposition_two_thirds(self):
        assert rouge_l("a c b", "a b c").f1 == pytest.approx(2 / 3)

    def test_empty_candidate_is_zero(self):
        assert rouge_l("", "a b c").f1 == 0.0

    def test_matches_brute_force(self):
        rng = random.Random(7)
        for _ in range(200):
            cand = random_sentence(rng, max_len=8)
            ref = random_sentence(rng, max_len=8)
            score = rouge_l(cand, ref)
            expected = brute_rouge_l(cand, ref)
            assert score.f1 == pytest.approx(expected[2], abs=1e-12)


class TestMicroF1:
    def test_perfect_predictions(self):
        refs = [{1, 2}, {3}, set()]
        assert micro_f1(refs, refs) == 1.0

    def test_all_empty_predictions(self):
        assert micro_f1([set(), set()], [{1}, {2, 3}]) == 0.0

    def test_pooled_counts(self):
        assert micro_f1([{1, 2}, {3}], [{1}, {3, 4}]) == pytest.approx(2 / 3)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            micro_f1([{1}], [{1}, {2}])

    def test_matches_brute_force(self):
        rng = random.Random(13)
        for _ in range(200):
            size = rng.randint(0, 8)
            preds = [set(rng.sample(range(6), rng.randint(0, 4))) for _ in range(size)]
            refs = [set(rng.sample(range(6), rng.randint(0, 4))) for _ in range(size)]
            assert micro_f1(preds, refs) == pytest.approx(brute_micro_f1(preds, refs), abs=1e-12)


def loss_log(run: str, losses: list[float]) -> LossLog:
    return LossLog(
        run_name=run,
        entries=tuple(
            LossEntry(epoch=i + 1, step=(i + 1) * 10, loss=loss) for i, loss in enumerate(losses)
        ),
    )


class TestCompareRuns:
    def test_winner_on_eurlex_fixture(self):
        comparison = compare_runs(
            [loss_log("baseline", [0.9, 0.1918]), loss_log("synlex", [0.8, 0.0152])],
            ["eurlex", "eurlex"],
        )
        assert comparison.winner_per_dataset["eurlex"] == "synlex"
        assert dict(
            ((run, ds), loss) for run, ds, loss in comparison.rows
        ) == {("baseline", "eurlex"): 0.1918, ("synlex", "eurlex"): 0.0152}

    def test_winner_on_eurlex_sum_fixture(self):
        comparison = compare_runs(
            [loss_log("baseline", [0.1639]), loss_log("synlex", [0.0026])],
            ["eurlex_sum", "eurlex_sum"],
        )
        assert comparison.winner_per_dataset["eurlex_sum"] == "synlex"

    def test_single_run_wins_by_default(self):
        comparison = compare_runs([loss_log("only", [0.5, 0.4])], ["eurlex"])
        assert comparison.winner_per_dataset == {"eurlex": "only"}

    def test_empty_log_rejected(self):
        with pytest.raises(ValueError):
            compare_runs([LossLog(run_name="x", entries=())], ["eurlex"])

    def test_winner_invariant_to_uniform_positive_scaling(self):
        rng = random.Random(3)
        losses = {run: [rng.uniform(0.01, 2.0) for _ in range(4)] for run in ("a", "b", "c")}
        base = compare_runs(
            [loss_log(run, values) for run, values in losses.items()], ["d"] * 3
        )
        scaled = compare_runs(
            [loss_log(run, [v * 37.5 for v in values]) for run, values in losses.items()],
            ["d"] * 3,
        )
        assert base.winner_per_dataset == scaled.winner_per_dataset

    def test_render_has_datasets_as_columns(self):
        comparison = compare_runs(
            [
                loss_log("baseline", [0.1918]),
                loss_log("synlex", [0.0152]),
                loss_log("baseline", [0.1639]),
                loss_log("synlex", [0.0026]),
            ],
            ["eurlex", "eurlex", "eurlex_sum", "eurlex_sum"],
        )
        table = render_comparison(comparison)
        header = table.splitlines()[0]
        assert "eurlex" in header and "eurlex_sum" in header
        assert "0.1918" in table and "0.0152" in table
        assert "0.1639" in table and "0.0026" in table
        data = comparison_to_dict(comparison)
        assert data["winner_per_dataset"] == {"eurlex": "synlex", "eurlex_sum": "synlex"}


class TestLossLogFiles:
    def test_filename_convention(self):
        assert parse_losslog_filename("runs/baseline.eurlex.losslog.jsonl") == (
            "baseline",
            "eurlex",
        )
        with pytest.raises(ValueError):
            parse_losslog_filename("losses.jsonl")

    def test_round_trip(self, tmp_path):
        log = loss_log("baseline", [0.6, 0.3, 0.1918])
        path = write_loss_log(log, "eurlex", tmp_path)
        assert path.name == "baseline.eurlex.losslog.jsonl"
        loaded, dataset = read_loss_log(path)
        assert dataset == "eurlex"
        assert loaded == log

    def test_decreasing_epochs_rejected(self):
        with pytest.raises(ValueError, match="decreasing"):
            LossLog(
                run_name="bad",
                entries=(LossEntry(2, 1, 0.5), LossEntry(1, 2, 0.4)),
            )

    def test_bad_entry_reports_line(self, tmp_path):
        path = tmp_path / "x.eurlex.losslog.jsonl"
        path.write_text('{"epoch": 1, "step": 1, "loss": 0.5}\n{"epoch": 2}\n')
        with pytest.raises(ValueError, match=":2:"):
            read_loss_log(path)

    def test_metrics_stay_in_unit_interval(self):
        rng = random.Random(4)
        for _ in range(100):
            cand, ref = random_sentence(rng), random_sentence(rng)
            for score in (rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)):
                for value in (score.precision, score.recall, score.f1):
                    assert 0.0 <= value <= 1.0
