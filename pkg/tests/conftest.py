import pytest

from lexforge.complexity import BandThresholds, ConceptLexicon, TextProfiler


@pytest.fixture
def lexicon() -> ConceptLexicon:
    return ConceptLexicon.from_terms(["regulation", "council", "customs union", "member state"])


@pytest.fixture
def profiler(lexicon) -> TextProfiler:
    return TextProfiler(
        lexicon=lexicon,
        thresholds=BandThresholds(short_max=50, medium_max=200),
        weights=(0.5, 0.5),
        norm=400,
    )
