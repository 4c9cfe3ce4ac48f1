"""Complexity metrics the curriculum orders by: length and legal concept density.

"Concept density" here means the fraction of token positions that start a
case-insensitive match of a term from a legal-term lexicon. That is one
deliberately simple, deterministic operationalization of an otherwise fuzzy
notion; the bundled EU-law lexicon can be replaced with any domain list via
a plain text file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from lexforge.corpus import LegalDocument


class LengthBand(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


# Fixed ordering used for allocation tie-breaks and deterministic iteration.
BAND_ORDER: tuple[LengthBand, ...] = (LengthBand.SHORT, LengthBand.MEDIUM, LengthBand.LONG)

DEFAULT_SHORT_QUANTILE = 1.0 / 3.0
DEFAULT_MEDIUM_QUANTILE = 2.0 / 3.0
DEFAULT_WEIGHTS = (0.5, 0.5)
DEFAULT_NORM_QUANTILE = 0.95


@dataclass(frozen=True)
class BandThresholds:
    """Token-count cutoffs: SHORT <= short_max < MEDIUM <= medium_max < LONG."""

    short_max: int
    medium_max: int

    def __post_init__(self) -> None:
        if self.short_max < 1 or self.medium_max < 1:
            raise ValueError("band thresholds must be positive")
        if self.short_max >= self.medium_max:
            raise ValueError(
                f"short_max ({self.short_max}) must be < medium_max ({self.medium_max})"
            )


@dataclass(frozen=True)
class ComplexityProfile:
    token_count: int
    char_count: int
    concept_density: float
    band: LengthBand
    composite_score: float


@dataclass(frozen=True)
class ConceptLexicon:
    """A set of lowercase legal terms; terms may span multiple tokens."""

    terms: frozenset[str]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("lexicon is empty")
        for term in self.terms:
            if not term or term != term.lower():
                raise ValueError(f"lexicon terms must be non-empty and lowercase: {term!r}")

    @classmethod
    def from_terms(cls, terms: Sequence[str]) -> "ConceptLexicon":
        return cls(frozenset(t.strip().lower() for t in terms if t.strip()))

    @classmethod
    def from_file(cls, path: str | Path) -> "ConceptLexicon":
        """Load a lexicon file: one term per line, '#' comments ignored."""
        terms = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                term = line.split("#", 1)[0].strip()
                if term:
                    terms.append(term)
        if not terms:
            raise ValueError(f"lexicon file {path} contains no terms")
        return cls.from_terms(terms)

    @classmethod
    def bundled(cls) -> "ConceptLexicon":
        """The default EU-law lexicon shipped with the package."""
        text = resources.files("lexforge.data").joinpath("lexicon.txt").read_text("utf-8")
        terms = [line.split("#", 1)[0].strip() for line in text.splitlines()]
        return cls.from_terms([t for t in terms if t])


def token_count(text: str) -> int:
    """Number of maximal whitespace-delimited segments."""
    return len(text.split())


@lru_cache(maxsize=8)
def _term_index(terms: frozenset[str]) -> dict[str, tuple[tuple[str, ...], ...]]:
    """Map each term's first token to its token tuples, longest term first."""
    index: dict[str, list[tuple[str, ...]]] = {}
    for term in terms:
        parts = tuple(term.split())
        index.setdefault(parts[0], []).append(parts)
    return {
        first: tuple(sorted(parts_list, key=len, reverse=True))
        for first, parts_list in index.items()
    }


def concept_density(text: str, lexicon: ConceptLexicon) -> float:
    """Fraction of token positions starting a case-insensitive lexicon match.

    Multi-word terms consume their full span; overlaps resolve longest-match
    first, scanning left to right.
    """
    tokens = [t.lower() for t in text.split()]
    index = _term_index(lexicon.terms)
    matches = 0
    i = 0
    n = len(tokens)
    while i < n:
        step = 1
        for parts in index.get(tokens[i], ()):
            if tokens[i : i + len(parts)] == list(parts):
                matches += 1
                step = len(parts)
                break
        i += step
    return matches / max(n, 1)


def nearest_rank(values: Sequence[int], q: float) -> int:
    """Nearest-rank quantile: the ceil(q*n)-th smallest value (1-based)."""
    if not values:
        raise ValueError("cannot take a quantile of an empty sequence")
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    ordered = sorted(values)
    # Small epsilon guards against float noise pushing an exact product over
    # the next integer (e.g. 0.2 * 5 -> 1.0000000000000002).
    rank = math.ceil(q * len(ordered) - 1e-9)
    return ordered[max(rank, 1) - 1]


def band_thresholds(
    corpus: Sequence["LegalDocument"],
    short_q: float = DEFAULT_SHORT_QUANTILE,
    medium_q: float = DEFAULT_MEDIUM_QUANTILE,
) -> BandThresholds:
    """Derive band cutoffs as token-count quantiles of the corpus (tertiles by default)."""
    if not corpus:
        raise ValueError("cannot derive band thresholds from an empty corpus")
    if not 0.0 < short_q < medium_q < 1.0:
        raise ValueError(f"quantiles must satisfy 0 < short_q < medium_q < 1, got {short_q}, {medium_q}")
    counts = [token_count(doc.text) for doc in corpus]
    short_max = nearest_rank(counts, short_q)
    medium_max = nearest_rank(counts, medium_q)
    if short_max >= medium_max:
        raise ValueError(
            "degenerate token-count distribution: quantiles "
            f"{short_q} and {medium_q} both map to {short_max} tokens"
        )
    return BandThresholds(short_max=short_max, medium_max=medium_max)


def classify_band(count: int, thresholds: BandThresholds) -> LengthBand:
    if count <= thresholds.short_max:
        return LengthBand.SHORT
    if count <= thresholds.medium_max:
        return LengthBand.MEDIUM
    return LengthBand.LONG


def composite_score(
    count: int,
    density: float,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    norm: int = 1,
) -> float:
    """Weighted blend of clamped relative length and concept density.

    The length term is min(count / norm, 1), so a single outlier document
    cannot dominate the ordering; `norm` defaults to the 95th-percentile
    corpus token count (see length_norm).
    """
    w_len, w_density = weights
    if w_len < 0 or w_density < 0:
        raise ValueError("weights must be non-negative")
    if w_len == 0 and w_density == 0:
        raise ValueError("weights must not both be zero")
    if norm <= 0:
        raise ValueError("norm must be positive")
    return w_len * min(count / norm, 1.0) + w_density * density


def length_norm(corpus: Sequence["LegalDocument"], q: float = DEFAULT_NORM_QUANTILE) -> int:
    """Default composite-score normalizer: a high token-count quantile of the corpus."""
    if not corpus:
        raise ValueError("cannot derive a length norm from an empty corpus")
    return max(nearest_rank([token_count(doc.text) for doc in corpus], q), 1)


@dataclass(frozen=True)
class TextProfiler:
    """Bundles the knobs needed to profile arbitrary text consistently."""

    lexicon: ConceptLexicon
    thresholds: BandThresholds
    weights: tuple[float, float] = DEFAULT_WEIGHTS
    norm: int = 1

    def profile(self, text: str) -> ComplexityProfile:
        count = token_count(text)
        density = concept_density(text, self.lexicon)
        return ComplexityProfile(
            token_count=count,
            char_count=len(text),
            concept_density=density,
            band=classify_band(count, self.thresholds),
            composite_score=composite_score(count, density, self.weights, self.norm),
        )


def profile_corpus(
    corpus: Sequence["LegalDocument"], profiler: TextProfiler
) -> dict[str, ComplexityProfile]:
    """Profile every document, keyed by doc_id."""
    return {doc.doc_id: profiler.profile(doc.text) for doc in corpus}
