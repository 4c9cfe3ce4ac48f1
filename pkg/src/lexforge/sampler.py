"""Stratified, seeded document sampling that preserves length-band proportions.

Allocation uses largest-remainder (Hamilton) apportionment: each stratum gets
the floor of its exact quota, then the leftover units go to the largest
fractional remainders, ties broken by band order SHORT < MEDIUM < LONG.
Randomness comes exclusively from an explicit seed driving `random.Random`
(CPython's Mersenne Twister), so identical inputs reproduce identical samples
across runs and platforms.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from lexforge.complexity import BAND_ORDER, ComplexityProfile, LengthBand
from lexforge.corpus import LegalDocument


@dataclass(frozen=True)
class StrataAllocation:
    per_band: Mapping[LengthBand, int]

    def total(self) -> int:
        return sum(self.per_band.values())


def largest_remainder(proportions: Sequence[float], n: int) -> list[int]:
    """Apportion n units across proportions; ties go to the lower index."""
    if n < 0:
        raise ValueError("cannot apportion a negative total")
    quotas = [p * n for p in proportions]
    counts = [math.floor(q) for q in quotas]
    leftover = n - sum(counts)
    remainders = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in remainders[:leftover]:
        counts[i] += 1
    return counts


def allocate(proportions: Mapping[LengthBand, float], n: int) -> StrataAllocation:
    """Largest-remainder apportionment of n across the three bands."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    values = [proportions.get(band, 0.0) for band in BAND_ORDER]
    if any(v < 0 for v in values):
        raise ValueError("proportions must be non-negative")
    if abs(sum(values) - 1.0) > 1e-9:
        raise ValueError(f"proportions must sum to 1, got {sum(values)}")
    counts = largest_remainder(values, n)
    return StrataAllocation(per_band=dict(zip(BAND_ORDER, counts)))


def band_proportions(
    corpus: Sequence[LegalDocument], profiles: Mapping[str, ComplexityProfile]
) -> dict[LengthBand, float]:
    """Fraction of documents in each band; requires a profile per document."""
    if not corpus:
        raise ValueError("corpus is empty")
    counts = {band: 0 for band in BAND_ORDER}
    for doc in corpus:
        counts[_profile_for(doc, profiles).band] += 1
    return {band: counts[band] / len(corpus) for band in BAND_ORDER}


def _profile_for(
    doc: LegalDocument, profiles: Mapping[str, ComplexityProfile]
) -> ComplexityProfile:
    try:
        return profiles[doc.doc_id]
    except KeyError:
        raise ValueError(f"no complexity profile for document {doc.doc_id!r}") from None


def stratified_sample(
    corpus: Sequence[LegalDocument],
    profiles: Mapping[str, ComplexityProfile],
    n: int,
    seed: int,
    proportions: Mapping[LengthBand, float] | None = None,
) -> list[LegalDocument]:
    """Draw n documents matching the target band proportions.

    Target counts come from largest-remainder allocation (defaults to the
    corpus's own band proportions), capped by band availability; any deficit
    is reassigned among bands with spare capacity, again by largest remainder
    over the renormalized target proportions. Within a band the draw is a
    seeded uniform sample without replacement. The result is sorted by doc_id.
    """
    if n < 1:
        raise ValueError("sample size must be at least 1")
    if n > len(corpus):
        raise ValueError(f"sample size {n} exceeds corpus size {len(corpus)}")
    by_band: dict[LengthBand, list[LegalDocument]] = {band: [] for band in BAND_ORDER}
    for doc in corpus:
        by_band[_profile_for(doc, profiles).band].append(doc)
    for docs in by_band.values():
        docs.sort(key=lambda d: d.doc_id)

    props = dict(proportions) if proportions is not None else band_proportions(corpus, profiles)
    target = allocate(props, n).per_band
    counts = {band: min(target[band], len(by_band[band])) for band in BAND_ORDER}
    remaining = n - sum(counts.values())
    while remaining > 0:
        spare = [b for b in BAND_ORDER if counts[b] < len(by_band[b])]
        weights = {b: props.get(b, 0.0) for b in spare}
        total = sum(weights.values())
        if total <= 0.0:
            weights = {b: 1.0 for b in spare}
            total = float(len(spare))
        extra = largest_remainder([weights[b] / total for b in spare], remaining)
        for band, want in zip(spare, extra):
            take = min(want, len(by_band[band]) - counts[band])
            counts[band] += take
            remaining -= take

    rng = random.Random(seed)
    chosen: list[LegalDocument] = []
    for band in BAND_ORDER:
        if counts[band]:
            chosen.extend(rng.sample(by_band[band], counts[band]))
    chosen.sort(key=lambda d: d.doc_id)
    return chosen
