"""Shared fixture builders for the test suite."""

import json
import random

from lexforge.corpus import LegalDocument, Source


def eurlex_doc(doc_id: str, n_tokens: int, labels=(1, 2), word: str = "clause") -> LegalDocument:
    return LegalDocument(
        doc_id=doc_id,
        source=Source.EURLEX,
        text=" ".join(f"{word}{i}" for i in range(n_tokens)),
        labels=tuple(labels),
    )


def eurlex_sum_doc(doc_id: str, n_tokens: int, celex_id: str = "32000X0001") -> LegalDocument:
    return LegalDocument(
        doc_id=doc_id,
        source=Source.EURLEX_SUM,
        text=" ".join(f"w{i}" for i in range(n_tokens)),
        summary=f"summary of {doc_id}",
        celex_id=celex_id,
    )


def write_corpus_file(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def mixed_corpus(n_eurlex: int, n_eurlex_sum: int, seed: int = 0, max_tokens: int = 400):
    """Synthetic two-source corpus with varied lengths, no duplicate ids."""
    rng = random.Random(seed)
    docs = []
    for i in range(n_eurlex):
        docs.append(eurlex_doc(f"lex{i:04d}", rng.randint(5, max_tokens), labels=(i % 7, 50 + i % 3)))
    for i in range(n_eurlex_sum):
        docs.append(eurlex_sum_doc(f"sum{i:04d}", rng.randint(5, max_tokens), celex_id=f"3199{i:04d}"))
    return docs
