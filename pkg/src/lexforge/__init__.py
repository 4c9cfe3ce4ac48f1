"""LexForge: turn legal document corpora into curriculum-ordered fine-tuning datasets.

The pipeline stages, in order: ingest corpora, score complexity, sample
documents stratified by length band, generate synthetic QA pairs through a
rate-limited backend, merge real and synthetic examples, order them into a
staged curriculum, split without document leakage, and export JSONL manifests.
"""

__version__ = "0.1.0"
