"""Fine-tuning adapter: consumes an exported curriculum manifest and training
config, runs a LoRA fine-tune on a configurable base model, and emits loss
logs in the pipeline's losslog schema."""

__version__ = "0.1.0"
