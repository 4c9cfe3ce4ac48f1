"""A tiny causal LM stand-in plus LoRA injection.

The block layout mirrors the projection names the training config targets
(q_proj, k_proj, v_proj, o_proj, gate_proj, up_proj, down_proj), so the
configured `target_modules` list applies verbatim. The model is desk-scale
on purpose: the adapter's contract (ordering, schedules, logging) is what
gets exercised, not the capacity of a production base model.
"""

from __future__ import annotations

import math

import torch
from torch import nn

# Byte-level vocabulary: 0..255 raw bytes plus specials.
PAD_ID = 256
BOS_ID = 257
EOS_ID = 258
VOCAB_SIZE = 259


class SelfAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        if d_model % n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.q_proj = nn.Linear(d_model, d_model, bias=False)
        self.k_proj = nn.Linear(d_model, d_model, bias=False)
        self.v_proj = nn.Linear(d_model, d_model, bias=False)
        self.o_proj = nn.Linear(d_model, d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, seq, d_model = x.shape
        shape = (batch, seq, self.n_heads, self.head_dim)
        q = self.q_proj(x).view(shape).transpose(1, 2)
        k = self.k_proj(x).view(shape).transpose(1, 2)
        v = self.v_proj(x).view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        mask = torch.triu(torch.ones(seq, seq, dtype=torch.bool, device=x.device), diagonal=1)
        scores = scores.masked_fill(mask, float("-inf"))
        out = torch.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(batch, seq, d_model)
        return self.o_proj(out)


class GatedMlp(nn.Module):
    def __init__(self, d_model: int, d_ff: int):
        super().__init__()
        self.gate_proj = nn.Linear(d_model, d_ff, bias=False)
        self.up_proj = nn.Linear(d_model, d_ff, bias=False)
        self.down_proj = nn.Linear(d_ff, d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.down_proj(torch.nn.functional.silu(self.gate_proj(x)) * self.up_proj(x))


class Block(nn.Module):
    def __init__(self, d_model: int, n_heads: int, d_ff: int):
        super().__init__()
        self.attn_norm = nn.LayerNorm(d_model)
        self.attn = SelfAttention(d_model, n_heads)
        self.mlp_norm = nn.LayerNorm(d_model)
        self.mlp = GatedMlp(d_model, d_ff)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.attn_norm(x))
        return x + self.mlp(self.mlp_norm(x))


class TinyCausalLM(nn.Module):
    """Byte-level decoder-only LM used as the test-scale base model."""

    def __init__(self, d_model: int = 64, n_heads: int = 2, n_layers: int = 2, d_ff: int = 128):
        super().__init__()
        self.embed = nn.Embedding(VOCAB_SIZE, d_model)
        self.blocks = nn.ModuleList(Block(d_model, n_heads, d_ff) for _ in range(n_layers))
        self.final_norm = nn.LayerNorm(d_model)
        self.lm_head = nn.Linear(d_model, VOCAB_SIZE, bias=False)

    def forward(self, input_ids: torch.Tensor) -> torch.Tensor:
        x = self.embed(input_ids)
        for block in self.blocks:
            x = block(x)
        return self.lm_head(self.final_norm(x))

    def loss(self, input_ids: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
        logits = self.forward(input_ids)
        return nn.functional.cross_entropy(
            logits[:, :-1].reshape(-1, VOCAB_SIZE),
            labels[:, 1:].reshape(-1),
            ignore_index=-100,
        )


class LoraLinear(nn.Module):
    """A frozen linear layer plus a trainable low-rank update.

    forward(x) = base(x) + (alpha / r) * dropout(x) @ A^T @ B^T, with A
    Gaussian-initialized and B zero-initialized so training starts at the
    base model's function.
    """

    def __init__(self, base: nn.Linear, rank: int, alpha: int, dropout: float):
        super().__init__()
        self.base = base
        for param in self.base.parameters():
            param.requires_grad = False
        self.lora_a = nn.Parameter(torch.randn(rank, base.in_features) * 0.01)
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        self.scaling = alpha / rank
        self.dropout = nn.Dropout(dropout) if dropout > 0 else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + self.dropout(x) @ self.lora_a.T @ self.lora_b.T * self.scaling


def apply_lora(
    model: nn.Module, target_modules: list[str], rank: int, alpha: int, dropout: float
) -> int:
    """Freeze the model and wrap every targeted linear; returns wrap count."""
    for param in model.parameters():
        param.requires_grad = False
    wrapped = 0
    for module in list(model.modules()):
        for name, child in list(module.named_children()):
            if name in target_modules and isinstance(child, nn.Linear):
                setattr(module, name, LoraLinear(child, rank, alpha, dropout))
                wrapped += 1
    if wrapped == 0:
        raise ValueError(f"no modules matched target_modules {target_modules}")
    return wrapped


def lora_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {
        name: tensor
        for name, tensor in model.state_dict().items()
        if "lora_a" in name or "lora_b" in name
    }


def trainable_parameters(model: nn.Module):
    return [p for p in model.parameters() if p.requires_grad]


def resolve_model(model_id: str, seed: int = 0) -> TinyCausalLM:
    """Resolve a base-model identifier.

    Only the built-in `tiny` stand-in is resolvable here; production model
    ids (multi-billion-parameter checkpoints) are out of desk-scale reach and
    reported as unresolvable rather than silently substituted.
    """
    if model_id != "tiny":
        raise ValueError(
            f"cannot resolve base model {model_id!r}: only the 'tiny' stand-in "
            "is available in this adapter (pass --model tiny)"
        )
    torch.manual_seed(seed)
    return TinyCausalLM()
