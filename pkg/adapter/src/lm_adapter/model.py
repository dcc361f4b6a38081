"""Compact causal transformer language model.

No pretrained checkpoints are assumed: the model is small enough to train
from scratch on a few thousand corpus lines in minutes on a CPU.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass
class ModelConfig:
    vocab_size: int
    max_len: int
    d_model: int = 128
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    dropout: float = 0.1

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        return cls(**obj)


class CausalLM(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.tok_emb = nn.Embedding(config.vocab_size, config.d_model)
        self.pos_emb = nn.Embedding(config.max_len, config.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model,
            nhead=config.n_heads,
            dim_feedforward=config.d_ff,
            dropout=config.dropout,
            batch_first=True,
            norm_first=True,
        )
        self.blocks = nn.TransformerEncoder(
            layer, num_layers=config.n_layers, enable_nested_tensor=False
        )
        self.norm = nn.LayerNorm(config.d_model)
        self.head = nn.Linear(config.d_model, config.vocab_size)

    def forward(self, ids: torch.Tensor, pad_id: int | None = None) -> torch.Tensor:
        b, t = ids.shape
        if t > self.config.max_len:
            raise ValueError(f"sequence length {t} exceeds max_len {self.config.max_len}")
        positions = torch.arange(t, device=ids.device).unsqueeze(0)
        x = self.tok_emb(ids) + self.pos_emb(positions)
        causal = torch.triu(torch.ones(t, t, device=ids.device, dtype=torch.bool), diagonal=1)
        pad_mask = ids.eq(pad_id) if pad_id is not None else None
        x = self.blocks(x, mask=causal, src_key_padding_mask=pad_mask)
        return self.head(self.norm(x))
