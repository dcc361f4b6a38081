"""Fitting the language model on an encoded-record corpus.

Training minimizes token-level negative log-likelihood for exactly the
configured number of epochs; the epoch count is the knob controlling how
strongly the model aligns with the corpus. Artifacts are plain directories:
weights, tokenizer, config, and a per-epoch loss log.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .model import CausalLM, ModelConfig
from .tokenizer import EOS, PAD, WordTokenizer

__all__ = ["AdapterConfig", "CorpusUnreadable", "TrainingDiverged", "fit_lm", "load_artifact"]

# corpus lines must look like clause-template sentences; checked on a prefix
# of the file before any training time is spent
_LINE_SHAPE = re.compile(r"^The respondent's .+ is .+\.$")
_SPOT_CHECK_LINES = 100


class CorpusUnreadable(ValueError):
    """Corpus file missing, empty, or not in the encoded-record format."""


class TrainingDiverged(RuntimeError):
    """Loss stopped being finite."""


@dataclass
class AdapterConfig:
    corpus_path: str
    out_dir: str
    base_model: str = "tiny-causal-scratch"
    epochs: int = 20
    learning_rate: float = 3e-3
    batch_size: int = 32
    temperature: float = 1.0
    device: str = "cpu"
    seed: int = 0
    d_model: int = 128
    n_heads: int = 4
    n_layers: int = 2

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)


def load_corpus(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise CorpusUnreadable(f"corpus file not found: {path}")
    lines = [l.rstrip("\r\n") for l in path.read_text(encoding="utf-8").splitlines()]
    lines = [l for l in lines if l]
    if not lines:
        raise CorpusUnreadable(f"corpus is empty: {path}")
    for i, line in enumerate(lines[:_SPOT_CHECK_LINES], start=1):
        if not _LINE_SHAPE.match(line):
            raise CorpusUnreadable(f"line {i} does not match the encoded-record shape: {line[:80]!r}")
    return lines


def _batches(sequences: list[list[int]], batch_size: int, rng: np.random.Generator):
    order = rng.permutation(len(sequences))
    for start in range(0, len(order), batch_size):
        chunk = [sequences[i] for i in order[start : start + batch_size]]
        width = max(len(s) for s in chunk)
        batch = torch.full((len(chunk), width), PAD, dtype=torch.long)
        for row, seq in enumerate(chunk):
            batch[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        yield batch


def fit_lm(config: AdapterConfig) -> Path:
    """Train for exactly ``config.epochs`` epochs and write the artifact directory."""
    lines = load_corpus(config.corpus_path)
    tokenizer = WordTokenizer.fit(lines)
    sequences = [tokenizer.encode(line) for line in lines]
    longest = max(len(s) for s in sequences)
    max_len = min(1024, 4 * longest)

    torch.manual_seed(config.seed)
    model_config = ModelConfig(
        vocab_size=tokenizer.vocab_size,
        max_len=max_len,
        d_model=config.d_model,
        n_heads=config.n_heads,
        n_layers=config.n_layers,
    )
    device = torch.device(config.device)
    model = CausalLM(model_config).to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD)
    rng = np.random.default_rng(config.seed)

    epoch_losses: list[float] = []
    model.train()
    for _ in range(config.epochs):
        total, count = 0.0, 0
        for batch in _batches(sequences, config.batch_size, rng):
            batch = batch.to(device)
            logits = model(batch[:, :-1], pad_id=PAD)
            loss = loss_fn(logits.reshape(-1, logits.shape[-1]), batch[:, 1:].reshape(-1))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.item()) * batch.shape[0]
            count += batch.shape[0]
        mean_loss = total / count
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"epoch mean loss is {mean_loss}")
        epoch_losses.append(mean_loss)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out / "model.pt")
    tokenizer.save(out / "tokenizer.json")
    (out / "config.json").write_text(
        json.dumps(
            {
                "adapter": config.to_json(),
                "model": model_config.to_json(),
                "longest_line_tokens": longest,
                "max_new_tokens": 4 * longest,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    (out / "training_log.json").write_text(
        json.dumps({"epoch_mean_loss": epoch_losses}, indent=2), encoding="utf-8"
    )
    return out


def load_artifact(artifact_dir: str | Path):
    """Load (model, tokenizer, meta) from a fit_lm output directory."""
    artifact_dir = Path(artifact_dir)
    meta = json.loads((artifact_dir / "config.json").read_text(encoding="utf-8"))
    tokenizer = WordTokenizer.load(artifact_dir / "tokenizer.json")
    model = CausalLM(ModelConfig.from_json(meta["model"]))
    model.load_state_dict(torch.load(artifact_dir / "model.pt", weights_only=True))
    model.eval()
    return model, tokenizer, meta


@torch.no_grad()
def generate_batch(
    model: CausalLM,
    tokenizer: WordTokenizer,
    prompt: str,
    count: int,
    temperature: float,
    seed: int,
    max_new_tokens: int,
) -> list[str]:
    """Sample ``count`` completions of the prompt, stopping at the sentence
    terminator, end-of-sequence, or the length cap."""
    if count == 0:
        return []
    device = next(model.parameters()).device
    generator = torch.Generator(device="cpu").manual_seed(int(seed) & 0x7FFFFFFF)
    prompt_ids = tokenizer.encode(prompt, add_bos=True, add_eos=False)
    ids = torch.tensor([prompt_ids] * count, dtype=torch.long, device=device)
    alive = torch.ones(count, dtype=torch.bool)
    budget = min(max_new_tokens, model.config.max_len - len(prompt_ids) - 1)
    for _ in range(budget):
        logits = model(ids)[:, -1, :]
        probs = torch.softmax(logits / max(temperature, 1e-6), dim=-1)
        picks = torch.multinomial(probs.cpu(), 1, generator=generator).squeeze(1)
        picks = torch.where(alive, picks, torch.full_like(picks, EOS))
        ids = torch.cat([ids, picks.unsqueeze(1).to(device)], dim=1)
        for row in torch.nonzero(alive).squeeze(1).tolist():
            token = int(picks[row])
            if token == EOS or tokenizer.words[token].endswith("."):
                alive[row] = False
        if not alive.any():
            break
    return [tokenizer.decode(row.tolist()) for row in ids]
