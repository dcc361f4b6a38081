"""Word-level tokenizer over a training corpus.

Corpus lines are space-joined words (punctuation stays attached to words), so
splitting on single spaces is exactly reversible for the encoded-record
grammar. Specials: pad, bos, eos, unk.
"""

from __future__ import annotations

import json
from pathlib import Path

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ["<pad>", "<bos>", "<eos>", "<unk>"]


class WordTokenizer:
    def __init__(self, words: list[str]):
        self.words = SPECIALS + [w for w in words if w not in SPECIALS]
        self.index = {w: i for i, w in enumerate(self.words)}

    @classmethod
    def fit(cls, lines: list[str]) -> "WordTokenizer":
        seen: dict[str, None] = {}
        for line in lines:
            for word in line.split(" "):
                if word:
                    seen.setdefault(word, None)
        return cls(sorted(seen))

    @property
    def vocab_size(self) -> int:
        return len(self.words)

    def encode(self, text: str, add_bos: bool = True, add_eos: bool = True) -> list[int]:
        ids = [self.index.get(w, UNK) for w in text.split(" ") if w]
        if add_bos:
            ids = [BOS] + ids
        if add_eos:
            ids = ids + [EOS]
        return ids

    def decode(self, ids: list[int]) -> str:
        return " ".join(self.words[i] for i in ids if i >= len(SPECIALS))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"words": self.words[len(SPECIALS):]}), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordTokenizer":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(obj["words"])
