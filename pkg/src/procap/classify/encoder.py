"""Sentence-encoder head: r = encoder([T, C]); s = sigmoid(W^T r + b)."""

from __future__ import annotations

from typing import Sequence

import torch
from torch import nn

from ..errors import DimensionMismatchError, ProCapError
from .scores import ScorePair

DEFAULT_DROPOUT = 0.4


def join_inputs(text: str, caption: str) -> str:
    return " ".join(p for p in (text.strip(), caption.strip()) if p)


def pad_batch(batch: Sequence[Sequence[int]], pad_id: int) -> tuple[torch.Tensor, torch.Tensor]:
    width = max((len(ids) for ids in batch), default=0) or 1
    ids = torch.full((len(batch), width), pad_id, dtype=torch.long)
    mask = torch.zeros((len(batch), width), dtype=torch.bool)
    for i, seq in enumerate(batch):
        ids[i, :len(seq)] = torch.as_tensor(list(seq), dtype=torch.long)
        mask[i, :len(seq)] = True
    return ids, mask


class StubTextEncoder(nn.Module):
    """Mean of learned word embeddings. Small, deterministic, CPU-only."""

    def __init__(self, tokenizer, dim: int = 32, seed: int = 0):
        super().__init__()
        self.tokenizer = tokenizer
        self.dim = dim
        self.embed = nn.Embedding(tokenizer.vocab_size, dim, padding_idx=tokenizer.pad_id)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            self.embed.weight.copy_(torch.randn(tokenizer.vocab_size, dim, generator=gen) * 0.5)
            self.embed.weight[tokenizer.pad_id].zero_()

    def forward(self, texts: Sequence[str]) -> torch.Tensor:
        ids, mask = pad_batch([self.tokenizer.encode(t) for t in texts], self.tokenizer.pad_id)
        vecs = self.embed(ids) * mask.unsqueeze(-1)
        return vecs.sum(1) / mask.sum(1, keepdim=True).clamp(min=1)


class HFTextEncoder(nn.Module):
    """[CLS] representation of a ``transformers`` encoder (e.g. bert-base-uncased)."""

    def __init__(self, model_name: str, max_length: int = 512):
        super().__init__()
        from transformers import AutoModel

        from ..tokenization import HFTokenizer

        self.tokenizer = HFTokenizer(model_name, max_length=max_length)
        self.model = AutoModel.from_pretrained(model_name)
        self.dim = self.model.config.hidden_size

    def forward(self, texts):
        enc = self.tokenizer.tok(list(texts), padding=True, truncation=True,
                                 max_length=self.tokenizer.max_length, return_tensors="pt")
        return self.model(**enc).last_hidden_state[:, 0]


class EncoderHead(nn.Module):
    def __init__(self, encoder: nn.Module, dim: int, dropout_rate: float = DEFAULT_DROPOUT, seed: int = 0):
        super().__init__()
        self.encoder = encoder
        self.dropout = nn.Dropout(dropout_rate)
        self.linear = nn.Linear(dim, 2)
        gen = torch.Generator().manual_seed(seed + 1)
        bound = dim ** -0.5
        with torch.no_grad():
            self.linear.weight.uniform_(-bound, bound, generator=gen)
            self.linear.bias.uniform_(-bound, bound, generator=gen)

    @property
    def W(self) -> torch.Tensor:
        """d x 2 weight matrix (the transpose of the linear layer's storage)."""
        return self.linear.weight.T

    @property
    def b(self) -> torch.Tensor:
        return self.linear.bias

    def forward(self, texts: Sequence[str], captions: Sequence[str]) -> torch.Tensor:
        try:
            r = self.encoder([join_inputs(t, c) for t, c in zip(texts, captions)])
        except DimensionMismatchError:
            raise
        except Exception as exc:
            raise ProCapError(f"encoder failed: {exc}") from exc
        if r.shape[-1] != self.linear.in_features:
            raise DimensionMismatchError(f"encoder output has dimension {r.shape[-1]}, "
                                         f"classification layer expects {self.linear.in_features}")
        return torch.sigmoid(self.linear(self.dropout(r)))


def encoder_scores(head: EncoderHead, text: str, caption: str) -> ScorePair:
    """Scores for one meme, always with dropout disabled."""
    was_training = head.training
    head.eval()
    try:
        with torch.no_grad():
            s = head([text], [caption])[0].double()
    finally:
        head.train(was_training)
    return ScorePair(float(s[0]), float(s[1]))
