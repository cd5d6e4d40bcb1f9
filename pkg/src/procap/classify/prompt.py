"""Prompt-based masked-LM head.

Every meme becomes ``[T, C, S]`` with ``S = "It was [MASK]."``. The test meme
is followed by one non-hateful and one hateful demonstration whose mask is
filled with the matching label word; the LM's sigmoid scores for the two
label words at the test mask are (s0, s1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import torch
from torch import nn

from ..errors import EnvelopeError, LabelWordError, SequenceOverflowError
from ..tokenization import MASK
from .encoder import pad_batch
from .scores import ScorePair

DEFAULT_TEMPLATE = "It was [MASK]."


@dataclass(frozen=True)
class LabelWords:
    positive: str = "good"
    negative: str = "bad"
    positive_token_id: Optional[int] = None
    negative_token_id: Optional[int] = None

    def resolve(self, tokenizer) -> "LabelWords":
        pos, neg = tokenizer.token_id(self.positive), tokenizer.token_id(self.negative)
        if pos == neg:
            raise LabelWordError(f"label words {self.positive!r} and {self.negative!r} share token id {pos}")
        return replace(self, positive_token_id=pos, negative_token_id=neg)

    @property
    def ids(self) -> tuple[int, int]:
        if self.positive_token_id is None or self.negative_token_id is None:
            raise LabelWordError("label words not resolved against a tokenizer")
        return self.positive_token_id, self.negative_token_id


@dataclass(frozen=True)
class Demo:
    """A labelled training meme rendered into the prompt context."""

    text: str
    caption: Optional[str]
    label: int
    meme_id: str = ""


@dataclass(frozen=True)
class PromptEnvelope:
    test_block: str
    demo_nonhate: str
    demo_hate: str
    separator: str
    input_ids: tuple[int, ...]
    mask_index: int

    @property
    def blocks(self) -> tuple[str, str, str]:
        return self.test_block, self.demo_nonhate, self.demo_hate

    @property
    def text(self) -> str:
        return self.separator.join(self.blocks)


def _block(text: str, caption: str, tail: str) -> str:
    return " ".join(p for p in (text.strip(), caption.strip(), tail) if p)


def build_envelope(text: str, caption: str, template: str, demos: tuple[Demo, Demo], labels: LabelWords,
                   tokenizer) -> PromptEnvelope:
    if template.count(MASK) != 1:
        raise EnvelopeError(f"template {template!r} must contain exactly one {MASK}")
    nonhate, hate = demos
    if nonhate.label != 0 or hate.label != 1:
        raise EnvelopeError("demonstrations must be (non-hateful, hateful)")
    for d in demos:
        if d.caption is None:
            raise EnvelopeError(f"demonstration {d.meme_id or d.text!r} has no caption")
    for part in (text, caption, nonhate.text, nonhate.caption, hate.text, hate.caption):
        if MASK in part:
            raise EnvelopeError(f"input text contains a literal {MASK}")
    test_block = _block(text, caption, template)
    demo_nonhate = _block(nonhate.text, nonhate.caption, template.replace(MASK, labels.positive))
    demo_hate = _block(hate.text, hate.caption, template.replace(MASK, labels.negative))
    sep = f" {tokenizer.sep_token} " if getattr(tokenizer, "sep_token", None) else " "
    joined = sep.join((test_block, demo_nonhate, demo_hate)).replace(MASK, tokenizer.mask_token)
    ids = tokenizer.encode(joined)
    positions = [i for i, t in enumerate(ids) if t == tokenizer.mask_id]
    if len(positions) != 1:
        raise EnvelopeError(f"envelope tokenizes to {len(positions)} mask tokens, expected 1")
    if len(ids) > tokenizer.max_length:
        raise SequenceOverflowError(f"envelope is {len(ids)} tokens, LM window is {tokenizer.max_length}")
    return PromptEnvelope(test_block, demo_nonhate, demo_hate, sep, tuple(ids), positions[0])


class StubMaskedLM(nn.Module):
    """Embedding + sequence-context mixer + vocabulary projection."""

    def __init__(self, tokenizer, dim: int = 32, seed: int = 0):
        super().__init__()
        self.tokenizer = tokenizer
        self.dim = dim
        V = tokenizer.vocab_size
        self.embed = nn.Embedding(V, dim, padding_idx=tokenizer.pad_id)
        self.mix = nn.Linear(dim, dim)
        self.out = nn.Linear(dim, V)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            self.embed.weight.copy_(torch.randn(V, dim, generator=gen) * 0.5)
            self.embed.weight[tokenizer.pad_id].zero_()
            for lin in (self.mix, self.out):
                bound = lin.in_features ** -0.5
                lin.weight.uniform_(-bound, bound, generator=gen)
                lin.bias.zero_()

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        h = self.embed(input_ids) * attention_mask.unsqueeze(-1)
        ctx = h.sum(1, keepdim=True) / attention_mask.sum(1, keepdim=True).unsqueeze(-1).clamp(min=1)
        return self.out(torch.tanh(h + self.mix(ctx)))


class HFMaskedLM(nn.Module):
    def __init__(self, model_name: str, max_length: int = 512):
        super().__init__()
        from transformers import AutoModelForMaskedLM

        from ..tokenization import HFTokenizer

        self.tokenizer = HFTokenizer(model_name, max_length=max_length)
        self.model = AutoModelForMaskedLM.from_pretrained(model_name)

    def forward(self, input_ids, attention_mask):
        return self.model(input_ids=input_ids, attention_mask=attention_mask.long()).logits


def prompt_scores(lm: nn.Module, env: PromptEnvelope, labels: LabelWords) -> ScorePair:
    pos, neg = labels.ids
    was_training = lm.training
    lm.eval()
    try:
        with torch.no_grad():
            ids = torch.as_tensor([env.input_ids], dtype=torch.long)
            logits = lm(ids, torch.ones_like(ids, dtype=torch.bool))[0, env.mask_index]
            p = torch.sigmoid(logits.double())
    finally:
        lm.train(was_training)
    return ScorePair(float(p[pos]), float(p[neg]))


class PromptHead(nn.Module):
    """Batched scorer over envelopes sharing one fixed pair of demonstrations."""

    def __init__(self, lm: nn.Module, tokenizer, demos: tuple[Demo, Demo], labels: LabelWords = LabelWords(),
                 template: str = DEFAULT_TEMPLATE):
        super().__init__()
        self.lm = lm
        self.tokenizer = tokenizer
        self.demos = demos
        self.labels = labels.resolve(tokenizer)
        self.template = template

    def envelopes(self, texts: Sequence[str], captions: Sequence[str]) -> list[PromptEnvelope]:
        return [build_envelope(t, c, self.template, self.demos, self.labels, self.tokenizer)
                for t, c in zip(texts, captions)]

    def forward(self, texts: Sequence[str], captions: Sequence[str]) -> torch.Tensor:
        envs = self.envelopes(texts, captions)
        ids, mask = pad_batch([e.input_ids for e in envs], self.tokenizer.pad_id)
        logits = self.lm(ids, mask)
        rows = torch.arange(len(envs))
        at_mask = logits[rows, torch.as_tensor([e.mask_index for e in envs])]
        return torch.sigmoid(at_mask[:, list(self.labels.ids)])
