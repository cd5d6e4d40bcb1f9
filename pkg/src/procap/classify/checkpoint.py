"""Head construction and on-disk checkpoints.

A checkpoint directory holds ``weights.pt`` (state dict), ``tokenizer.json``
and ``descriptor.json``::

    {"head": "encoder" | "prompt", "backbone": "stub" | <hf model id>,
     "encoder_dim": d, "label_words": [pos, neg], "template": "It was [MASK].",
     "dropout": 0.4, "seed": 0, "demos": [...]}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import torch

from ..errors import ConfigError
from ..tokenization import load_tokenizer
from .encoder import DEFAULT_DROPOUT, EncoderHead, HFTextEncoder, StubTextEncoder
from .prompt import DEFAULT_TEMPLATE, Demo, HFMaskedLM, LabelWords, PromptHead, StubMaskedLM

HEADS = ("encoder", "prompt")


def build_head(head: str, tokenizer, backbone: str = "stub", dim: int = 32, seed: int = 0,
               dropout: float = DEFAULT_DROPOUT, demos: Optional[tuple[Demo, Demo]] = None,
               labels: LabelWords = LabelWords(), template: str = DEFAULT_TEMPLATE):
    """Fresh head. Stub backbones run in float64 so score paths are exact to 1e-9."""
    if head == "encoder":
        if backbone == "stub":
            model = EncoderHead(StubTextEncoder(tokenizer, dim, seed), dim, dropout, seed).double()
        else:
            enc = HFTextEncoder(backbone, max_length=tokenizer.max_length)
            model = EncoderHead(enc, enc.dim, dropout, seed)
        return model
    if head == "prompt":
        if demos is None:
            raise ConfigError("prompt head needs a (non-hateful, hateful) demonstration pair")
        lm = StubMaskedLM(tokenizer, dim, seed).double() if backbone == "stub" else HFMaskedLM(
            backbone, max_length=tokenizer.max_length)
        return PromptHead(lm, tokenizer, demos, labels, template)
    raise ConfigError(f"unknown head {head!r}; expected one of {HEADS}")


def save_checkpoint(model, tokenizer, directory, descriptor: dict) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out / "weights.pt")
    tokenizer.save(out / "tokenizer.json")
    (out / "descriptor.json").write_text(json.dumps(descriptor, indent=2, sort_keys=True), encoding="utf-8")
    return out


def load_checkpoint(directory):
    """Returns ``(model, tokenizer, descriptor)`` with the model in eval mode."""
    src = Path(directory)
    desc_path = src / "descriptor.json"
    if not desc_path.is_file():
        raise ConfigError(f"no checkpoint descriptor in {src}")
    desc = json.loads(desc_path.read_text(encoding="utf-8"))
    tokenizer = load_tokenizer(src / "tokenizer.json")
    demos = tuple(Demo(**d) for d in desc["demos"]) if desc.get("demos") else None
    model = build_head(desc["head"], tokenizer, desc.get("backbone", "stub"), desc["encoder_dim"],
                       desc.get("seed", 0), desc.get("dropout", DEFAULT_DROPOUT), demos,
                       LabelWords(*desc.get("label_words", ("good", "bad"))),
                       desc.get("template", DEFAULT_TEMPLATE))
    model.load_state_dict(torch.load(src / "weights.pt", weights_only=True))
    model.eval()
    return model, tokenizer, desc
