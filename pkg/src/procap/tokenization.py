"""Token counting, truncation and id encoding for the classifier inputs.

Caption length budgets are measured with the downstream classifier's
tokenizer. :class:`WordTokenizer` is the self-contained default used with the
stub models; :class:`HFTokenizer` adapts a Hugging Face fast tokenizer.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterable, Optional

from .errors import LabelWordError

MASK = "[MASK]"
PAD, UNK, SEP, CLS = "[PAD]", "[UNK]", "[SEP]", "[CLS]"
SPECIALS = (PAD, UNK, MASK, SEP, CLS)

_TOKEN_RE = re.compile(r"\[(?:MASK|SEP|CLS|PAD|UNK)\]|\w+|[^\w\s]", re.UNICODE)


class WordTokenizer:
    """Lower-cased word/punctuation tokenizer with a closed vocabulary.

    Counting and truncation do not depend on the vocabulary; encoding maps
    unknown words to ``[UNK]``.
    """

    mask_token = MASK
    sep_token = SEP

    def __init__(self, vocab: Optional[Iterable[str]] = None, max_length: int = 512):
        words = [w for w in (vocab or []) if w not in SPECIALS]
        self.itos = list(SPECIALS) + sorted(set(words))
        self.stoi = {w: i for i, w in enumerate(self.itos)}
        self.max_length = max_length

    @classmethod
    def fit(cls, texts: Iterable[str], max_length: int = 512) -> "WordTokenizer":
        vocab = set()
        for t in texts:
            vocab.update(cls.tokenize(t))
        return cls(vocab, max_length=max_length)

    @staticmethod
    def tokenize(text: str) -> list[str]:
        return [m.group(0).lower() if m.group(0) not in SPECIALS else m.group(0)
                for m in _TOKEN_RE.finditer(text)]

    def count(self, text: str) -> int:
        return sum(1 for _ in _TOKEN_RE.finditer(text))

    def truncate(self, text: str, n: int) -> str:
        """Longest prefix of ``text`` holding at most ``n`` tokens."""
        if n <= 0:
            return ""
        end = None
        for i, m in enumerate(_TOKEN_RE.finditer(text)):
            if i == n:
                return text[:end]
            end = m.end()
        return text

    @property
    def vocab_size(self) -> int:
        return len(self.itos)

    @property
    def pad_id(self) -> int:
        return self.stoi[PAD]

    @property
    def mask_id(self) -> int:
        return self.stoi[MASK]

    def encode(self, text: str) -> list[int]:
        unk = self.stoi[UNK]
        return [self.stoi.get(tok, unk) for tok in self.tokenize(text)]

    def token_id(self, word: str) -> int:
        toks = self.tokenize(word)
        if len(toks) != 1:
            raise LabelWordError(f"label word {word!r} is {len(toks)} tokens, expected exactly one")
        if toks[0] not in self.stoi:
            raise LabelWordError(f"label word {word!r} is not in the vocabulary")
        return self.stoi[toks[0]]

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({"kind": "word", "vocab": self.itos, "max_length": self.max_length}),
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WordTokenizer":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["vocab"], max_length=data["max_length"])


class HFTokenizer:
    """Adapter over a ``transformers`` fast tokenizer with offset mapping."""

    def __init__(self, name_or_tokenizer, max_length: Optional[int] = None):
        if isinstance(name_or_tokenizer, str):
            from transformers import AutoTokenizer

            self.tok = AutoTokenizer.from_pretrained(name_or_tokenizer, use_fast=True)
            self.name = name_or_tokenizer
        else:
            self.tok = name_or_tokenizer
            self.name = getattr(name_or_tokenizer, "name_or_path", "hf")
        self.max_length = max_length or min(int(self.tok.model_max_length), 512)
        self.mask_token = self.tok.mask_token
        self.sep_token = self.tok.sep_token

    def count(self, text: str) -> int:
        return len(self.tok(text, add_special_tokens=False)["input_ids"])

    def truncate(self, text: str, n: int) -> str:
        if n <= 0:
            return ""
        enc = self.tok(text, add_special_tokens=False, return_offsets_mapping=True)
        if len(enc["input_ids"]) <= n:
            return text
        return text[:enc["offset_mapping"][n - 1][1]]

    @property
    def vocab_size(self) -> int:
        return len(self.tok)

    @property
    def pad_id(self) -> int:
        return self.tok.pad_token_id

    @property
    def mask_id(self) -> int:
        return self.tok.mask_token_id

    def encode(self, text: str) -> list[int]:
        return self.tok(text, add_special_tokens=True)["input_ids"]

    def token_id(self, word: str) -> int:
        # BPE vocabularies store mid-sentence words with a leading space marker
        for candidate in (" " + word, word):
            ids = self.tok(candidate, add_special_tokens=False)["input_ids"]
            if len(ids) == 1:
                return ids[0]
        raise LabelWordError(f"label word {word!r} does not map to a single token")

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({"kind": "hf", "name": self.name, "max_length": self.max_length}),
                              encoding="utf-8")


def load_tokenizer(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data["kind"] == "word":
        return WordTokenizer(data["vocab"], max_length=data["max_length"])
    return HFTokenizer(data["name"], max_length=data["max_length"])
