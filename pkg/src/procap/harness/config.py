from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..classify.prompt import DEFAULT_TEMPLATE
from ..errors import ConfigError
from ..probing import DecodeParams, normalize_subset, select_bank
from ..probing.procap import JOINT_BUDGET, PER_ANSWER_BUDGET

ENCODER_LR = 2e-5
PROMPT_LR_FHM = 1.3e-5
PROMPT_LR = 1e-5
BATCH_SIZES = {"encoder": 64, "prompt": 16}


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a train/evaluate run. ``None`` fields take head-dependent defaults."""

    head: str = "encoder"
    dataset_name: str = ""
    learning_rate: Optional[float] = None
    batch_size: Optional[int] = None
    epochs: int = 10
    seeds: tuple[int, ...] = tuple(range(10))
    length_penalty: float = 1.0
    max_answer_tokens: int = 30
    question_subset: str = "all"
    use_tags: bool = False
    backbone: str = "stub"
    encoder_dim: int = 32
    dropout: float = 0.4
    weight_decay: float = 0.01
    loss: str = "bce"  # or "true-class", see harness.metrics.LOSSES
    joint_budget: int = JOINT_BUDGET
    per_answer_budget: int = PER_ANSWER_BUDGET
    label_words: tuple[str, str] = ("good", "bad")
    template: str = DEFAULT_TEMPLATE
    max_length: int = 512

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.head not in BATCH_SIZES:
            raise ConfigError(f"unknown head {self.head!r}")
        if self.learning_rate is None:
            if self.head == "encoder":
                lr = ENCODER_LR
            else:
                lr = PROMPT_LR_FHM if self.dataset_name.lower() == "fhm" else PROMPT_LR
            set_("learning_rate", lr)
        if self.batch_size is None:
            set_("batch_size", BATCH_SIZES[self.head])
        set_("seeds", tuple(int(s) for s in self.seeds))
        set_("label_words", tuple(self.label_words))
        set_("learning_rate", float(self.learning_rate))
        set_("length_penalty", float(self.length_penalty))
        try:
            set_("question_subset", normalize_subset(self.question_subset))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if not self.length_penalty > 0:
            raise ConfigError("length_penalty must be > 0")
        if self.joint_budget < 1 or self.per_answer_budget < 1:
            raise ConfigError("token budgets must be positive")
        if self.loss not in ("bce", "true-class"):
            raise ConfigError(f"unknown loss {self.loss!r}; expected 'bce' or 'true-class'")
        if len(self.label_words) != 2:
            raise ConfigError("label_words must be [positive, negative]")

    @property
    def decode_params(self) -> DecodeParams:
        return DecodeParams(self.length_penalty, self.max_answer_tokens)

    @property
    def bank(self):
        return select_bank(self.question_subset)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        d["label_words"] = list(self.label_words)
        return d

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
