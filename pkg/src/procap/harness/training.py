"""Seeded training and evaluation of the two heads."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import torch

from ..classify import Demo, ScorePair, build_head, load_checkpoint, predict, save_checkpoint
from ..classify.prompt import LabelWords
from ..dataset import HATEFUL, NON_HATEFUL, Dataset, MemeRecord
from ..errors import ConfigError, MissingCaptionError, NonFiniteLossError
from ..probing import ProCap, augment_tags, fit_text, render_procap
from ..tokenization import HFTokenizer, WordTokenizer
from .config import RunConfig
from .metrics import LOSSES, SeedResult, accuracy, aggregate_runs, auc_roc, one_hot

log = logging.getLogger(__name__)

EVAL_BATCH = 64


def counting_tokenizer(config: RunConfig):
    """Tokenizer that measures caption budgets (the classifier's own)."""
    if config.backbone == "stub":
        return WordTokenizer(max_length=config.max_length)
    return HFTokenizer(config.backbone, max_length=config.max_length)


def prepare_inputs(records: Sequence[MemeRecord], procaps: Mapping[str, ProCap], tokenizer,
                   config: RunConfig) -> tuple[list[str], list[str]]:
    """(meme text, caption) pairs with budgets and optional tag padding applied."""
    texts, captions = [], []
    for r in records:
        procap = procaps.get(r.id)
        if procap is None:
            raise MissingCaptionError(f"no caption for meme {r.id!r}")
        text = fit_text(r.text, tokenizer, config.joint_budget)
        caption = render_procap(procap, tokenizer, text, config.joint_budget, config.per_answer_budget)
        if config.use_tags:
            caption = augment_tags(caption, r.tags)
        texts.append(text)
        captions.append(caption)
    return texts, captions


def choose_demos(records: Sequence[MemeRecord], captions: Sequence[str], texts: Sequence[str],
                 seed: int) -> tuple[Demo, Demo]:
    """One non-hateful and one hateful training meme, uniform per seed."""
    rng = np.random.default_rng(seed)
    picked = []
    for label in (NON_HATEFUL, HATEFUL):
        idx = [i for i, r in enumerate(records) if r.label == label]
        if not idx:
            raise ConfigError(f"training set has no memes with label {label}; cannot build demonstrations")
        i = idx[int(rng.integers(len(idx)))]
        picked.append(Demo(texts[i], captions[i], label, records[i].id))
    return picked[0], picked[1]


@dataclass
class TrainedModel:
    config: RunConfig
    seed: int
    model: torch.nn.Module
    tokenizer: object
    demos: Optional[tuple[Demo, Demo]] = None
    loss_history: list[float] = field(default_factory=list)
    train_accuracy: Optional[float] = None

    @property
    def final_loss(self) -> Optional[float]:
        return self.loss_history[-1] if self.loss_history else None

    def scores(self, texts: Sequence[str], captions: Sequence[str]) -> list[ScorePair]:
        self.model.eval()
        out = []
        with torch.no_grad():
            for start in range(0, len(texts), EVAL_BATCH):
                s = self.model(texts[start:start + EVAL_BATCH], captions[start:start + EVAL_BATCH]).double()
                out.extend(ScorePair(float(a), float(b)) for a, b in s.tolist())
        return out

    def descriptor(self) -> dict:
        return {
            "head": self.config.head,
            "backbone": self.config.backbone,
            "encoder_dim": self.config.encoder_dim,
            "label_words": list(self.config.label_words),
            "template": self.config.template,
            "dropout": self.config.dropout,
            "seed": self.seed,
            "demos": [asdict(d) for d in self.demos] if self.demos else None,
            "config": self.config.to_dict(),
            "loss_history": self.loss_history,
            "train_accuracy": self.train_accuracy,
        }

    def save(self, directory) -> Path:
        return save_checkpoint(self.model, self.tokenizer, directory, self.descriptor())

    @classmethod
    def load(cls, directory) -> "TrainedModel":
        model, tokenizer, desc = load_checkpoint(directory)
        demos = tuple(Demo(**d) for d in desc["demos"]) if desc.get("demos") else None
        return cls(RunConfig.from_dict(desc["config"]), desc["seed"], model, tokenizer, demos,
                   list(desc.get("loss_history") or []), desc.get("train_accuracy"))


def _fit_tokenizer(config: RunConfig, texts, captions):
    if config.backbone != "stub":
        return HFTokenizer(config.backbone, max_length=config.max_length)
    corpus = list(texts) + list(captions) + [config.template, *config.label_words]
    return WordTokenizer.fit(corpus, max_length=config.max_length)


def train(config: RunConfig, train_set: Dataset | Sequence[MemeRecord], procaps: Mapping[str, ProCap],
          seed: Optional[int] = None) -> TrainedModel:
    """AdamW on the mean training loss (``config.loss``).

    Data order and initialisation depend only on ``seed``; each epoch is
    shuffled with a generator keyed on ``(seed, epoch)``.
    """
    seed = config.seeds[0] if seed is None else int(seed)
    records = list(train_set)
    if any(r.label is None for r in records):
        raise ConfigError("training records must be labelled")
    counter = counting_tokenizer(config)
    texts, captions = prepare_inputs(records, procaps, counter, config)
    tokenizer = _fit_tokenizer(config, texts, captions)
    demos = choose_demos(records, captions, texts, seed) if config.head == "prompt" else None

    torch.manual_seed(seed)
    model = build_head(config.head, tokenizer, config.backbone, config.encoder_dim, seed, config.dropout,
                       demos, LabelWords(*config.label_words), config.template)
    dtype = next(model.parameters()).dtype
    targets = torch.as_tensor(one_hot([r.label for r in records]), dtype=dtype)
    loss_fn = LOSSES[config.loss]
    opt = torch.optim.AdamW(model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)

    history = []
    n = len(records)
    for epoch in range(config.epochs):
        model.train()
        order = np.random.default_rng([seed, epoch]).permutation(n)
        total = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size].tolist()
            s = model([texts[i] for i in idx], [captions[i] for i in idx])
            loss = loss_fn(s, targets[idx])
            if not torch.isfinite(loss):
                raise NonFiniteLossError(f"non-finite loss {loss.item()} at epoch {epoch}, step {step} "
                                         f"(seed {seed}, lr {config.learning_rate})")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        history.append(total / max(n, 1))
        log.debug("seed %d epoch %d loss %.6f", seed, epoch, history[-1])

    trained = TrainedModel(config, seed, model, tokenizer, demos, history)
    if n:
        preds = [predict(s) for s in trained.scores(texts, captions)]
        trained.train_accuracy = accuracy(preds, [r.label for r in records])
    return trained


def evaluate(model: TrainedModel, test_set: Dataset | Sequence[MemeRecord],
             procaps: Mapping[str, ProCap]) -> tuple[list[ScorePair], list[int]]:
    records = list(test_set)
    if not records:
        return [], []
    texts, captions = prepare_inputs(records, procaps, counting_tokenizer(model.config), model.config)
    scores = model.scores(texts, captions)
    return scores, [predict(s) for s in scores]


def run_seeds(config: RunConfig, train_set, test_set, train_procaps: Mapping[str, ProCap],
              test_procaps: Optional[Mapping[str, ProCap]] = None, checkpoint_dir=None):
    """Train and evaluate once per configured seed; returns the aggregated report."""
    test_procaps = train_procaps if test_procaps is None else test_procaps
    labels = [r.label for r in test_set]
    results = []
    for seed in config.seeds:
        trained = train(config, train_set, train_procaps, seed=seed)
        if checkpoint_dir is not None:
            trained.save(Path(checkpoint_dir) / f"seed_{seed}")
        scores, preds = evaluate(trained, test_set, test_procaps)
        results.append(SeedResult(seed, auc_roc([s.s1 for s in scores], labels), accuracy(preds, labels),
                                  trained.train_accuracy, trained.final_loss))
        log.info("seed %d: auc %.4f acc %.4f (train acc %.4f)", seed, results[-1].auc,
                 results[-1].accuracy, trained.train_accuracy or math.nan)
    return aggregate_runs(results, config.fingerprint, config.to_dict())
