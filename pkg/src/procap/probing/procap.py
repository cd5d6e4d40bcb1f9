"""Probe-captioning: ask the bank, gate on the validation answers, render C."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import BackendError, BackendProtocolError, MissingCaptionError
from .backends import CacheOnlyBackend, VQABackend, VQARequest
from .cache import AnswerCache, BufferedCache, CacheKey, CacheRow
from .questions import (
    ANIMAL_FOCI,
    CONTENT,
    FOCUS_ORDER,
    PERSON_FOCI,
    TARGET,
    VALIDATION,
    ProbingQuestion,
    build_prompt,
    check_bank,
    validate_presence,
)

log = logging.getLogger(__name__)

JOINT_BUDGET = 65
PER_ANSWER_BUDGET = 20

ImageSource = Union[np.ndarray, Callable[[], np.ndarray], None]


@dataclass(frozen=True)
class DecodeParams:
    length_penalty: float = 1.0
    max_answer_tokens: int = 30

    def __post_init__(self):
        if not self.length_penalty > 0:
            raise ValueError(f"length_penalty must be > 0, got {self.length_penalty}")
        if int(self.max_answer_tokens) < 1:
            raise ValueError("max_answer_tokens must be positive")

    @property
    def fingerprint(self) -> str:
        blob = json.dumps({"length_penalty": float(self.length_penalty),
                           "max_answer_tokens": int(self.max_answer_tokens)}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ProCap:
    meme_id: str
    answers: dict[str, str]
    person_present: bool = True
    animal_present: bool = True
    params_fingerprint: str = ""
    suppressed: frozenset = field(default_factory=frozenset)

    def retained(self) -> list[tuple[str, str]]:
        """(focus, answer) pairs that go into the caption, in bank order."""
        return [(f, self.answers[f]) for f in FOCUS_ORDER
                if f in self.answers and f not in self.suppressed and not f.startswith("val_")]


def _resolve_image(image: ImageSource):
    return image() if callable(image) else image


def ask(backend: VQABackend, image: ImageSource, question: ProbingQuestion, params: DecodeParams,
        meme_id: str, cache=None) -> str:
    """One VQA call, served from ``cache`` when the key is already there."""
    key = CacheKey(meme_id, question.focus, params.fingerprint)
    if cache is not None:
        row = cache.get(key)
        if row is not None and not row.suppressed:
            return row.answer
    try:
        pixels = _resolve_image(image) if backend.needs_image else None
        request = VQARequest(pixels, build_prompt(question), params.length_penalty, params.max_answer_tokens,
                             meme_id=meme_id, focus=question.focus)
        raw = backend.answer(request)
    except BackendError as exc:
        if exc.meme_id is None:
            raise type(exc)(str(exc), meme_id, question.focus) from exc
        raise
    except Exception as exc:
        raise BackendProtocolError(f"VQA backend failed: {exc}", meme_id, question.focus) from exc
    answer = raw.strip()
    if cache is not None:
        cache.put(CacheRow(meme_id, question.focus, params.fingerprint, answer, False))
    return answer


def generate_procap(meme_id: str, clean_image: ImageSource, bank: Sequence[ProbingQuestion],
                    backend: VQABackend, params: DecodeParams, cache=None) -> ProCap:
    """Validation questions first, then content, then the gated target questions."""
    check_bank(bank)
    by_role = {role: [q for q in bank if q.role == role] for role in (CONTENT, TARGET, VALIDATION)}
    answers: dict[str, str] = {}
    for q in by_role[VALIDATION]:
        answers[q.focus] = ask(backend, clean_image, q, params, meme_id, cache)
    person = validate_presence(answers["val_person"]) if "val_person" in answers else True
    animal = validate_presence(answers["val_animal"]) if "val_animal" in answers else True
    for q in by_role[CONTENT]:
        answers[q.focus] = ask(backend, clean_image, q, params, meme_id, cache)
    suppressed = set()
    for q in by_role[TARGET]:
        gated_off = (q.focus in PERSON_FOCI and not person) or (q.focus in ANIMAL_FOCI and not animal)
        if gated_off:
            suppressed.add(q.focus)
            answers[q.focus] = ""
            if cache is not None:
                cache.put(CacheRow(meme_id, q.focus, params.fingerprint, "", True))
        else:
            answers[q.focus] = ask(backend, clean_image, q, params, meme_id, cache)
    return ProCap(meme_id, answers, person, animal, params.fingerprint, frozenset(suppressed))


def _segment(answer: str, budget: int, tokenizer) -> str:
    """Answer as a period-terminated sentence of at most ``budget`` tokens."""
    answer = answer.strip()
    if not answer or budget <= 0:
        return ""
    seg = answer if answer.endswith(".") else answer + "."
    if tokenizer.count(seg) <= budget:
        return seg
    n = budget - 1
    while n > 0:
        cut = tokenizer.truncate(answer, n).rstrip()
        seg = cut if cut.endswith(".") else cut + "."
        if cut and tokenizer.count(seg) <= budget:
            return seg
        n -= 1
    return ""


def fit_text(text: str, tokenizer, joint_budget: int = JOINT_BUDGET) -> str:
    """Meme text cut to the joint budget, so the content caption can share it."""
    return tokenizer.truncate(text, joint_budget).rstrip() if tokenizer.count(text) > joint_budget else text


def render_procap(procap: ProCap, tokenizer, text: str = "", joint_budget: int = JOINT_BUDGET,
                  per_answer_budget: int = PER_ANSWER_BUDGET) -> str:
    """Concatenate the retained answers into the caption string C.

    The content answer gets whatever the meme text leaves of ``joint_budget``;
    each target answer is capped at ``per_answer_budget`` tokens. Budgets
    include the terminating period.
    """
    if joint_budget <= 0 or per_answer_budget <= 0:
        raise ValueError("budgets must be positive")
    parts = []
    for focus, answer in procap.retained():
        if focus == "content":
            budget = joint_budget - tokenizer.count(text)
        else:
            budget = per_answer_budget
        seg = _segment(answer, budget, tokenizer)
        if seg:
            parts.append(seg)
    return " ".join(parts)


def augment_tags(text: str, tags: Sequence[str]) -> str:
    tags = [t.strip() for t in tags if t and t.strip()]
    if not tags:
        return text
    return " ".join([text.strip(), *tags]).strip() if text.strip() else " ".join(tags)


@dataclass
class CaptionRun:
    procaps: dict[str, ProCap]
    failures: dict[str, str]
    backend_calls: int = 0


def caption_records(meme_ids: Sequence[str], images: Mapping[str, ImageSource], bank, backend: VQABackend,
                    params: DecodeParams, cache: AnswerCache, concurrency: int = 1) -> CaptionRun:
    """Generate Pro-Caps for many memes, continuing past individual failures.

    Up to ``concurrency`` memes are in flight; their new cache rows are
    committed in ``meme_ids`` order so the cache file is reproducible.
    """

    def work(mid):
        buf = BufferedCache(cache)
        try:
            return generate_procap(mid, images.get(mid), bank, backend, params, buf), buf, None
        except Exception as exc:  # reported per meme, batch continues
            return None, buf, exc

    procaps, failures = {}, {}
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        for mid, (procap, buf, exc) in zip(meme_ids, pool.map(work, meme_ids)):
            buf.commit()
            if exc is not None:
                log.warning("captioning failed for %s: %s", mid, exc)
                failures[mid] = f"{type(exc).__name__}: {exc}"
            else:
                procaps[mid] = procap
    return CaptionRun(procaps, failures)


def load_procaps(meme_ids: Sequence[str], bank, params: DecodeParams, cache) -> dict[str, ProCap]:
    """Rebuild Pro-Caps strictly from the cache; any gap is a missing caption."""
    backend = CacheOnlyBackend()
    out = {}
    for mid in meme_ids:
        try:
            out[mid] = generate_procap(mid, None, bank, backend, params, _ReadOnly(cache))
        except BackendError as exc:
            raise MissingCaptionError(f"no cached answer for meme {exc.meme_id!r}, focus {exc.focus!r} "
                                      f"under params {params.fingerprint}") from None
    return out


class _ReadOnly:
    def __init__(self, cache):
        self.cache = cache

    def get(self, key):
        return self.cache.get(key)

    def put(self, row):
        return False
