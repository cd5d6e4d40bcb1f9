"""The probing-question bank, prompt formatting and the presence gate."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

CONTENT, TARGET, VALIDATION = "content", "target", "validation"

PERSON_FOCI = ("race", "gender", "religion", "nationality", "disability")
ANIMAL_FOCI = ("animal",)
TARGET_FOCI = PERSON_FOCI + ANIMAL_FOCI
VALIDATION_FOCI = ("val_person", "val_animal")


@dataclass(frozen=True)
class ProbingQuestion:
    focus: str
    text: str
    role: str


DEFAULT_BANK: tuple[ProbingQuestion, ...] = (
    ProbingQuestion("content", "what is shown in the image?", CONTENT),
    ProbingQuestion("race", "What is the race of the person in the image?", TARGET),
    ProbingQuestion("gender", "What is the gender of the person in the image?", TARGET),
    ProbingQuestion("religion", "What is the religion of the person in the image?", TARGET),
    ProbingQuestion("nationality", "Which country does the person in the image come from?", TARGET),
    ProbingQuestion("disability", "Are there disabled people in the image?", TARGET),
    ProbingQuestion("animal", "What animal is in the image?", TARGET),
    ProbingQuestion("val_person", "Is there a person in the image?", VALIDATION),
    ProbingQuestion("val_animal", "Is there an animal in the image?", VALIDATION),
)

FOCUS_ORDER = tuple(q.focus for q in DEFAULT_BANK)
_BY_FOCUS = {q.focus: q for q in DEFAULT_BANK}


def question(focus: str) -> ProbingQuestion:
    try:
        return _BY_FOCUS[focus]
    except KeyError:
        raise ValueError(f"unknown focus {focus!r}") from None


def build_prompt(q: ProbingQuestion) -> str:
    text = q.text.strip()
    if not text:
        raise ValueError("probing question text is empty")
    return f"Question: {text} Answer:"


QuestionSubset = Union[str, Iterable[str]]


def normalize_subset(subset: QuestionSubset) -> str:
    """Canonical string form: ``all``, ``content_only`` or comma-joined foci in bank order."""
    if isinstance(subset, str):
        if subset in ("all", "content_only"):
            return subset
        subset = [s.strip() for s in subset.split(",") if s.strip()]
    foci = set(subset)
    unknown = foci - set(FOCUS_ORDER) - set(VALIDATION_FOCI)
    if unknown:
        raise ValueError(f"unknown foci {sorted(unknown)}")
    foci -= set(VALIDATION_FOCI)
    if not foci:
        raise ValueError("question subset selects no questions")
    if foci == {"content"}:
        return "content_only"
    if foci == set(FOCUS_ORDER) - set(VALIDATION_FOCI):
        return "all"
    return ",".join(f for f in FOCUS_ORDER if f in foci)


def select_bank(subset: QuestionSubset = "all") -> list[ProbingQuestion]:
    """Questions for a subset, with the validation questions its gated foci need.

    ``all`` is the full bank, ``content_only`` the generic caption question
    alone, and a focus name (or comma list) asks only those questions.
    """
    subset = normalize_subset(subset)
    if subset == "all":
        return list(DEFAULT_BANK)
    foci = {"content"} if subset == "content_only" else set(subset.split(","))
    if foci & set(PERSON_FOCI):
        foci.add("val_person")
    if foci & set(ANIMAL_FOCI):
        foci.add("val_animal")
    return [q for q in DEFAULT_BANK if q.focus in foci]


_NEGATIVE = {"", "none", "nobody", "no one", "nothing"}


def normalize_answer(answer: str) -> str:
    return " ".join(re.sub(r"[^\w\s]", " ", answer.lower()).split())


def validate_presence(answer: str) -> bool:
    """True unless the answer is a negation ("no ...", "none", "nobody", ...)."""
    norm = normalize_answer(answer)
    if norm in _NEGATIVE:
        return False
    return norm.split(" ", 1)[0] != "no"


def check_bank(bank: Sequence[ProbingQuestion]) -> None:
    foci = {q.focus for q in bank}
    if foci & set(PERSON_FOCI) and "val_person" not in foci:
        raise ValueError("bank has person-dependent questions but no person validation question")
    if foci & set(ANIMAL_FOCI) and "val_animal" not in foci:
        raise ValueError("bank has the animal question but no animal validation question")
