import random

import pytest

from procap.probing import FOCUS_ORDER, ProCap
from procap.synthetic import make_desk_corpus

PERSON_YES = ["yes", "Yes.", "yes, a man", "there is a woman", "a person"]
PRESENCE_NO = ["no", "No.", "no, there is not", "none", "nobody", "No one", "nothing", ""]


@pytest.fixture(scope="session")
def desk(tmp_path_factory):
    """The synthetic 64+32 meme corpus (manifest, OCR sidecar, VQA answers)."""
    return make_desk_corpus(tmp_path_factory.mktemp("desk"))


def random_answers(rng: random.Random, words=None) -> dict:
    words = words or ["man", "woman", "dog", "flag", "red", "old", "smiling", "crowd", "street", "cat"]
    out = {}
    for focus in FOCUS_ORDER:
        if focus.startswith("val_"):
            out[focus] = rng.choice(PERSON_YES + PRESENCE_NO)
        else:
            n = rng.randint(0, 40)
            out[focus] = " ".join(rng.choice(words) for _ in range(n))
    return out


def procap_from(answers: dict, meme_id="m", suppressed=()) -> ProCap:
    return ProCap(meme_id, dict(answers), suppressed=frozenset(suppressed))


@pytest.fixture(scope="session")
def desk_cache(desk, tmp_path_factory):
    """Answer cache holding the full bank for every desk meme at penalties 1, 2 and 3."""
    from procap.dataset import read_manifest
    from procap.probing import DEFAULT_BANK, AnswerCache, DecodeParams, FixtureVQABackend, caption_records

    cache = AnswerCache(tmp_path_factory.mktemp("cache") / "answers.jsonl")
    ids = [r.id for r in read_manifest(desk["manifest"])]
    backend = FixtureVQABackend(desk["answers"])
    for penalty in (1, 2, 3):
        run = caption_records(ids, {}, DEFAULT_BANK, backend, DecodeParams(penalty), cache)
        assert not run.failures
    return cache


@pytest.fixture(scope="session")
def desk_sets(desk):
    from procap.dataset import load_dataset

    return load_dataset(desk["manifest"], "train", name="desk"), load_dataset(desk["manifest"], "test", name="desk")


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Records one PASS/FAIL line for an acceptance criterion test."""
    state = {}

    def start(number, title):
        state.update(number=number, title=title)

    yield start
    rep = getattr(request.node, "rep_call", None)
    if state and rep is not None:
        status = "PASS" if rep.passed else "FAIL"
        line = f"criterion {state['number']:>2}: {status}  {state['title']}"
        ACCEPTANCE_LINES.append(line)
        print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
    elif rep.when == "setup" and rep.skipped and item.name.startswith("test_criterion_"):
        number = item.name.split("_")[2]
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: SKIP  {rep.longrepr[2].removeprefix('Skipped: ')}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
