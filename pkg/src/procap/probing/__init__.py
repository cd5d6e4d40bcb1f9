from .backends import (
    BACKEND_URL_ENV,
    CacheOnlyBackend,
    FixtureVQABackend,
    HTTPVQABackend,
    LocalVQABackend,
    VQABackend,
    VQARequest,
    make_backend,
)
from .cache import AnswerCache, BufferedCache, CacheKey, CacheRow
from .procap import (
    JOINT_BUDGET,
    PER_ANSWER_BUDGET,
    CaptionRun,
    DecodeParams,
    ProCap,
    ask,
    augment_tags,
    caption_records,
    fit_text,
    generate_procap,
    load_procaps,
    render_procap,
)
from .questions import (
    ANIMAL_FOCI,
    DEFAULT_BANK,
    FOCUS_ORDER,
    PERSON_FOCI,
    TARGET_FOCI,
    VALIDATION_FOCI,
    ProbingQuestion,
    build_prompt,
    normalize_subset,
    question,
    select_bank,
    validate_presence,
)
