from .checkpoint import HEADS, build_head, load_checkpoint, save_checkpoint
from .encoder import EncoderHead, HFTextEncoder, StubTextEncoder, encoder_scores, join_inputs
from .prompt import (
    DEFAULT_TEMPLATE,
    Demo,
    HFMaskedLM,
    LabelWords,
    PromptEnvelope,
    PromptHead,
    StubMaskedLM,
    build_envelope,
    prompt_scores,
)
from .scores import ScorePair, predict
