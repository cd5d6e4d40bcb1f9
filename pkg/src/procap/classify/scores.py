from __future__ import annotations

import math
from typing import NamedTuple

from ..dataset import HATEFUL, NON_HATEFUL


class ScorePair(NamedTuple):
    """Independent sigmoid scores: s0 non-hateful, s1 hateful."""

    s0: float
    s1: float

    def check(self) -> "ScorePair":
        for v in self:
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"score {v} outside [0, 1]")
        return self


def predict(s: ScorePair) -> int:
    """Non-hateful only when s0 strictly beats s1; ties go to hateful."""
    return NON_HATEFUL if s[0] > s[1] else HATEFUL
