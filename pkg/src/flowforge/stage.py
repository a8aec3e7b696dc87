"""Pipeline stage taxonomy shared by the manifest, validator and planner."""

from __future__ import annotations

import enum
import functools


@functools.total_ordering
class StagePhase(enum.Enum):
    INPUT = "input"
    PREPROCESS = "preprocess"
    FEATURE = "feature"
    MODEL = "model"
    PREDICT = "predict"
    OUTPUT = "output"

    @property
    def rank(self) -> int:
        return _ORDER[self]

    def __lt__(self, other):
        if not isinstance(other, StagePhase):
            return NotImplemented
        return self.rank < other.rank


_ORDER = {
    StagePhase.INPUT: 0,
    StagePhase.PREPROCESS: 1,
    StagePhase.FEATURE: 2,
    StagePhase.MODEL: 3,
    StagePhase.PREDICT: 4,
    StagePhase.OUTPUT: 5,
}

PHASES_IN_ORDER = tuple(sorted(StagePhase, key=lambda p: p.rank))
