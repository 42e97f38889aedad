"""Compare intake segments against single-timestamp index labels."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .model import IndexEvent, Segment, Timeline


class IndexMatch(Enum):
    AGREEMENT = "agreement"
    AMBIGUITY = "ambiguity"
    MISSED = "missed"


@dataclass(frozen=True)
class IndexMatchOutcome:
    match: IndexMatch
    gesture: Segment | None
    events: tuple[IndexEvent, ...] = ()


@dataclass(frozen=True)
class IndexCounts:
    agreement: int = 0
    ambiguity: int = 0
    missed: int = 0

    @property
    def gestures(self) -> int:
        return self.agreement + self.ambiguity + self.missed

    def __add__(self, other: IndexCounts) -> IndexCounts:
        return IndexCounts(self.agreement + other.agreement,
                           self.ambiguity + other.ambiguity,
                           self.missed + other.missed)

    @classmethod
    def of(cls, outcomes: Iterable[IndexMatchOutcome]) -> IndexCounts:
        tally = {m: 0 for m in IndexMatch}
        for o in outcomes:
            tally[o.match] += 1
        return cls(tally[IndexMatch.AGREEMENT], tally[IndexMatch.AMBIGUITY], tally[IndexMatch.MISSED])


def compare_to_index(
    timeline: Timeline,
    events: Iterable[IndexEvent],
    kind_strict: bool = True,
) -> tuple[list[IndexMatchOutcome], IndexCounts]:
    """Assign every intake segment and every event to exactly one outcome.

    Containment is inclusive at both ends. An event sitting on a shared
    boundary of two segments goes to the earlier segment. With
    ``kind_strict`` a bite event only counts for a bite segment.
    ``events`` should already be restricted to the dominant hand.
    """
    intake = [s for s in timeline.segments if s.kind.is_intake]
    events = sorted(events, key=lambda e: (e.t, e.kind.value))
    claimed: list[list[IndexEvent]] = [[] for _ in intake]
    unclaimed: list[IndexEvent] = []
    for e in events:
        for k, seg in enumerate(intake):
            if seg.contains(e.t) and (not kind_strict or seg.kind is e.kind):
                claimed[k].append(e)
                break
        else:
            unclaimed.append(e)

    outcomes = []
    for seg, mine in zip(intake, claimed):
        if len(mine) == 1:
            match = IndexMatch.AGREEMENT
        elif mine:
            match = IndexMatch.AMBIGUITY
        else:
            match = IndexMatch.MISSED
        outcomes.append(IndexMatchOutcome(match, seg, tuple(mine)))
    outcomes.extend(IndexMatchOutcome(IndexMatch.MISSED, None, (e,)) for e in unclaimed)
    return outcomes, IndexCounts.of(outcomes)
