"""Domain types for segment-based eating-gesture labels.

Times are integer milliseconds from meal start. ``Other`` is never stored in
a rater's timeline; it is derived from unlabeled gaps.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator


class GestureKind(Enum):
    BITE = "bite"
    DRINK = "drink"
    UTENSILING = "utensiling"
    REST = "rest"
    OTHER = "other"

    @classmethod
    def intake(cls) -> frozenset[GestureKind]:
        return frozenset({cls.BITE, cls.DRINK})

    @classmethod
    def non_intake(cls) -> frozenset[GestureKind]:
        return frozenset({cls.UTENSILING, cls.REST})

    @classmethod
    def labeled(cls) -> tuple[GestureKind, ...]:
        """Kinds a rater may write to a file (everything except ``OTHER``)."""
        return (cls.BITE, cls.DRINK, cls.UTENSILING, cls.REST)

    @property
    def is_intake(self) -> bool:
        return self in GestureKind.intake()


class Hand(Enum):
    DOMINANT = "dominant"
    NON_DOMINANT = "nondominant"


@dataclass(frozen=True)
class TimingConfig:
    """Thresholds used throughout matching and validation (all in ms)."""

    tolerance_ms: int = 1000
    gap_other_ms: int = 4000
    min_gesture_ms: int = 1000
    min_other_ms: int = 4000

    def __post_init__(self) -> None:
        for name in ("tolerance_ms", "gap_other_ms", "min_gesture_ms", "min_other_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.min_other_ms < self.min_gesture_ms:
            raise ValueError("min_other_ms must be >= min_gesture_ms")

    def min_duration(self, kind: GestureKind) -> int:
        return self.min_other_ms if kind is GestureKind.OTHER else self.min_gesture_ms


DEFAULT_TIMING = TimingConfig()


@dataclass(frozen=True)
class Segment:
    """A labeled interval ``[start, end]``; sort with :meth:`sort_key`."""

    start: int
    end: int
    kind: GestureKind

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < 0:
            raise ValueError(f"negative time in {self!r}")
        if self.start >= self.end:
            raise ValueError(f"segment must have start < end, got {self!r}")

    @property
    def duration(self) -> int:
        return self.end - self.start

    def overlap(self, other: Segment) -> int:
        """Length of the temporal intersection (0 when touching or disjoint)."""
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def overlaps(self, other: Segment) -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, t: int) -> bool:
        return self.start <= t <= self.end

    def sort_key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.kind.value)


@dataclass(frozen=True)
class Timeline:
    """One rater's segments for one meal: sorted and non-overlapping."""

    meal_id: str
    rater_id: str
    segments: tuple[Segment, ...] = ()

    def __post_init__(self) -> None:
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for prev, cur in zip(segs, segs[1:]):
            if cur.start < prev.start:
                raise ValueError(f"segments not sorted by start: {prev} then {cur}")
            if cur.start < prev.end:
                raise ValueError(f"overlapping segments: {prev} and {cur}")
        for seg in segs:
            if seg.kind is GestureKind.OTHER:
                raise ValueError("Other segments are derived and may not be stored")

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def end(self) -> int:
        return self.segments[-1].end if self.segments else 0

    def with_segments(self, segments: Iterable[Segment]) -> Timeline:
        return Timeline(self.meal_id, self.rater_id, tuple(segments))


@dataclass(frozen=True)
class IndexEvent:
    """Single-timestamp intake label (first mouth contact)."""

    meal_id: str
    t: int
    kind: GestureKind
    hand: Hand = Hand.DOMINANT

    def __post_init__(self) -> None:
        if not self.kind.is_intake:
            raise ValueError(f"index events must be bite or drink, got {self.kind.value}")
        if self.t < 0:
            raise ValueError("negative time")


def dominant_only(events: Iterable[IndexEvent]) -> list[IndexEvent]:
    return [e for e in events if e.hand is Hand.DOMINANT]


def round_half_up_div(num: int, den: int) -> int:
    """``num / den`` rounded half up, exact for integers (``den > 0``)."""
    return (2 * num + den) // (2 * den)


def gaps(timeline: Timeline) -> list[tuple[int, int]]:
    """Unlabeled spans within ``[0, timeline.end]``, in order."""
    out = []
    cursor = 0
    for seg in timeline.segments:
        if seg.start > cursor:
            out.append((cursor, seg.start))
        cursor = seg.end
    return out


def derive_other_segments(
    timeline: Timeline, cfg: TimingConfig = DEFAULT_TIMING
) -> list[Segment]:
    """Gaps of at least ``gap_other_ms`` become ``Other``; shorter gaps are transitions."""
    return [
        Segment(start, end, GestureKind.OTHER)
        for start, end in gaps(timeline)
        if end - start >= cfg.gap_other_ms
    ]


def transitions(timeline: Timeline, cfg: TimingConfig = DEFAULT_TIMING) -> list[tuple[int, int]]:
    return [(s, e) for s, e in gaps(timeline) if e - s < cfg.gap_other_ms]
