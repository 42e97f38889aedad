"""Pairwise matching of two raters' timelines.

Matching works on the overlap graph between the two timelines, so the result
does not depend on which rater is passed first:

* segments from different raters are related when their intersection is > 0 ms;
* connected components of that relation restricted to equal kinds are the
  matched groups (1:1 -> agreement / BA I / BA III, N:1 or N:N -> BA II);
* segments left alone are mistakes: missed if nothing overlaps them,
  identity if only segments of another kind do.

Each group contributes segments to a union timeline, which is then made
non-overlapping.
"""
from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .model import (
    DEFAULT_TIMING,
    GestureKind,
    IndexEvent,
    Segment,
    Timeline,
    TimingConfig,
    dominant_only,
    round_half_up_div,
)

UNION_RATER = "union"


class MatchCase(Enum):
    AGREEMENT = "agreement"
    BA_I = "ba1"
    BA_II = "ba2"
    BA_III = "ba3"
    MISTAKE_MISSED = "missed"
    MISTAKE_IDENTITY = "identity"

    @property
    def is_boundary_ambiguity(self) -> bool:
        return self in (MatchCase.BA_I, MatchCase.BA_II, MatchCase.BA_III)

    @property
    def is_mistake(self) -> bool:
        return self in (MatchCase.MISTAKE_MISSED, MatchCase.MISTAKE_IDENTITY)

    @property
    def is_agreement(self) -> bool:
        """Counts toward overall agreement (exact agreement or any boundary ambiguity)."""
        return not self.is_mistake


class Side(Enum):
    START = "start"
    END = "end"


class MealMismatch(ValueError):
    pass


def merge_boundary(t1: int, t2: int, side: Side, cfg: TimingConfig = DEFAULT_TIMING) -> int:
    """Combine two raters' boundary times.

    Within tolerance the boundaries are averaged (rounded half up); otherwise
    the one giving the larger gesture extent wins.

    >>> merge_boundary(1000, 1800, Side.START)
    1400
    >>> merge_boundary(1000, 2500, Side.START)
    1000
    >>> merge_boundary(10000, 12000, Side.END)
    12000
    """
    if abs(t1 - t2) <= cfg.tolerance_ms:
        return round_half_up_div(t1 + t2, 2)
    return min(t1, t2) if side is Side.START else max(t1, t2)


@dataclass(frozen=True)
class MatchGroup:
    case: MatchCase
    kind: GestureKind
    members_a: tuple[Segment, ...]
    members_b: tuple[Segment, ...]
    union_segments: tuple[Segment, ...] = ()
    attributed_rater: str | None = None
    # different-kind segments a mistake-identity member was judged against
    context: tuple[Segment, ...] = ()
    note: str = ""

    @property
    def members(self) -> tuple[Segment, ...]:
        return self.members_a + self.members_b

    @property
    def start(self) -> int:
        return min(s.start for s in self.members)

    def swapped(self) -> MatchGroup:
        return MatchGroup(self.case, self.kind, self.members_b, self.members_a,
                          self.union_segments, self.attributed_rater, self.context, self.note)


@dataclass(frozen=True)
class MatchReport:
    meal_id: str
    rater_a: str
    rater_b: str
    groups: tuple[MatchGroup, ...]
    union: Timeline
    union_cases: tuple[MatchCase, ...]

    @property
    def counts(self) -> Counter:
        """Number of groups per ``(kind, case)``."""
        return Counter((g.kind, g.case) for g in self.groups)

    def case_counts(self) -> Counter:
        return Counter(g.case for g in self.groups)

    def to_records(self) -> list[dict]:
        def spans(segs):
            return [[s.start, s.end] for s in segs]

        return [
            {
                "meal": self.meal_id,
                "rater_a": self.rater_a,
                "rater_b": self.rater_b,
                "kind": g.kind.value,
                "case": g.case.value,
                "members_a": spans(g.members_a),
                "members_b": spans(g.members_b),
                "union": spans(g.union_segments),
                "attributed": g.attributed_rater,
                "note": g.note,
            }
            for g in self.groups
        ]


# -- overlap graph ---------------------------------------------------------

def overlap_pairs(a: Sequence[Segment], b: Sequence[Segment]) -> list[tuple[int, int]]:
    """All ``(i, j)`` with ``a[i]`` and ``b[j]`` intersecting for more than 0 ms.

    Sweep over sorted endpoints; ends sort before starts at equal times so
    touching segments are not paired. Does not assume either input is
    non-overlapping.
    """
    events = []
    for side, segs in ((0, a), (1, b)):
        for i, s in enumerate(segs):
            events.append((s.start, 1, side, i))
            events.append((s.end, 0, side, i))
    events.sort()
    active: tuple[set[int], set[int]] = (set(), set())
    pairs = []
    for _, is_start, side, i in events:
        if not is_start:
            active[side].discard(i)
            continue
        for k in active[1 - side]:
            pairs.append((i, k) if side == 0 else (k, i))
        active[side].add(i)
    pairs.sort()
    return pairs


def same_kind_components(
    a: Sequence[Segment],
    b: Sequence[Segment],
    pairs: Iterable[tuple[int, int]] | None = None,
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Connected components of the same-kind overlap relation, singletons included.

    Each component is ``(a_indices, b_indices)``; components are ordered by
    their smallest index on side a, then side b.
    """
    if pairs is None:
        pairs = overlap_pairs(a, b)
    n = len(a)
    parent = list(range(n + len(b)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in pairs:
        if a[i].kind is b[j].kind:
            ri, rj = find(i), find(n + j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    comps: dict[int, tuple[list[int], list[int]]] = {}
    for node in range(len(parent)):
        ia, ib = comps.setdefault(find(node), ([], []))
        (ia if node < n else ib).append(node if node < n else node - n)
    return sorted(
        ((tuple(ia), tuple(ib)) for ia, ib in comps.values()),
        key=lambda c: (c[0][0] if c[0] else n, c[1][0] if c[1] else len(b)),
    )


class _Lookup:
    """Range queries over one rater's sorted, non-overlapping segments."""

    def __init__(self, segs: Sequence[Segment]):
        self.segs = segs
        self.starts = [s.start for s in segs]
        self.ends = [s.end for s in segs]

    def overlapping(self, lo: int, hi: int) -> range:
        return range(bisect_right(self.ends, lo), bisect_left(self.starts, hi))


# -- case rules ------------------------------------------------------------

def _events_in(events: Sequence[IndexEvent], kind: GestureKind, lo: int, hi: int) -> int:
    return sum(1 for e in events if e.kind is kind and lo <= e.t <= hi)


def _ba2_union(
    kind: GestureKind,
    members_a: Sequence[Segment],
    members_b: Sequence[Segment],
    events: Sequence[IndexEvent],
    rater_a: str,
    rater_b: str,
) -> tuple[tuple[Segment, ...], str]:
    lo = min(s.start for s in (*members_a, *members_b))
    hi = max(s.end for s in (*members_a, *members_b))
    if kind.is_intake:
        def agrees(members):
            span_lo = min(s.start for s in members)
            span_hi = max(s.end for s in members)
            return len(members) == _events_in(events, kind, span_lo, span_hi)

        ok_a, ok_b = agrees(members_a), agrees(members_b)
        if ok_a != ok_b:
            chosen, rater = (members_a, rater_a) if ok_a else (members_b, rater_b)
            segs = sorted(chosen, key=Segment.sort_key)
            if len(segs) == 1:
                return (Segment(lo, hi, kind),), f"index count agrees with {rater}"
            stretched = [Segment(lo, segs[0].end, kind), *segs[1:-1], Segment(segs[-1].start, hi, kind)]
            return tuple(stretched), f"index count agrees with {rater}"
        return (Segment(lo, hi, kind),), "index count inconclusive; max extent"
    return (Segment(lo, hi, kind),), "max extent"


def _corroborated(seg: Segment, events: Sequence[IndexEvent]) -> bool:
    return seg.kind.is_intake and _events_in(events, seg.kind, seg.start, seg.end) > 0


def _identity_winner(
    s: Segment, s_rater: str, c: Segment, c_rater: str, events: Sequence[IndexEvent]
) -> tuple[bool, str]:
    """Decide whose kind a conflicting region keeps. Returns ``(s_wins, reason)``.

    Symmetric: swapping the arguments flips the answer.
    """
    if s.kind.is_intake or c.kind.is_intake:
        s_ok, c_ok = _corroborated(s, events), _corroborated(c, events)
        if s_ok != c_ok:
            return s_ok, "index event"
    if s.duration != c.duration:
        return s.duration > c.duration, "longer duration"
    if s_rater != c_rater:
        return s_rater < c_rater, "rater id tie-break"
    return s.kind.value < c.kind.value, "kind tie-break"


def _protected(start: int, end: int, kind: GestureKind, events: Sequence[IndexEvent]) -> bool:
    return kind.is_intake and _events_in(events, kind, start, end) > 0


def resolve_union(
    parts: Iterable[tuple[Segment, MatchCase]],
    events: Sequence[IndexEvent] = (),
    cfg: TimingConfig = DEFAULT_TIMING,
) -> list[tuple[Segment, MatchCase]]:
    """Sort union contributions and remove overlaps.

    The later-starting segment is trimmed to begin where the earlier one ends
    and dropped if that leaves it shorter than ``min_gesture_ms``. An intake
    segment containing an index event of its kind is not dropped; the
    non-intake segment it overlaps is cut around it instead.
    """
    heap = [(s.start, s.end, s.kind.value, case.value) for s, case in parts]
    heapq.heapify(heap)
    out: list[tuple[int, int, str, str]] = []
    min_len = cfg.min_gesture_ms
    while heap:
        start, end, kind, case = item = heapq.heappop(heap)
        if not out or out[-1][1] <= start:
            out.append(item)
            continue
        p_start, p_end, p_kind, p_case = out[-1]
        if end - p_end >= min_len:
            heapq.heappush(heap, (p_end, end, kind, case))
            continue
        if _protected(start, end, GestureKind(kind), events) and not GestureKind(p_kind).is_intake:
            out.pop()
            if start - p_start >= min_len:
                heapq.heappush(heap, (p_start, start, p_kind, p_case))
            if p_end - end >= min_len:
                heapq.heappush(heap, (end, p_end, p_kind, p_case))
            heapq.heappush(heap, item)
        # otherwise the trimmed remainder is too short: drop it
    return [(Segment(s, e, GestureKind(k)), MatchCase(c)) for s, e, k, c in out]


# -- driver ----------------------------------------------------------------

def match_pair(
    a: Timeline,
    b: Timeline,
    index_events: Iterable[IndexEvent] = (),
    cfg: TimingConfig = DEFAULT_TIMING,
) -> MatchReport:
    """Match two raters' labels of the same meal and build their union."""
    if a.meal_id != b.meal_id:
        raise MealMismatch(f"cannot match meal {a.meal_id!r} against {b.meal_id!r}")
    events = dominant_only(index_events)
    A, B = a.segments, b.segments
    look = (_Lookup(A), _Lookup(B))
    raters = (a.rater_id, b.rater_id)
    pairs = overlap_pairs(A, B)

    cross: tuple[dict[int, list[int]], dict[int, list[int]]] = ({}, {})
    for i, j in pairs:
        cross[0].setdefault(i, []).append(j)
        cross[1].setdefault(j, []).append(i)

    groups: list[MatchGroup] = []
    parts: list[tuple[Segment, MatchCase]] = []

    def emit(group: MatchGroup) -> None:
        groups.append(group)
        parts.extend((s, group.case) for s in group.union_segments)

    for ia, ib in same_kind_components(A, B, pairs):
        members_a = tuple(A[i] for i in ia)
        members_b = tuple(B[j] for j in ib)
        if members_a and members_b:
            kind = members_a[0].kind
            if len(ia) == 1 and len(ib) == 1:
                x, y = members_a[0], members_b[0]
                if abs(x.start - y.start) <= cfg.tolerance_ms and abs(x.end - y.end) <= cfg.tolerance_ms:
                    union = Segment(round_half_up_div(x.start + y.start, 2),
                                    round_half_up_div(x.end + y.end, 2), kind)
                    emit(MatchGroup(MatchCase.AGREEMENT, kind, members_a, members_b, (union,)))
                    continue
                lo, hi = min(x.start, y.start), max(x.end, y.end)
                others = (len(look[0].overlapping(lo, hi)) - 1) + (len(look[1].overlapping(lo, hi)) - 1)
                case = MatchCase.BA_III if others > 0 else MatchCase.BA_I
                union = Segment(merge_boundary(x.start, y.start, Side.START, cfg),
                                merge_boundary(x.end, y.end, Side.END, cfg), kind)
                emit(MatchGroup(case, kind, members_a, members_b, (union,)))
            else:
                union_segs, note = _ba2_union(kind, members_a, members_b, events, *raters)
                emit(MatchGroup(MatchCase.BA_II, kind, members_a, members_b, union_segs, note=note))
            continue

        side = 0 if members_a else 1
        idx = (ia or ib)[0]
        seg = (members_a or members_b)[0]
        other = 1 - side
        counterparts = [(B if side == 0 else A)[k] for k in cross[side].get(idx, [])]
        ma, mb = (members_a, members_b)
        if not counterparts:
            emit(MatchGroup(MatchCase.MISTAKE_MISSED, seg.kind, ma, mb, (seg,),
                            attributed_rater=raters[other], note=f"not labeled by {raters[other]}"))
            continue
        c = max(counterparts, key=lambda t: (seg.overlap(t), -t.start, -t.end, t.kind.value))
        s_wins, reason = _identity_winner(seg, raters[side], c, raters[other], events)
        emit(MatchGroup(
            MatchCase.MISTAKE_IDENTITY, seg.kind, ma, mb,
            (seg,) if s_wins else (),
            attributed_rater=raters[other] if s_wins else raters[side],
            context=tuple(sorted(counterparts, key=Segment.sort_key)),
            note=f"{(seg if s_wins else c).kind.value} kept by {reason}",
        ))

    groups.sort(key=lambda g: (g.start, g.case.value, g.kind.value,
                               tuple(s.sort_key() for s in g.members)))
    resolved = resolve_union(parts, events, cfg)
    union = Timeline(a.meal_id, UNION_RATER, tuple(s for s, _ in resolved))
    return MatchReport(a.meal_id, a.rater_id, b.rater_id, tuple(groups), union,
                       tuple(c for _, c in resolved))
