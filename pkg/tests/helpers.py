from __future__ import annotations

from hypothesis import strategies as st

from gesturelex.model import GestureKind, Segment, Timeline

B, D, U, R = GestureKind.BITE, GestureKind.DRINK, GestureKind.UTENSILING, GestureKind.REST


def tl(rater: str, *rows, meal: str = "m1") -> Timeline:
    """Build a timeline from ``(kind, start, end)`` rows."""
    return Timeline(meal, rater, tuple(Segment(s, e, k) for k, s, e in rows))


kinds = st.sampled_from(GestureKind.labeled())


@st.composite
def timelines(draw, rater="r1", meal="m1", max_segments=15, max_gap=9000, max_dur=9000):
    rows = draw(st.lists(
        st.tuples(st.integers(0, max_gap), st.integers(1000, max_dur), kinds),
        max_size=max_segments,
    ))
    segs, cursor = [], 0
    for gap, dur, kind in rows:
        start = cursor + gap
        segs.append(Segment(start, start + dur, kind))
        cursor = start + dur
    return Timeline(meal, rater, tuple(segs))
