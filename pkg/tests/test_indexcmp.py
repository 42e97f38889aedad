from hypothesis import given, settings
from hypothesis import strategies as st

from gesturelex.indexcmp import IndexCounts, IndexMatch, compare_to_index
from gesturelex.model import IndexEvent
from gesturelex.sim import MealModel, generate_meal

from helpers import B, D, R, timelines, tl

AG, AM, MI = IndexMatch.AGREEMENT, IndexMatch.AMBIGUITY, IndexMatch.MISSED


def ev(t, kind=B):
    return IndexEvent("m1", t, kind)


def test_single_event_agreement():
    outcomes, counts = compare_to_index(tl("a", (B, 1000, 3000)), [ev(2000)])
    assert [o.match for o in outcomes] == [AG]
    assert counts == IndexCounts(1, 0, 0)


def test_long_drink_with_two_events_is_ambiguous():
    outcomes, counts = compare_to_index(tl("a", (D, 10000, 20000)), [ev(12000, D), ev(18000, D)])
    assert [o.match for o in outcomes] == [AM]
    assert len(outcomes[0].events) == 2
    assert counts == IndexCounts(0, 1, 0)


def test_two_missed_outcomes():
    outcomes, counts = compare_to_index(tl("a", (B, 1000, 3000)), [ev(50000)])
    assert [o.match for o in outcomes] == [MI, MI]
    assert outcomes[0].gesture is not None and outcomes[0].events == ()
    assert outcomes[1].gesture is None and outcomes[1].events == (ev(50000),)
    assert counts.gestures == 2


def test_containment_is_closed():
    t = tl("a", (B, 1000, 3000))
    for at in (1000, 3000):
        assert compare_to_index(t, [ev(at)])[1] == IndexCounts(1, 0, 0)
    assert compare_to_index(t, [ev(999)])[1] == IndexCounts(0, 0, 2)


def test_shared_boundary_event_counted_once():
    t = tl("a", (B, 1000, 3000), (B, 3000, 5000))
    outcomes, counts = compare_to_index(t, [ev(3000)])
    assert [o.match for o in outcomes] == [AG, MI]
    assert counts == IndexCounts(1, 0, 1)


def test_wrong_kind_is_missed_on_both_sides():
    t = tl("a", (D, 1000, 3000))
    assert compare_to_index(t, [ev(2000, B)])[1] == IndexCounts(0, 0, 2)
    assert compare_to_index(t, [ev(2000, B)], kind_strict=False)[1] == IndexCounts(1, 0, 0)


def test_non_intake_segments_ignored():
    outcomes, counts = compare_to_index(tl("a", (R, 0, 5000)), [])
    assert outcomes == [] and counts == IndexCounts()


def test_generated_meals_agree_with_their_own_events():
    for seed in range(20):
        truth, events = generate_meal(MealModel(), seed)
        _, counts = compare_to_index(truth, events)
        n_intake = sum(1 for s in truth if s.kind.is_intake)
        assert counts == IndexCounts(n_intake, 0, 0)


@settings(max_examples=200, deadline=None)
@given(timelines("a"), st.lists(st.tuples(st.integers(0, 150000), st.sampled_from([B, D])), max_size=30),
       st.booleans())
def test_conservation(t, raw, strict):
    events = [ev(at, k) for at, k in raw]
    outcomes, counts = compare_to_index(t, events, kind_strict=strict)
    gesture_side = [o for o in outcomes if o.gesture is not None]
    assert len(gesture_side) == sum(1 for s in t if s.kind.is_intake)
    assert sorted((e.t, e.kind.value) for o in outcomes for e in o.events) == sorted((e.t, e.kind.value) for e in events)
    for o in outcomes:
        if o.gesture is None:
            assert o.match is MI and len(o.events) == 1
        else:
            expect = {0: MI, 1: AG}.get(len(o.events), AM)
            assert o.match is expect
            assert all(o.gesture.contains(e.t) for e in o.events)
    assert counts == IndexCounts.of(outcomes)
