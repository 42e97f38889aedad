"""Synthetic meals and a rater-noise injector with known expected match cases.

A generated meal is the ground-truth timeline. :func:`perturb` derives a
second rater's timeline from it, applying at most one perturbation per
ground-truth segment and tagging each with the match case it must produce.
Boundary moves stay inside the segment's own half of the neighbouring gaps,
so one perturbation never changes how a neighbour is classified.
"""
from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import validate_timeline, write_meal
from .matcher import MatchCase
from .model import (
    DEFAULT_TIMING,
    GestureKind,
    Hand,
    IndexEvent,
    Segment,
    Timeline,
    TimingConfig,
)

MAX_ATTEMPTS = 100
# right-hand room given to the last segment of a meal
TAIL_ROOM_MS = 10_000


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


@dataclass(frozen=True)
class DurationLaw:
    """Log-normal with the given mean and std (seconds), clipped to ``[min_s, max_s]``."""

    mean_s: float
    std_s: float
    min_s: float
    max_s: float

    def __post_init__(self) -> None:
        if not (0 < self.min_s <= self.max_s) or self.mean_s <= 0 or self.std_s < 0:
            raise ValueError(f"invalid duration law {self}")

    @property
    def log_params(self) -> tuple[float, float]:
        sigma2 = math.log1p((self.std_s / self.mean_s) ** 2)
        return math.log(self.mean_s) - sigma2 / 2, math.sqrt(sigma2)

    def sample_ms(self, rng: np.random.Generator) -> int:
        mu, sigma = self.log_params
        x = rng.lognormal(mu, sigma) if sigma > 0 else self.mean_s
        x = min(max(x, self.min_s), self.max_s)
        return int(round(x * 1000))


# Per-kind counts and duration summaries of the reference corpus.
REFERENCE_LAWS = {
    GestureKind.BITE: (18462, DurationLaw(2, 1, 1, 11)),
    GestureKind.DRINK: (2182, DurationLaw(6, 2, 1, 18)),
    GestureKind.UTENSILING: (14861, DurationLaw(5, 5, 1, 186)),
    GestureKind.REST: (14761, DurationLaw(8, 12, 1, 341)),
}
OTHER_LAW = DurationLaw(9, 6, 4, 73)
OTHER_COUNT = 1348


@dataclass(frozen=True)
class MealModel:
    weights: Mapping[GestureKind, float] = field(
        default_factory=lambda: {k: float(n) for k, (n, _) in REFERENCE_LAWS.items()})
    durations: Mapping[GestureKind, DurationLaw] = field(
        default_factory=lambda: {k: law for k, (_, law) in REFERENCE_LAWS.items()})
    transition: DurationLaw = DurationLaw(1.0, 0.8, 0.1, 3.9)
    other: DurationLaw = OTHER_LAW
    p_other_gap: float = OTHER_COUNT / sum(n for n, _ in REFERENCE_LAWS.values())
    length_s: float = 600.0

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.weights.values()) or sum(self.weights.values()) <= 0:
            raise ValueError("weights must be non-negative with a positive total")
        if any(k not in self.durations for k, w in self.weights.items() if w > 0):
            raise ValueError("every weighted kind needs a duration law")
        if GestureKind.OTHER in self.weights:
            raise ValueError("Other is produced by gaps, not weights")
        if not 0 <= self.p_other_gap <= 1 or self.length_s <= 0:
            raise ValueError("invalid meal model")

    def check(self, cfg: TimingConfig) -> None:
        for k, law in self.durations.items():
            if law.min_s * 1000 < cfg.min_gesture_ms:
                raise ValueError(f"{k.value} minimum below {cfg.min_gesture_ms} ms")
        if self.other.min_s * 1000 < cfg.gap_other_ms:
            raise ValueError("other gaps must reach the gap_other threshold")
        if self.transition.max_s * 1000 >= cfg.gap_other_ms:
            raise ValueError("transition gaps must stay below the gap_other threshold")


class Perturbation(Enum):
    NONE = "none"
    JITTER_SUB = "jitter_sub"
    JITTER_SUPRA = "jitter_supra"
    SPLIT = "split"
    MERGE = "merge"
    MISS = "miss"
    RELABEL = "relabel"
    BA3_MATCHED = "ba3_matched"
    BA3_EXTRA = "ba3_extra"
    INSERTED = "inserted"
    NOOP = "noop"


@dataclass(frozen=True)
class NoiseProfile:
    jitter_std_ms: float = 0.0
    p_supra: float = 0.0
    p_split: float = 0.0
    p_merge: float = 0.0
    p_miss: float = 0.0
    p_relabel: float = 0.0
    p_ba3: float = 0.0
    # jitter regimes as fractions of the tolerance; the band between is never generated
    sub_band: float = 0.4
    supra_band: float = 1.6

    def __post_init__(self) -> None:
        probs = (self.p_supra, self.p_split, self.p_merge, self.p_miss, self.p_relabel, self.p_ba3)
        if any(not 0 <= p <= 1 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if sum(probs[1:]) > 1:
            raise ValueError("structural perturbation probabilities sum above 1")
        if self.jitter_std_ms < 0:
            raise ValueError("jitter_std_ms must be non-negative")
        if not 0 <= self.sub_band < 1 < self.supra_band:
            raise ValueError("jitter regimes must exclude the tolerance itself")


@dataclass(frozen=True)
class ProvenanceTag:
    gt_indices: tuple[int, ...]
    perturbation: Perturbation
    expected: MatchCase
    perturbed: tuple[Segment, ...] = ()
    composite: bool = False

    def to_record(self) -> dict:
        return {
            "gt": list(self.gt_indices),
            "perturbation": self.perturbation.value,
            "expected": self.expected.value,
            "perturbed": [[s.kind.value, s.start, s.end] for s in self.perturbed],
            "composite": self.composite,
        }


def generate_meal(
    model: MealModel,
    seed: int,
    meal_id: str = "meal",
    rater_id: str = "r1",
    cfg: TimingConfig = DEFAULT_TIMING,
) -> tuple[Timeline, list[IndexEvent]]:
    """Ground-truth timeline plus one dominant-hand index event inside each intake segment."""
    model.check(cfg)
    rng = _rng(seed, 0)
    kinds = [k for k in GestureKind.labeled() if model.weights.get(k, 0) > 0]
    w = np.array([model.weights[k] for k in kinds], dtype=float)
    w /= w.sum()
    length_ms = int(model.length_s * 1000)

    def gap() -> int:
        law = model.other if rng.random() < model.p_other_gap else model.transition
        return law.sample_ms(rng)

    segments = []
    cursor = gap()
    while cursor < length_ms:
        kind = kinds[rng.choice(len(kinds), p=w)]
        dur = model.durations[kind].sample_ms(rng)
        segments.append(Segment(cursor, cursor + dur, kind))
        cursor += dur + gap()
    events = [
        IndexEvent(meal_id, int(rng.integers(s.start, s.end + 1)), s.kind, Hand.DOMINANT)
        for s in segments if s.kind.is_intake
    ]
    return Timeline(meal_id, rater_id, tuple(segments)), events


class _Perturber:
    def __init__(self, timeline: Timeline, profile: NoiseProfile, rng, cfg: TimingConfig):
        self.segs = timeline.segments
        self.profile = profile
        self.rng = rng
        self.cfg = cfg
        self.sub_max = int(profile.sub_band * cfg.tolerance_ms)
        self.supra_min = math.ceil(profile.supra_band * cfg.tolerance_ms)
        n = len(self.segs)
        self.left_room = [0] * n
        self.right_room = [0] * n
        for i, s in enumerate(self.segs):
            if i == 0:
                self.left_room[i] = s.start
            else:
                g = s.start - self.segs[i - 1].end
                self.right_room[i - 1] = g // 2
                self.left_room[i] = g - g // 2
        if n:
            self.right_room[-1] = TAIL_ROOM_MS

    def _sub_shift(self) -> int:
        if self.profile.jitter_std_ms <= 0:
            return 0
        d = int(round(self.rng.normal(0, self.profile.jitter_std_ms)))
        return max(-self.sub_max, min(self.sub_max, d))

    def jitter(self, i: int):
        g = self.segs[i]
        if self.rng.random() < self.profile.p_supra:
            return self._supra(i)
        ds = max(self._sub_shift(), -self.left_room[i])
        de = min(self._sub_shift(), self.right_room[i])
        if (g.end + de) - (g.start + ds) < self.cfg.min_gesture_ms:
            ds, de = min(ds, 0), max(de, 0)
        if ds == 0 and de == 0:
            return [g], [ProvenanceTag((i,), Perturbation.NONE, MatchCase.AGREEMENT, (g,))]
        p = Segment(g.start + ds, g.end + de, g.kind)
        return [p], [ProvenanceTag((i,), Perturbation.JITTER_SUB, MatchCase.AGREEMENT, (p,))]

    def _supra(self, i: int):
        g = self.segs[i]
        m = self.supra_min + int(abs(self.rng.normal(0, max(self.profile.jitter_std_ms, 1.0))))
        move_start = self.rng.random() < 0.5
        outward_room = self.left_room[i] if move_start else self.right_room[i]
        options = []
        if outward_room >= m:
            options.append(-m if move_start else m)
        if g.duration - m - self.sub_max >= self.cfg.min_gesture_ms:
            options.append(m if move_start else -m)
        if not options:
            return None
        shift = options[int(self.rng.integers(len(options)))]
        if move_start:
            start = g.start + shift
            end = g.end + min(max(self._sub_shift(), -self.sub_max), self.right_room[i])
        else:
            end = g.end + shift
            start = g.start + max(self._sub_shift(), -self.left_room[i])
        p = Segment(start, end, g.kind)
        return [p], [ProvenanceTag((i,), Perturbation.JITTER_SUPRA, MatchCase.BA_I, (p,))]

    def split(self, i: int):
        g = self.segs[i]
        min_len = self.cfg.min_gesture_ms
        for k in (int(self.rng.integers(2, 4)), 2):
            inner = [int(self.rng.integers(100, 601)) for _ in range(k - 1)]
            extra = g.duration - sum(inner) - k * min_len
            if extra < 0:
                continue
            cuts = sorted(int(c) for c in self.rng.integers(0, extra + 1, size=k - 1))
            lengths = [min_len + hi - lo for lo, hi in zip([0, *cuts], [*cuts, extra])]
            pieces, cursor = [], g.start
            for n, length in enumerate(lengths):
                pieces.append(Segment(cursor, cursor + length, g.kind))
                cursor += length + (inner[n] if n < k - 1 else 0)
            return pieces, [ProvenanceTag((i,), Perturbation.SPLIT, MatchCase.BA_II, tuple(pieces))]
        return None

    def merge(self, i: int):
        if i + 1 >= len(self.segs) or self.segs[i + 1].kind is not self.segs[i].kind:
            return None
        p = Segment(self.segs[i].start, self.segs[i + 1].end, self.segs[i].kind)
        return [p], [ProvenanceTag((i, i + 1), Perturbation.MERGE, MatchCase.BA_II, (p,))]

    def miss(self, i: int):
        return [], [ProvenanceTag((i,), Perturbation.MISS, MatchCase.MISTAKE_MISSED)]

    def relabel(self, i: int):
        g = self.segs[i]
        choices = [k for k in GestureKind.labeled() if k is not g.kind]
        p = Segment(g.start, g.end, choices[int(self.rng.integers(len(choices)))])
        return [p], [ProvenanceTag((i,), Perturbation.RELABEL, MatchCase.MISTAKE_IDENTITY, (p,))]

    def ba3(self, i: int):
        variants = [self._ba3_extra]
        if i + 1 < len(self.segs) and self.segs[i + 1].kind is not self.segs[i].kind:
            variants.append(self._ba3_matched)
        for pick in self.rng.permutation(len(variants)):
            result = variants[int(pick)](i)
            if result is not None:
                return result
        return None

    def _ba3_matched(self, i: int):
        # the left segment swallows the head of its right neighbour, which starts late
        left, right = self.segs[i], self.segs[i + 1]
        e = self.supra_min + int(self.rng.integers(0, 501))
        pause = int(self.rng.integers(100, 401))
        if right.duration - e - pause < self.cfg.min_gesture_ms:
            return None
        lp = Segment(left.start, right.start + e, left.kind)
        rp = Segment(right.start + e + pause, right.end, right.kind)
        return [lp, rp], [
            ProvenanceTag((i,), Perturbation.BA3_MATCHED, MatchCase.BA_III, (lp,), composite=True),
            ProvenanceTag((i + 1,), Perturbation.BA3_MATCHED, MatchCase.BA_III, (rp,), composite=True),
        ]

    def _ba3_extra(self, i: int):
        # an unmatched different-kind segment occupies the head of a late-starting gesture
        g = self.segs[i]
        min_len = self.cfg.min_gesture_ms
        lead = int(self.rng.integers(0, 301))
        e = max(self.supra_min, min_len + lead) + int(self.rng.integers(0, 501))
        pause = int(self.rng.integers(100, 401))
        if g.duration - e - pause < min_len:
            return None
        choices = [k for k in GestureKind.labeled() if k is not g.kind]
        x = Segment(g.start + lead, g.start + e, choices[int(self.rng.integers(len(choices)))])
        p = Segment(g.start + e + pause, g.end, g.kind)
        return [x, p], [
            ProvenanceTag((i,), Perturbation.BA3_EXTRA, MatchCase.BA_III, (p,), composite=True),
            ProvenanceTag((), Perturbation.INSERTED, MatchCase.MISTAKE_IDENTITY, (x,), composite=True),
        ]

    def run(self) -> tuple[list[Segment], list[ProvenanceTag]]:
        pr = self.profile
        table = [(pr.p_split, self.split), (pr.p_merge, self.merge), (pr.p_miss, self.miss),
                 (pr.p_relabel, self.relabel), (pr.p_ba3, self.ba3)]
        out: list[Segment] = []
        tags: list[ProvenanceTag] = []
        i = 0
        while i < len(self.segs):
            result = None
            for _ in range(MAX_ATTEMPTS):
                u = self.rng.random()
                action = self.jitter
                for p, fn in table:
                    if u < p:
                        action = fn
                        break
                    u -= p
                result = action(i)
                if result is not None:
                    break
            if result is None:
                g = self.segs[i]
                result = [g], [ProvenanceTag((i,), Perturbation.NOOP, MatchCase.AGREEMENT, (g,))]
            segs, new_tags = result
            out.extend(segs)
            tags.extend(new_tags)
            i = max(t for tag in new_tags for t in tag.gt_indices) + 1
        return out, tags


def perturb(
    timeline: Timeline,
    profile: NoiseProfile,
    seed: int,
    rater_id: str = "r2",
    cfg: TimingConfig = DEFAULT_TIMING,
) -> tuple[Timeline, list[ProvenanceTag]]:
    """Derive a second rater's timeline from ``timeline`` with tagged perturbations."""
    segs, tags = _Perturber(timeline, profile, _rng(seed, 1), cfg).run()
    result = Timeline(timeline.meal_id, rater_id, tuple(sorted(segs, key=Segment.sort_key)))
    issues = validate_timeline(result, cfg)
    if issues:
        raise RuntimeError(f"perturbation produced an invalid timeline: {issues[0]}")
    return result, tags


@dataclass(frozen=True)
class SimulatedMeal:
    truth: Timeline
    perturbed: Timeline
    events: tuple[IndexEvent, ...]
    tags: tuple[ProvenanceTag, ...]


def meal_seed(corpus_seed: int, ordinal: int) -> int:
    return corpus_seed ^ ordinal


def simulate_meal(
    model: MealModel,
    profile: NoiseProfile,
    seed: int,
    meal_id: str = "meal",
    cfg: TimingConfig = DEFAULT_TIMING,
) -> SimulatedMeal:
    truth, events = generate_meal(model, seed, meal_id, "r1", cfg)
    perturbed, tags = perturb(truth, profile, seed, "r2", cfg)
    return SimulatedMeal(truth, perturbed, tuple(events), tuple(tags))


def simulate_corpus(
    model: MealModel,
    profile: NoiseProfile,
    n_meals: int,
    seed: int = 0,
    cfg: TimingConfig = DEFAULT_TIMING,
) -> list[SimulatedMeal]:
    return [simulate_meal(model, profile, meal_seed(seed, k), f"meal_{k:04d}", cfg)
            for k in range(n_meals)]


def write_corpus(root: str | Path, meals: Sequence[SimulatedMeal]) -> None:
    for meal in meals:
        meal_dir = write_meal(root, [meal.truth, meal.perturbed], meal.events)
        with open(meal_dir / "provenance.jsonl", "w") as fh:
            for tag in meal.tags:
                fh.write(json.dumps(tag.to_record()) + "\n")


# -- config file -----------------------------------------------------------

def _law(raw: str) -> DurationLaw:
    return DurationLaw(*(float(x) for x in raw.split(",")))


def load_config(path: str | Path) -> tuple[MealModel, NoiseProfile, int]:
    """Read a simulator config (INI syntax). See the README for the keys."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    model = MealModel()
    if parser.has_section("weights"):
        model = replace(model, weights={GestureKind(k): float(v) for k, v in parser["weights"].items()})
    if parser.has_section("durations"):
        durations = dict(model.durations)
        durations.update({GestureKind(k): _law(v) for k, v in parser["durations"].items()})
        model = replace(model, durations=durations)
    if parser.has_section("meal"):
        sec = parser["meal"]
        changes = {}
        if "length_s" in sec:
            changes["length_s"] = sec.getfloat("length_s")
        if "p_other_gap" in sec:
            changes["p_other_gap"] = sec.getfloat("p_other_gap")
        if "transition" in sec:
            changes["transition"] = _law(sec["transition"])
        if "other" in sec:
            changes["other"] = _law(sec["other"])
        model = replace(model, **changes)
    profile = NoiseProfile()
    if parser.has_section("noise"):
        profile = NoiseProfile(**{k: float(v) for k, v in parser["noise"].items()})
    meals = parser.getint("corpus", "meals", fallback=20)
    return model, profile, meals
