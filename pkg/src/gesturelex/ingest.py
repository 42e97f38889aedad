"""Reading, validating and writing label files.

Corpus layout::

    corpus/<meal_id>/rater_<rater_id>.csv   kind,start_ms,end_ms
    corpus/<meal_id>/index.csv              kind,t_ms,hand

Validation collects every problem in a file instead of stopping at the first.
"""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .model import (
    DEFAULT_TIMING,
    GestureKind,
    Hand,
    IndexEvent,
    Segment,
    Timeline,
    TimingConfig,
    derive_other_segments,
)

log = logging.getLogger(__name__)

SEGMENT_HEADER = ("kind", "start_ms", "end_ms")
UNION_HEADER = ("kind", "start_ms", "end_ms", "case", "derived")
INDEX_HEADER = ("kind", "t_ms", "hand")

RATER_PREFIX = "rater_"


def _is_header(row: list[str]) -> bool:
    # column names vary with the time unit, so only the leading "kind" is checked
    return bool(row) and row[0].strip().lower() == "kind"

INDEX_FILE = "index.csv"
# files written next to rater files that the loader knows to skip
SIDECARS = frozenset({"provenance.jsonl", "union.csv"})

SAMPLE_RATE_HZ = 15


class Unit(Enum):
    MS = "ms"
    SAMPLES15HZ = "samples15hz"


class Rule(Enum):
    MIN_DURATION = "MinDuration"
    OVERLAP = "Overlap"
    UNORDERED = "Unordered"
    BAD_KIND = "BadKind"
    NEGATIVE_TIME = "NegativeTime"
    SYNTAX = "Syntax"


@dataclass(frozen=True)
class ValidationIssue:
    meal_id: str
    rater_id: str
    ordinal: int | None
    rule: Rule
    message: str
    line: int | None = None

    def __str__(self) -> str:
        where = f"{self.meal_id}/{self.rater_id}"
        if self.line is not None:
            where += f":{self.line}"
        return f"{where}: {self.rule.value}: {self.message}"


class ValidationError(Exception):
    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


@dataclass
class Corpus:
    meals: dict[str, list[Timeline]] = field(default_factory=dict)
    index_events: dict[str, list[IndexEvent]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for meal_id, timelines in self.meals.items():
            raters = [t.rater_id for t in timelines]
            if len(set(raters)) != len(raters):
                raise ValueError(f"duplicate rater in meal {meal_id}")
            for t in timelines:
                if t.meal_id != meal_id:
                    raise ValueError(f"timeline for {t.meal_id} filed under {meal_id}")

    def timelines(self) -> Iterable[Timeline]:
        for meal_id in sorted(self.meals):
            yield from self.meals[meal_id]


def samples_to_ms(n: int) -> int:
    return (2000 * n + SAMPLE_RATE_HZ) // (2 * SAMPLE_RATE_HZ)


def _rows(data: bytes | str, meal_id: str, rater_id: str) -> list[tuple[int, list[str]]]:
    try:
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    except UnicodeDecodeError as exc:
        raise ValidationError([ValidationIssue(meal_id, rater_id, None, Rule.SYNTAX,
                                               f"not UTF-8: {exc}")]) from None
    out = []
    issues = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            row = next(csv.reader([stripped]))
        except csv.Error as exc:
            issues.append(ValidationIssue(meal_id, rater_id, None, Rule.SYNTAX, str(exc), lineno))
            continue
        out.append((lineno, [c.strip() for c in row]))
    if issues:
        raise ValidationError(issues)
    return out


def _parse_time(raw: str, unit: Unit) -> int:
    value = int(raw)
    if unit is Unit.SAMPLES15HZ and value >= 0:
        return samples_to_ms(value)
    return value


def validate_segments(
    segments: Sequence[Segment],
    cfg: TimingConfig = DEFAULT_TIMING,
    meal_id: str = "",
    rater_id: str = "",
) -> list[ValidationIssue]:
    """Semantic checks on already-constructed segments (min duration, order, overlap)."""
    issues = []

    def issue(i, rule, msg):
        issues.append(ValidationIssue(meal_id, rater_id, i, rule, msg))

    for i, seg in enumerate(segments):
        if seg.kind is GestureKind.OTHER:
            issue(i, Rule.BAD_KIND, "'other' is derived from gaps and may not be labeled")
        need = cfg.min_duration(seg.kind)
        if seg.duration < need:
            issue(i, Rule.MIN_DURATION, f"{seg.kind.value} lasts {seg.duration} ms < {need} ms")
    for i in range(1, len(segments)):
        prev, cur = segments[i - 1], segments[i]
        if cur.start < prev.start:
            issue(i, Rule.UNORDERED, f"starts at {cur.start} before previous row ({prev.start})")
    ordered = sorted(range(len(segments)), key=lambda i: segments[i].sort_key())
    for i, j in zip(ordered, ordered[1:]):
        if segments[j].start < segments[i].end:
            issue(j, Rule.OVERLAP, f"[{segments[j].start},{segments[j].end}] overlaps "
                                   f"[{segments[i].start},{segments[i].end}]")
    return issues


def validate_timeline(timeline: Timeline, cfg: TimingConfig = DEFAULT_TIMING) -> list[ValidationIssue]:
    return validate_segments(timeline.segments, cfg, timeline.meal_id, timeline.rater_id)


def parse_segment_file(
    data: bytes | str,
    cfg: TimingConfig = DEFAULT_TIMING,
    *,
    meal_id: str = "",
    rater_id: str = "",
    unit: Unit = Unit.MS,
) -> Timeline:
    """Parse a rater (or union) segment file.

    Raises :class:`ValidationError` listing every problem found. Rows marked
    ``derived=1`` (``other`` spans in union files) are accepted and skipped.
    """
    issues: list[ValidationIssue] = []
    segments: list[Segment] = []
    origin: list[tuple[int, int]] = []  # (row ordinal, line) per accepted segment

    def issue(ordinal, rule, msg, line):
        issues.append(ValidationIssue(meal_id, rater_id, ordinal, rule, msg, line))

    rows = _rows(data, meal_id, rater_id)
    header = SEGMENT_HEADER
    if rows and _is_header(rows[0][1]):
        header = tuple(c.strip().lower() for c in rows[0][1])
        rows = rows[1:]
    has_derived = "derived" in header
    derived_col = header.index("derived") if has_derived else None

    ordinal = -1
    for lineno, row in rows:
        if len(row) != len(header):
            issue(None, Rule.SYNTAX, f"expected {len(header)} columns, got {len(row)}", lineno)
            continue
        if derived_col is not None and row[derived_col] == "1":
            if row[0].lower() != GestureKind.OTHER.value:
                issue(None, Rule.BAD_KIND, "only 'other' rows may be derived", lineno)
            continue
        ordinal += 1
        kind_raw, start_raw, end_raw = row[:3]
        try:
            start = _parse_time(start_raw, unit)
            end = _parse_time(end_raw, unit)
        except ValueError:
            issue(ordinal, Rule.SYNTAX, f"non-integer time in {row!r}", lineno)
            continue
        try:
            kind = GestureKind(kind_raw.lower())
        except ValueError:
            issue(ordinal, Rule.BAD_KIND, f"unknown kind {kind_raw!r}", lineno)
            continue
        if kind is GestureKind.OTHER:
            issue(ordinal, Rule.BAD_KIND, "'other' is derived from gaps and may not be labeled", lineno)
            continue
        if start < 0 or end < 0:
            issue(ordinal, Rule.NEGATIVE_TIME, f"negative time in [{start},{end}]", lineno)
            continue
        if end <= start:
            issue(ordinal, Rule.UNORDERED, f"end {end} is not after start {start}", lineno)
            continue
        segments.append(Segment(start, end, kind))
        origin.append((ordinal, lineno))

    for vi in validate_segments(segments, cfg, meal_id, rater_id):
        row_ordinal, lineno = origin[vi.ordinal]
        issues.append(ValidationIssue(vi.meal_id, vi.rater_id, row_ordinal, vi.rule,
                                      vi.message, lineno))
    if issues:
        raise ValidationError(issues)
    return Timeline(meal_id, rater_id, tuple(segments))


def parse_index_file(
    data: bytes | str, *, meal_id: str = "", unit: Unit = Unit.MS
) -> list[IndexEvent]:
    """Parse single-timestamp intake labels, sorted by time.

    Non-dominant-hand events are kept; use :func:`model.dominant_only` before matching.
    """
    issues: list[ValidationIssue] = []
    events: list[IndexEvent] = []

    def issue(ordinal, rule, msg, line):
        issues.append(ValidationIssue(meal_id, "index", ordinal, rule, msg, line))

    rows = _rows(data, meal_id, "index")
    if rows and _is_header(rows[0][1]):
        rows = rows[1:]
    for ordinal, (lineno, row) in enumerate(rows):
        if len(row) != 3:
            issue(ordinal, Rule.SYNTAX, f"expected 3 columns, got {len(row)}", lineno)
            continue
        kind_raw, t_raw, hand_raw = row
        try:
            t = _parse_time(t_raw, unit)
        except ValueError:
            issue(ordinal, Rule.SYNTAX, f"non-integer time {t_raw!r}", lineno)
            continue
        try:
            kind = GestureKind(kind_raw.lower())
        except ValueError:
            kind = None
        if kind is None or not kind.is_intake:
            issue(ordinal, Rule.BAD_KIND, f"index labels must be bite or drink, got {kind_raw!r}", lineno)
            continue
        try:
            hand = Hand(hand_raw.lower().replace("-", "").replace("_", ""))
        except ValueError:
            issue(ordinal, Rule.SYNTAX, f"unknown hand {hand_raw!r}", lineno)
            continue
        if t < 0:
            issue(ordinal, Rule.NEGATIVE_TIME, f"negative time {t}", lineno)
            continue
        events.append(IndexEvent(meal_id, t, kind, hand))
    if issues:
        raise ValidationError(issues)
    return sorted(events, key=lambda e: (e.t, e.kind.value, e.hand.value))


def dump_segments(timeline: Timeline) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SEGMENT_HEADER)
    for seg in timeline.segments:
        w.writerow((seg.kind.value, seg.start, seg.end))
    return buf.getvalue()


def dump_union(
    timeline: Timeline,
    cases: Sequence[str] | None = None,
    cfg: TimingConfig = DEFAULT_TIMING,
) -> str:
    """Union file: explicit rows carry their match case, gap-derived ``other`` rows ``derived=1``."""
    cases = list(cases) if cases is not None else [""] * len(timeline.segments)
    rows = [(s, c, 0) for s, c in zip(timeline.segments, cases)]
    rows += [(s, "", 1) for s in derive_other_segments(timeline, cfg)]
    rows.sort(key=lambda r: r[0].sort_key())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(UNION_HEADER)
    for seg, case, derived in rows:
        w.writerow((seg.kind.value, seg.start, seg.end, case, derived))
    return buf.getvalue()


def dump_index(events: Iterable[IndexEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INDEX_HEADER)
    for e in events:
        w.writerow((e.kind.value, e.t, e.hand.value))
    return buf.getvalue()


def _load_meal(meal_dir: Path, cfg: TimingConfig, unit: Unit):
    meal_id = meal_dir.name
    timelines, events, issues = [], [], []
    for path in sorted(meal_dir.iterdir()):
        name = path.name
        if name == INDEX_FILE:
            try:
                events = parse_index_file(path.read_bytes(), meal_id=meal_id, unit=unit)
            except ValidationError as exc:
                issues.extend(exc.issues)
        elif name.startswith(RATER_PREFIX) and name.endswith(".csv"):
            rater_id = name[len(RATER_PREFIX):-len(".csv")]
            try:
                timelines.append(parse_segment_file(
                    path.read_bytes(), cfg, meal_id=meal_id, rater_id=rater_id, unit=unit))
            except ValidationError as exc:
                issues.extend(exc.issues)
        elif name in SIDECARS:
            continue
        else:
            log.warning("ignoring unrecognised file %s", path)
    return meal_id, timelines, events, issues


def load_corpus(
    root: str | Path,
    cfg: TimingConfig = DEFAULT_TIMING,
    unit: Unit = Unit.MS,
    jobs: int = 1,
) -> tuple[Corpus, list[ValidationIssue]]:
    """Load every meal directory under ``root``; issues from all files are aggregated."""
    root = Path(root)
    meal_dirs = sorted(p for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda d: _load_meal(d, cfg, unit), meal_dirs))
    corpus = Corpus()
    issues: list[ValidationIssue] = []
    for meal_id, timelines, events, meal_issues in results:
        issues.extend(meal_issues)
        if timelines:
            corpus.meals[meal_id] = sorted(timelines, key=lambda t: t.rater_id)
        if events:
            corpus.index_events[meal_id] = events
    return corpus, issues


def write_meal(
    root: str | Path,
    timelines: Iterable[Timeline],
    events: Iterable[IndexEvent] = (),
) -> Path:
    """Write one meal in corpus layout; returns the meal directory."""
    timelines = list(timelines)
    meal_dir = Path(root) / timelines[0].meal_id
    meal_dir.mkdir(parents=True, exist_ok=True)
    for t in timelines:
        (meal_dir / f"{RATER_PREFIX}{t.rater_id}.csv").write_text(dump_segments(t))
    events = list(events)
    if events:
        (meal_dir / INDEX_FILE).write_text(dump_index(events))
    return meal_dir
