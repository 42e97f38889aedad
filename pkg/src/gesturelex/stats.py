"""Aggregate tables: gesture durations, case breakdowns, index comparison, per-rater."""
from __future__ import annotations

import csv
import io
import json
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .indexcmp import IndexCounts
from .ingest import Corpus
from .matcher import MatchCase, MatchReport
from .model import DEFAULT_TIMING, GestureKind, TimingConfig, derive_other_segments

TABLE_KINDS = (GestureKind.BITE, GestureKind.DRINK, GestureKind.REST, GestureKind.UTENSILING)
DURATION_KINDS = (GestureKind.BITE, GestureKind.DRINK, GestureKind.UTENSILING,
                  GestureKind.REST, GestureKind.OTHER)


def pct(count: int, total: int) -> float:
    return 100.0 * count / total if total else 0.0


# -- rendering -------------------------------------------------------------

def render(headers: Sequence[str], rows: Sequence[Sequence], fmt: str = "text") -> str:
    """Render rows as an aligned text table, CSV, or one JSON object per line."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(headers)
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "json-lines":
        return "".join(json.dumps(dict(zip(headers, r))) + "\n" for r in rows)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    cells = [list(map(str, headers))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
             for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# -- durations -------------------------------------------------------------

@dataclass(frozen=True)
class KindDurations:
    count: int
    mean_ms: float
    std_ms: float
    min_ms: int
    max_ms: int

    @classmethod
    def of(cls, durations: Sequence[int]) -> KindDurations:
        if not durations:
            return cls(0, 0.0, 0.0, 0, 0)
        return cls(len(durations), statistics.fmean(durations), statistics.pstdev(durations),
                   min(durations), max(durations))


@dataclass(frozen=True)
class DurationStats:
    per_kind: Mapping[GestureKind, KindDurations]

    def __getitem__(self, kind: GestureKind) -> KindDurations:
        return self.per_kind[kind]

    def rows(self, precise: bool = False) -> list[list]:
        out = []
        for kind in DURATION_KINDS:
            d = self.per_kind[kind]
            if precise:
                out.append([kind.value, d.count, d.mean_ms, d.std_ms, d.min_ms, d.max_ms])
            else:
                out.append([kind.value, d.count, f"{d.mean_ms / 1000:.1f}±{d.std_ms / 1000:.1f}",
                            f"{d.min_ms / 1000:.1f}", f"{d.max_ms / 1000:.1f}"])
        return out

    def render(self, fmt: str = "text") -> str:
        if fmt == "text":
            return render(["type", "#gestures", "mean±std (s)", "min (s)", "max (s)"], self.rows())
        return render(["type", "count", "mean_ms", "std_ms", "min_ms", "max_ms"], self.rows(True), fmt)


def duration_stats(corpus: Corpus, cfg: TimingConfig = DEFAULT_TIMING) -> DurationStats:
    """Pool every rater's labels (plus gap-derived Other) and summarise durations per kind.

    The standard deviation is the population one.
    """
    durations: dict[GestureKind, list[int]] = {k: [] for k in DURATION_KINDS}
    for timeline in corpus.timelines():
        for seg in timeline.segments:
            durations[seg.kind].append(seg.duration)
        for seg in derive_other_segments(timeline, cfg):
            durations[GestureKind.OTHER].append(seg.duration)
    return DurationStats({k: KindDurations.of(v) for k, v in durations.items()})


# -- case breakdown --------------------------------------------------------

CASE_ROWS = (
    ("Agreement", (MatchCase.AGREEMENT,)),
    ("BA I", (MatchCase.BA_I,)),
    ("BA II", (MatchCase.BA_II,)),
    ("BA III", (MatchCase.BA_III,)),
    ("Mistake-missed", (MatchCase.MISTAKE_MISSED,)),
    ("Mistake-identity", (MatchCase.MISTAKE_IDENTITY,)),
    ("Overall mistake", (MatchCase.MISTAKE_MISSED, MatchCase.MISTAKE_IDENTITY)),
    ("Overall BA", (MatchCase.BA_I, MatchCase.BA_II, MatchCase.BA_III)),
    ("Overall agreement", (MatchCase.AGREEMENT, MatchCase.BA_I, MatchCase.BA_II, MatchCase.BA_III)),
    ("#Gestures", tuple(MatchCase)),
)
_ROW_CASES = dict(CASE_ROWS)


@dataclass
class ReliabilityTable:
    """Group counts per kind and case; the overall column sums the kinds."""

    counts: dict[GestureKind, Counter] = field(default_factory=lambda: {k: Counter() for k in TABLE_KINDS})

    @classmethod
    def from_counts(cls, counts: Mapping[GestureKind, Mapping[MatchCase, int]]) -> ReliabilityTable:
        table = cls()
        for kind, by_case in counts.items():
            table.counts.setdefault(kind, Counter()).update(by_case)
        return table

    def count(self, row: str, kind: GestureKind | None = None) -> int:
        cases = _ROW_CASES[row]
        kinds = self.counts if kind is None else {kind: self.counts.get(kind, Counter())}
        return sum(c[case] for c in kinds.values() for case in cases)

    def gestures(self, kind: GestureKind | None = None) -> int:
        return self.count("#Gestures", kind)

    def percent(self, row: str, kind: GestureKind | None = None) -> float:
        return pct(self.count(row, kind), self.gestures(kind))

    def rows(self, precise: bool = False) -> list[list]:
        columns = (None, *TABLE_KINDS)
        out = []
        for name, _ in CASE_ROWS:
            row: list = [name]
            for kind in columns:
                n = self.count(name, kind)
                if name == "#Gestures":
                    row.append(n)
                elif precise:
                    row.extend([n, self.percent(name, kind)])
                else:
                    row.append(f"{n} ({self.percent(name, kind):.1f}%)")
            out.append(row)
        return out

    def render(self, fmt: str = "text") -> str:
        names = ["all", *(k.value for k in TABLE_KINDS)]
        if fmt == "text":
            return render(["case", *names], self.rows())
        rows = []
        for name, _ in CASE_ROWS:
            for kind, label in zip((None, *TABLE_KINDS), names):
                rows.append([name, label, self.count(name, kind), round(self.percent(name, kind), 6)])
        return render(["case", "kind", "count", "percent"], rows, fmt)


def reliability_table(reports: Iterable[MatchReport]) -> ReliabilityTable:
    table = ReliabilityTable()
    for report in reports:
        for (kind, case), n in report.counts.items():
            table.counts.setdefault(kind, Counter())[case] += n
    return table


# -- index comparison ------------------------------------------------------

@dataclass
class IndexTable:
    """Index-label comparison split by how many raters labeled the meal."""

    columns: dict[str, IndexCounts] = field(default_factory=dict)

    def percent(self, column: str, row: str) -> float:
        c = self.columns.get(column, IndexCounts())
        return pct(getattr(c, row), c.gestures)

    def render(self, fmt: str = "text") -> str:
        names = list(self.columns)
        rows = []
        for row in ("agreement", "ambiguity", "missed"):
            if fmt == "text":
                rows.append([row, *(f"{getattr(self.columns[n], row)} ({self.percent(n, row):.1f}%)"
                                    for n in names)])
            else:
                rows.extend([row, n, getattr(self.columns[n], row), round(self.percent(n, row), 6)]
                            for n in names)
        if fmt == "text":
            rows.append(["#gestures", *(self.columns[n].gestures for n in names)])
            return render(["", *names], rows)
        rows.extend(["#gestures", n, self.columns[n].gestures, 100.0 if self.columns[n].gestures else 0.0]
                    for n in names)
        return render(["row", "column", "count", "percent"], rows, fmt)


def coverage_label(n_raters: int) -> str:
    return "one rater" if n_raters == 1 else "two raters" if n_raters == 2 else f"{n_raters} raters"


def index_table(counts_by_coverage: Mapping[int, Iterable[IndexCounts]]) -> IndexTable:
    """``counts_by_coverage`` maps rater count per meal to that coverage's per-meal counts."""
    table = IndexTable()
    for n in sorted(counts_by_coverage):
        total = IndexCounts()
        for c in counts_by_coverage[n]:
            total = total + c
        table.columns[coverage_label(n)] = total
    return table


# -- per rater -------------------------------------------------------------

@dataclass(frozen=True)
class RaterRow:
    rater: str
    meals: int
    exact: int
    ba: int
    mistake: int

    @property
    def total_agreement(self) -> int:
        return self.exact + self.ba

    @property
    def gestures(self) -> int:
        return self.total_agreement + self.mistake

    def percent(self, field_name: str) -> float:
        return pct(getattr(self, field_name), self.gestures)


@dataclass
class RaterTable:
    rows: list[RaterRow] = field(default_factory=list)

    def __getitem__(self, rater: str) -> RaterRow:
        for row in self.rows:
            if row.rater == rater:
                return row
        raise KeyError(rater)

    def __contains__(self, rater: str) -> bool:
        return any(r.rater == rater for r in self.rows)

    def render(self, fmt: str = "text") -> str:
        fields = ("total_agreement", "exact", "ba", "mistake")
        if fmt == "text":
            rows = [[r.rater, r.meals, r.gestures,
                     *(f"{getattr(r, f)} ({r.percent(f):.0f}%)" for f in fields)] for r in self.rows]
            return render(["rater", "meals", "#gestures", "total agreement", "agreement", "BA", "mistake"], rows)
        rows = [[r.rater, r.meals, r.gestures, *(getattr(r, f) for f in fields),
                 *(round(r.percent(f), 6) for f in fields)] for r in self.rows]
        return render(["rater", "meals", "gestures", *fields, *(f + "_pct" for f in fields)], rows, fmt)


def rater_table(reports: Iterable[MatchReport], min_meals: int = 8) -> RaterTable:
    """Per-rater breakdown.

    Agreement and boundary-ambiguity groups count for both raters of the meal;
    a mistake counts only against the rater it is attributed to.
    """
    meals: dict[str, set[str]] = defaultdict(set)
    tally: dict[str, Counter] = defaultdict(Counter)
    for report in reports:
        raters = (report.rater_a, report.rater_b)
        for r in raters:
            meals[r].add(report.meal_id)
        for g in report.groups:
            if g.case.is_mistake:
                if g.attributed_rater is not None:
                    tally[g.attributed_rater]["mistake"] += 1
            else:
                for r in raters:
                    tally[r]["ba" if g.case.is_boundary_ambiguity else "exact"] += 1
    rows = [RaterRow(r, len(meals[r]), tally[r]["exact"], tally[r]["ba"], tally[r]["mistake"])
            for r in sorted(meals) if len(meals[r]) >= min_meals]
    return RaterTable(rows)
