"""Command-line interface.

Exit status: 0 success, 1 validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import sim
from .indexcmp import compare_to_index
from .ingest import Corpus, Unit, dump_union, load_corpus
from .matcher import MatchReport, match_pair
from .model import TimingConfig, Timeline, dominant_only
from .stats import duration_stats, index_table, reliability_table

log = logging.getLogger("gesturelex")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
FORMAT_SUFFIX = {"text": "txt", "csv": "csv", "json-lines": "jsonl"}


@dataclass(frozen=True)
class MealResult:
    meal_id: str
    n_raters: int
    union: Timeline
    union_cases: tuple[str, ...]
    report: MatchReport | None
    probes: tuple[MatchReport, ...]


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {raw}")
    return value


def _match_meal(meal_id: str, timelines: Sequence[Timeline], events, cfg: TimingConfig) -> MealResult:
    """First two raters (by id) are matched; any further rater is compared to their union."""
    timelines = sorted(timelines, key=lambda t: t.rater_id)
    if len(timelines) == 1:
        only = timelines[0]
        return MealResult(meal_id, 1, only, ("",) * len(only), None, ())
    report = match_pair(timelines[0], timelines[1], events, cfg)
    probes = tuple(match_pair(t, report.union, events, cfg) for t in timelines[2:])
    return MealResult(meal_id, len(timelines), report.union,
                      tuple(c.value for c in report.union_cases), report, probes)


def _match_corpus(corpus: Corpus, cfg: TimingConfig, jobs: int) -> list[MealResult]:
    meal_ids = sorted(corpus.meals)
    args = [(m, corpus.meals[m], dominant_only(corpus.index_events.get(m, [])), cfg) for m in meal_ids]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_match_meal, *zip(*args)))
    return [_match_meal(*a) for a in args]


def _load(args, cfg: TimingConfig) -> Corpus | None:
    corpus, issues = load_corpus(args.corpus, cfg, Unit(args.unit), args.jobs)
    for issue in issues:
        print(issue, file=sys.stderr)
    if issues:
        return None
    if not corpus.meals:
        print("no meals found", file=sys.stderr)
        return None
    return corpus


def _emit(text: str, args, name: str) -> None:
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{FORMAT_SUFFIX[args.format]}").write_text(text)


def cmd_validate(args, cfg: TimingConfig) -> int:
    corpus, issues = load_corpus(args.corpus, cfg, Unit(args.unit), args.jobs)
    for issue in issues:
        print(issue)
    if not corpus.meals and not issues:
        print("no meals found")
        return EXIT_INVALID
    if issues:
        print(f"{len(issues)} issue(s)")
        return EXIT_INVALID
    n = sum(len(t) for t in corpus.meals.values())
    print(f"ok: {len(corpus.meals)} meal(s), {n} timeline(s)")
    return EXIT_OK


def cmd_stats(args, cfg: TimingConfig) -> int:
    corpus = _load(args, cfg)
    if corpus is None:
        return EXIT_INVALID
    _emit(duration_stats(corpus, cfg).render(args.format), args, "durations")
    return EXIT_OK


def cmd_match(args, cfg: TimingConfig) -> int:
    corpus = _load(args, cfg)
    if corpus is None:
        return EXIT_INVALID
    results = _match_corpus(corpus, cfg, args.jobs)
    reports = [r.report for r in results if r.report is not None]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            meal_dir = out / r.meal_id
            meal_dir.mkdir(exist_ok=True)
            (meal_dir / "union.csv").write_text(dump_union(r.union, r.union_cases, cfg))
        with open(out / "match_report.jsonl", "w") as fh:
            for r in results:
                if r.report is None:
                    fh.write(json.dumps({"meal": r.meal_id, "single_rater": r.union.rater_id}) + "\n")
                    continue
                for rec in r.report.to_records():
                    fh.write(json.dumps(rec) + "\n")
        probes = [p for r in results for p in r.probes]
        if probes:
            with open(out / "probe_report.jsonl", "w") as fh:
                for p in probes:
                    for rec in p.to_records():
                        fh.write(json.dumps(rec) + "\n")
    single = sum(1 for r in results if r.n_raters == 1)
    if single:
        log.info("%d single-rater meal(s) passed through as their own union", single)
    _emit(reliability_table(reports).render(args.format), args, "reliability")
    probes = [p for r in results for p in r.probes]
    if probes and args.format == "text":
        sys.stdout.write("\nadditional raters against the union:\n")
        sys.stdout.write(reliability_table(probes).render("text"))
    return EXIT_OK


def cmd_index_compare(args, cfg: TimingConfig) -> int:
    corpus = _load(args, cfg)
    if corpus is None:
        return EXIT_INVALID
    results = _match_corpus(corpus, cfg, args.jobs)
    by_coverage: dict[int, list] = {}
    records = []
    for r in results:
        events = corpus.index_events.get(r.meal_id)
        if not events:
            log.warning("meal %s has no index labels; skipped", r.meal_id)
            continue
        outcomes, counts = compare_to_index(r.union, dominant_only(events), kind_strict=not args.any_intake)
        by_coverage.setdefault(min(r.n_raters, 2), []).append(counts)
        for o in outcomes:
            records.append({
                "meal": r.meal_id,
                "outcome": o.match.value,
                "gesture": None if o.gesture is None else [o.gesture.kind.value, o.gesture.start, o.gesture.end],
                "events": [[e.kind.value, e.t] for e in o.events],
            })
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "index_outcomes.jsonl", "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
    _emit(index_table(by_coverage).render(args.format), args, "index_compare")
    return EXIT_OK


def cmd_simulate(args, cfg: TimingConfig) -> int:
    if not args.out:
        print("simulate needs --out", file=sys.stderr)
        return EXIT_USAGE
    if args.config:
        model, profile, meals = sim.load_config(args.config)
    else:
        model, profile, meals = sim.MealModel(), sim.NoiseProfile(), 20
    if args.meals is not None:
        meals = args.meals
    corpus = sim.simulate_corpus(model, profile, meals, args.seed, cfg)
    sim.write_corpus(args.out, corpus)
    print(f"wrote {meals} meal(s) to {args.out}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "match": cmd_match,
    "index-compare": cmd_index_compare,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", help="corpus root (<meal_id>/rater_<id>.csv)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=list(FORMAT_SUFFIX), default="text")
    common.add_argument("--unit", choices=[u.value for u in Unit], default="ms",
                        help="time unit of input files")
    common.add_argument("--jobs", type=_positive_int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance-ms", type=_positive_int, default=1000)
    common.add_argument("--gap-other-ms", type=_positive_int, default=4000)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gesturelex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "stats", "match"):
        sub.add_parser(name, parents=[common])
    ic = sub.add_parser("index-compare", parents=[common])
    ic.add_argument("--any-intake", action="store_true",
                    help="let bite and drink events count for either intake kind")
    simulate = sub.add_parser("simulate", parents=[common])
    simulate.add_argument("--config", help="simulator config file (INI)")
    simulate.add_argument("--meals", type=_positive_int)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = TimingConfig(tolerance_ms=args.tolerance_ms, gap_other_ms=args.gap_other_ms,
                           min_other_ms=max(args.gap_other_ms, 1000))
    except ValueError as exc:
        parser.error(str(exc))
    if args.command != "simulate":
        if not args.corpus:
            parser.error("--corpus is required")
        if not Path(args.corpus).is_dir():
            parser.error(f"corpus directory {args.corpus!r} does not exist")
    return COMMANDS[args.command](args, cfg)


if __name__ == "__main__":
    sys.exit(main())
