"""Segment-based eating-gesture labels: validation, inter-rater matching, reliability tables."""
from .indexcmp import IndexMatch, compare_to_index
from .ingest import Corpus, ValidationError, ValidationIssue, load_corpus, parse_index_file, parse_segment_file
from .matcher import MatchCase, MatchReport, Side, match_pair, merge_boundary
from .model import GestureKind, Hand, IndexEvent, Segment, Timeline, TimingConfig, derive_other_segments
from .stats import duration_stats, index_table, rater_table, reliability_table

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "GestureKind",
    "Hand",
    "IndexEvent",
    "IndexMatch",
    "MatchCase",
    "MatchReport",
    "Segment",
    "Side",
    "Timeline",
    "TimingConfig",
    "ValidationError",
    "ValidationIssue",
    "compare_to_index",
    "derive_other_segments",
    "duration_stats",
    "index_table",
    "load_corpus",
    "match_pair",
    "merge_boundary",
    "parse_index_file",
    "parse_segment_file",
    "rater_table",
    "reliability_table",
]
