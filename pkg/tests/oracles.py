"""Brute-force references, kept independent of the code under test."""
from __future__ import annotations

import statistics


def all_pairs_overlap(a, b):
    return sorted(
        (i, j)
        for i, x in enumerate(a)
        for j, y in enumerate(b)
        if min(x.end, y.end) - max(x.start, y.start) > 0
    )


def flood_components(a, b):
    """Same-kind overlap components by repeated flood fill over an adjacency list."""
    nodes = [("a", i) for i in range(len(a))] + [("b", j) for j in range(len(b))]
    seg = {("a", i): s for i, s in enumerate(a)} | {("b", j): s for j, s in enumerate(b)}
    adj = {n: [] for n in nodes}
    for u in nodes:
        for v in nodes:
            if u[0] == v[0]:
                continue
            x, y = seg[u], seg[v]
            if x.kind == y.kind and min(x.end, y.end) > max(x.start, y.start):
                adj[u].append(v)
    seen, comps = set(), []
    for n in nodes:
        if n in seen:
            continue
        stack, comp = [n], set()
        while stack:
            u = stack.pop()
            if u in comp:
                continue
            comp.add(u)
            stack.extend(adj[u])
        seen |= comp
        comps.append(frozenset(comp))
    return set(comps)


def recount_durations(timelines, gap_other_ms=4000):
    """Single-pass per-kind duration summary including gap-derived Other."""
    acc = {}
    for t in timelines:
        cursor = 0
        for s in t.segments:
            if s.start - cursor >= gap_other_ms:
                acc.setdefault("other", []).append(s.start - cursor)
            acc.setdefault(s.kind.value, []).append(s.end - s.start)
            cursor = s.end
    return {
        k: (len(v), sum(v) / len(v), statistics.pstdev(v), min(v), max(v))
        for k, v in acc.items()
    }


def merge_rule(t1, t2, is_start, tol=1000):
    """Boundary merge read straight off the rule: average inside tolerance, else widest."""
    if abs(t1 - t2) <= tol:
        twice = t1 + t2
        return twice // 2 + (twice % 2)
    if is_start:
        return t1 if t1 < t2 else t2
    return t1 if t1 > t2 else t2
