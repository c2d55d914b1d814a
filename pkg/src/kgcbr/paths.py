"""Bounded-length path enumeration over train edges and per-entity count slices.

A path type is the tuple of relation ids along a path; multiplicities count
distinct edge instantiations. Paths may revisit entities, but a step may not
immediately re-cross the edge instance it just arrived by in the inverse
direction (such two-step echoes inflate every count identically and carry no
signal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kg import KnowledgeGraph

DEFAULT_PATH_BUDGET = 1_000_000

PathType = tuple[int, ...]


class MissingAnswersError(ValueError):
    """paths_to_answers called for an (entity, relation) with no direct edges."""


@dataclass
class PathEnumeration:
    """All paths of length <= n from one entity.

    `types` maps each realized path type to its end-entity multiplicity map,
    in breadth-first order (shorter types first, then by relation-id
    sequence). `truncated` is set when the instance budget cut enumeration
    short.
    """

    source: int
    max_len: int
    types: dict[PathType, dict[int, int]] = field(default_factory=dict)
    truncated: bool = False

    def instance_count(self) -> int:
        return sum(sum(ends.values()) for ends in self.types.values())


def enumerate_paths(
    kg: KnowledgeGraph, e: int, n: int, budget: int = DEFAULT_PATH_BUDGET
) -> PathEnumeration:
    """Breadth-first enumeration of every path type of length 1..n starting at e.

    Multiplicity is counted at the edge-instantiation level: an end entity's
    count is the number of distinct edge sequences of that type reaching it.
    """
    if n < 1:
        raise ValueError("max path length must be >= 1")
    result = PathEnumeration(e, n)
    # frontier state: per path type, (node, prev_node, prev_rel) -> instance count;
    # the last edge is kept to rule out immediate inverse re-crossings
    frontier: dict[PathType, dict[tuple[int, int | None, int | None], int]] = {
        (): {(e, None, None): 1}
    }
    emitted = 0
    for _ in range(n):
        nxt: dict[PathType, dict[tuple[int, int | None, int | None], int]] = {}
        for prefix in sorted(frontier):
            states = frontier[prefix]
            for (v, prev, prev_rel), cnt in states.items():
                for r, targets in kg.out_edges_grouped(v):
                    banned = prev if prev_rel is not None and r == prev_rel ^ 1 else None
                    ptype = prefix + (r,)
                    bucket = nxt.setdefault(ptype, {})
                    for t in targets:
                        if t == banned:
                            continue
                        key = (t, v, r)
                        bucket[key] = bucket.get(key, 0) + cnt
        frontier = {}
        for ptype in sorted(nxt):
            states = nxt[ptype]
            if not states:
                continue
            ends: dict[int, int] = {}
            for (t, _, _), cnt in states.items():
                ends[t] = ends.get(t, 0) + cnt
            result.types[ptype] = ends
            frontier[ptype] = states
            emitted += sum(ends.values())
            if emitted > budget:
                result.truncated = True
                return result
    return result


def traverse(kg: KnowledgeGraph, e: int, ptype: PathType) -> frozenset[int]:
    """Entities reachable from e by following the relation sequence over train edges."""
    states: set[tuple[int, int | None]] = {(e, None)}
    prev_rel: int | None = None
    for r in ptype:
        nxt: set[tuple[int, int | None]] = set()
        for v, prev in states:
            targets = kg.out_edges_grouped_lookup(v, r)
            if not targets:
                continue
            banned = prev if prev_rel is not None and r == prev_rel ^ 1 else None
            for t in targets:
                if t != banned:
                    nxt.add((t, v))
        if not nxt:
            return frozenset()
        states = nxt
        prev_rel = r
    return frozenset(v for v, _ in states)


def paths_to_answers(
    kg: KnowledgeGraph, e: int, rq: int, n: int, budget: int = DEFAULT_PATH_BUDGET
) -> dict[PathType, int]:
    """Instance counts of path types from e ending at its direct rq-neighbors.

    The single-relation type (rq,) is always present: direct edges are
    length-1 paths to their own targets.
    """
    answers = kg.neighbors(e, rq)
    if not answers:
        raise MissingAnswersError(
            f"entity {e} has no train edge of relation {rq}; P_n(e, rq) is undefined"
        )
    answer_set = frozenset(answers)
    enum = enumerate_paths(kg, e, n, budget)
    out: dict[PathType, int] = {}
    for ptype, ends in enum.types.items():
        hits = sum(c for t, c in ends.items() if t in answer_set)
        if hits:
            out[ptype] = hits
    return out


@dataclass
class EntitySlice:
    """One entity's contribution to the cluster-level count statistics.

    `totals[p]` is the instance count of path type p among all paths of
    length <= n from the entity (the precision denominators). `succ[rq][p]`
    is the count of those instances ending at a direct rq-neighbor (prior
    numerators and denominators, and precision numerators); an rq key exists
    iff the entity has at least one rq edge.
    """

    entity: int
    totals: dict[PathType, int]
    succ: dict[int, dict[PathType, int]]
    truncated: bool = False


def entity_slice(
    kg: KnowledgeGraph, e: int, n: int, budget: int = DEFAULT_PATH_BUDGET
) -> EntitySlice:
    """Enumerate once and slice the counts for every query relation e has."""
    enum = enumerate_paths(kg, e, n, budget)
    totals = {p: sum(ends.values()) for p, ends in enum.types.items()}
    succ: dict[int, dict[PathType, int]] = {}
    for rq in kg.out_relation_types(e):
        answer_set = frozenset(kg.neighbors(e, rq))
        per: dict[PathType, int] = {}
        for ptype, ends in enum.types.items():
            hits = sum(c for t, c in ends.items() if t in answer_set)
            if hits:
                per[ptype] = hits
        succ[rq] = per
    return EntitySlice(e, totals, succ, enum.truncated)


def per_entity_counts(
    kg: KnowledgeGraph, e: int, rq: int, n: int, budget: int = DEFAULT_PATH_BUDGET
) -> tuple[dict[PathType, int], dict[PathType, int]]:
    """(success counts, total counts) of path types for one (entity, rq) slot."""
    if not kg.neighbors(e, rq):
        raise MissingAnswersError(
            f"entity {e} has no train edge of relation {rq}; nothing to count"
        )
    sl = entity_slice(kg, e, n, budget)
    return sl.succ[rq], sl.totals
