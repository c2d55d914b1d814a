"""Sparse binary entity vectors over outgoing relation types, and exact kNN retrieval.

An entity's vector has a 1 in the coordinate of every relation (inverses
included) for which it has at least one outgoing train edge. Cosine between
two such vectors is ``|dims_u & dims_v| / sqrt(|dims_u| * |dims_v|)``; it is
always computed from the exact integer intersection so scores are identical
whether they come from the vectorized or the scalar path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kg import KnowledgeGraph


class EmptyContextError(LookupError):
    """No eligible contextual entity exists for the query relation."""


@dataclass
class ContextualSet:
    """The retrieved cases for one query: entities similar to the query entity
    that have at least one train edge of the query relation."""

    query_entity: int
    query_relation: int
    members: list[tuple[int, float]]  # (entity, similarity), score desc, id asc


class EntityVectors:
    """Binary vectors for every entity in a graph snapshot.

    Rows track the graph: `refresh` rebuilds the rows of entities whose
    adjacency changed and grows the matrix when entities or relations were
    added (streaming mode).
    """

    def __init__(self, kg: KnowledgeGraph):
        self.kg = kg
        self._dims: list[tuple[int, ...]] = []
        self._matrix = np.zeros((0, kg.num_relations), dtype=np.float64)
        self.refresh(range(kg.num_entities))

    @property
    def num_dims(self) -> int:
        return self._matrix.shape[1]

    def refresh(self, entities) -> None:
        kg = self.kg
        if kg.num_relations > self._matrix.shape[1]:
            pad = kg.num_relations - self._matrix.shape[1]
            self._matrix = np.pad(self._matrix, ((0, 0), (0, pad)))
        if kg.num_entities > self._matrix.shape[0]:
            grow = kg.num_entities - self._matrix.shape[0]
            self._matrix = np.pad(self._matrix, ((0, grow), (0, 0)))
            self._dims.extend([()] * grow)
        for e in entities:
            dims = kg.out_relation_types(e)
            self._matrix[e, :] = 0.0
            if dims:
                self._matrix[e, list(dims)] = 1.0
            self._dims[e] = dims

    def dims(self, e: int) -> tuple[int, ...]:
        return self._dims[e]

    def degree(self, e: int) -> int:
        return len(self._dims[e])

    def cosine(self, u: int, v: int) -> float:
        return cosine_of_dims(self._dims[u], self._dims[v])

    def binary_rows(self, entities) -> np.ndarray:
        return self._matrix[np.asarray(entities, dtype=np.intp)]

    def intersections(self, e: int, entities: np.ndarray) -> np.ndarray:
        """Exact |dims_e & dims_other| for a batch of entities (float array of ints)."""
        return self._matrix[entities] @ self._matrix[e]


def cosine_of_dims(du: tuple[int, ...], dv: tuple[int, ...]) -> float:
    if not du or not dv:
        return 0.0
    inter = len(frozenset(du) & frozenset(dv))
    return inter / math.sqrt(len(du) * len(dv))


def cosine_sim(vectors: EntityVectors, u: int, v: int) -> float:
    """Cosine similarity between two entities' binary vectors; 0 if either is empty."""
    return vectors.cosine(u, v)


def knn_contextual(
    kg: KnowledgeGraph,
    vectors: EntityVectors,
    e1q: int,
    rq: int,
    k: int,
) -> ContextualSet:
    """The k most similar entities to `e1q` that have the query relation `rq`.

    The query entity itself is excluded. Ties are broken by ascending entity
    id. Raises EmptyContextError when no other entity has an `rq` edge, which
    makes the query unanswerable.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pool = np.array([e for e in kg.sources(rq) if e != e1q], dtype=np.intp)
    if pool.size == 0:
        raise EmptyContextError(
            f"no contextual entity has relation {kg.relation_labels[rq]!r}"
        )
    deg_q = vectors.degree(e1q)
    if deg_q == 0:
        scores = np.zeros(pool.size)
    else:
        inter = vectors.intersections(e1q, pool)
        pool_deg = np.array([vectors.degree(int(e)) for e in pool], dtype=np.int64)
        scores = inter / np.sqrt(pool_deg * deg_q)
    order = np.lexsort((pool, -scores))[:k]
    members = [(int(pool[i]), float(scores[i])) for i in order]
    return ContextualSet(e1q, rq, members)
