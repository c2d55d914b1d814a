"""Directed labeled multigraph with inverse-edge augmentation and train/dev/test splits.

Entities and relations are interned to dense integer ids. For every relation
``r`` an inverse partner ``r^-1`` exists; ids are paired so that
``inverse_of(r) == r ^ 1``. Only train edges are traversable; dev/test triples
are kept for evaluation bookkeeping only.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, NamedTuple

# Reserved marker for inverse relation labels; rejected in input labels so the
# base<->inverse mapping stays bijective.
INVERSE_PREFIX = "~"

SPLITS = ("train", "dev", "test")


class ParseError(ValueError):
    """A malformed input line, with file and 1-based line number."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        loc = f"{path}:{line}: " if path is not None else ""
        super().__init__(f"{loc}{message}")
        self.path = str(path) if path is not None else None
        self.line = line


class UnknownIdError(KeyError):
    """Lookup of an entity or relation id outside the current snapshot."""


class Triple(NamedTuple):
    head: int
    rel: int
    tail: int


class UnseenRecord(NamedTuple):
    """A dev/test triple whose entities never appear in a train triple."""

    split: str
    line: int
    triple: tuple[str, str, str]
    missing: tuple[str, ...]


def inverse_of(rel: int) -> int:
    return rel ^ 1

def is_inverse(rel: int) -> bool:
    return rel & 1 == 1


class KnowledgeGraph:
    """Interned graph snapshot with train-only adjacency.

    Single-writer: `add_triples` (used by the streaming harness) is the only
    mutator; everything else reads a consistent snapshot.
    """

    def __init__(self) -> None:
        self.entity_labels: list[str] = []
        self._entity_ids: dict[str, int] = {}
        self.relation_labels: list[str] = []
        self._relation_ids: dict[str, int] = {}
        # original (non-augmented) id triples per split, insertion order, de-duplicated
        self._splits: dict[str, list[Triple]] = {s: [] for s in SPLITS}
        self._split_seen: dict[str, set[Triple]] = {s: set() for s in SPLITS}
        # train adjacency: entity -> relation -> set of targets
        self._adj: dict[int, dict[int, set[int]]] = {}
        # relation -> entities with >=1 outgoing train edge of that relation
        self._sources: dict[int, set[int]] = {}
        # (entity, relation) -> known-true targets over all splits (filtered ranking)
        self._true: dict[tuple[int, int], set[int]] = {}
        self.train_entities: set[int] = set()
        self.unseen_report: list[UnseenRecord] = []
        # finalized caches, refreshed per entity after mutation
        self._targets: dict[tuple[int, int], tuple[int, ...]] = {}
        self._grouped: dict[int, tuple[tuple[int, tuple[int, ...]], ...]] = {}
        self._out_rels: dict[int, tuple[int, ...]] = {}

    # -- vocabulary ---------------------------------------------------------

    @property
    def num_entities(self) -> int:
        return len(self.entity_labels)

    @property
    def num_relations(self) -> int:
        return len(self.relation_labels)

    def entity_id(self, label: str) -> int:
        try:
            return self._entity_ids[label]
        except KeyError:
            raise UnknownIdError(f"unknown entity label {label!r}") from None

    def relation_id(self, label: str) -> int:
        try:
            return self._relation_ids[label]
        except KeyError:
            raise UnknownIdError(f"unknown relation label {label!r}") from None

    def _intern_entity(self, label: str) -> int:
        eid = self._entity_ids.get(label)
        if eid is None:
            eid = len(self.entity_labels)
            self._entity_ids[label] = eid
            self.entity_labels.append(label)
        return eid

    def _intern_relation(self, label: str) -> int:
        rid = self._relation_ids.get(label)
        if rid is None:
            rid = len(self.relation_labels)
            self._relation_ids[label] = rid
            self.relation_labels.append(label)
            inv = INVERSE_PREFIX + label
            self._relation_ids[inv] = rid + 1
            self.relation_labels.append(inv)
        return rid

    # -- construction -------------------------------------------------------

    @staticmethod
    def _check_labels(h: str, r: str, t: str, path=None, line=None) -> None:
        for lab in (h, r, t):
            if not lab:
                raise ParseError("empty field in triple", path, line)
        if r.startswith(INVERSE_PREFIX):
            raise ParseError(
                f"relation label {r!r} uses the reserved inverse prefix {INVERSE_PREFIX!r}",
                path, line,
            )

    def _store(self, split: str, h: str, r: str, t: str, path=None, line=None) -> Triple | None:
        self._check_labels(h, r, t, path, line)
        hid = self._intern_entity(h)
        rid = self._intern_relation(r)
        tid = self._intern_entity(t)
        triple = Triple(hid, rid, tid)
        if triple in self._split_seen[split]:
            return None
        self._split_seen[split].add(triple)
        self._splits[split].append(triple)
        self._true.setdefault((hid, rid), set()).add(tid)
        self._true.setdefault((tid, rid ^ 1), set()).add(hid)
        if split == "train":
            self._adj.setdefault(hid, {}).setdefault(rid, set()).add(tid)
            self._adj.setdefault(tid, {}).setdefault(rid ^ 1, set()).add(hid)
            self._sources.setdefault(rid, set()).add(hid)
            self._sources.setdefault(rid ^ 1, set()).add(tid)
            self.train_entities.add(hid)
            self.train_entities.add(tid)
        return triple

    def _refresh(self, entities: Iterable[int]) -> None:
        for e in entities:
            rels = self._adj.get(e, {})
            grouped = []
            for r in sorted(rels):
                targets = tuple(sorted(rels[r]))
                self._targets[(e, r)] = targets
                grouped.append((r, targets))
            self._grouped[e] = tuple(grouped)
            self._out_rels[e] = tuple(r for r, _ in grouped)

    @classmethod
    def from_triples(
        cls,
        train: Iterable[tuple[str, str, str]],
        dev: Iterable[tuple[str, str, str]] = (),
        test: Iterable[tuple[str, str, str]] = (),
    ) -> "KnowledgeGraph":
        kg = cls()
        for split, triples in (("train", train), ("dev", dev), ("test", test)):
            for i, (h, r, t) in enumerate(triples, start=1):
                kg._store(split, h, r, t, line=i)
        kg._record_unseen()
        kg._refresh(range(kg.num_entities))
        return kg

    @classmethod
    def load(cls, data_dir: str | Path, accept_dev_alias: bool = True) -> "KnowledgeGraph":
        """Load ``train.txt`` / ``valid.txt`` / ``test.txt`` from a directory.

        Each line is ``head<TAB>relation<TAB>tail``. With `accept_dev_alias`,
        ``dev.txt`` is accepted when ``valid.txt`` is absent.
        """
        data_dir = Path(data_dir)
        train = data_dir / "train.txt"
        dev = data_dir / "valid.txt"
        if not dev.exists() and accept_dev_alias and (data_dir / "dev.txt").exists():
            dev = data_dir / "dev.txt"
        test = data_dir / "test.txt"
        return load_kg(train, dev, test)

    def read_split_file(self, split: str, path: str | Path) -> int:
        """Parse a triple file into `split` during construction; returns triple count."""
        n = 0
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n").rstrip("\r")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ParseError(
                        f"expected 3 tab-separated fields, got {len(parts)}", path, lineno
                    )
                self._store(split, parts[0], parts[1], parts[2], path, lineno)
                n += 1
        return n

    def _record_unseen(self) -> None:
        self.unseen_report = []
        for split in ("dev", "test"):
            for i, tr in enumerate(self._splits[split], start=1):
                missing = tuple(
                    self.entity_labels[e]
                    for e in (tr.head, tr.tail)
                    if e not in self.train_entities
                )
                if missing:
                    labels = (
                        self.entity_labels[tr.head],
                        self.relation_labels[tr.rel],
                        self.entity_labels[tr.tail],
                    )
                    self.unseen_report.append(UnseenRecord(split, i, labels, missing))

    # -- read API ------------------------------------------------------------

    def _check_entity(self, e: int) -> None:
        if not 0 <= e < self.num_entities:
            raise UnknownIdError(f"unknown entity id {e}")

    def _check_relation(self, r: int) -> None:
        if not 0 <= r < self.num_relations:
            raise UnknownIdError(f"unknown relation id {r}")

    def neighbors(self, e: int, r: int) -> tuple[int, ...]:
        """S_(e,r): targets of train edges (e, r, ·), sorted ascending."""
        self._check_entity(e)
        self._check_relation(r)
        return self._targets.get((e, r), ())

    def out_relation_types(self, e: int) -> tuple[int, ...]:
        """Distinct relations (inverses included) with >=1 outgoing train edge from e."""
        self._check_entity(e)
        return self._out_rels.get(e, ())

    def out_edges_grouped(self, e: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
        """Outgoing train edges of e grouped as (relation, sorted targets); unchecked hot path."""
        return self._grouped.get(e, ())

    def targets(self, e: int, r: int) -> tuple[int, ...]:
        """Unchecked (e, r) -> sorted targets; hot path for traversal."""
        return self._targets.get((e, r), ())

    def sources(self, r: int) -> tuple[int, ...]:
        """Entities with at least one outgoing train edge of relation r, sorted."""
        self._check_relation(r)
        return tuple(sorted(self._sources.get(r, ())))

    def true_targets(self, e: int, r: int) -> frozenset[int]:
        """Known-true targets of (e, r, ?) over train+dev+test (filtered ranking)."""
        return frozenset(self._true.get((e, r), ()))

    def split_triples(self, split: str) -> tuple[Triple, ...]:
        """Original (non-augmented) id triples of a split, in insertion order."""
        return tuple(self._splits[split])

    def split_edges_augmented(self, split: str) -> tuple[Triple, ...]:
        """Split triples plus their inverses, in insertion order."""
        out = []
        for h, r, t in self._splits[split]:
            out.append(Triple(h, r, t))
            out.append(Triple(t, r ^ 1, h))
        return tuple(out)

    def train_out_degree(self, e: int) -> int:
        return sum(len(ts) for ts in self._adj.get(e, {}).values())

    def labels_of(self, triple: Triple) -> tuple[str, str, str]:
        return (
            self.entity_labels[triple.head],
            self.relation_labels[triple.rel],
            self.entity_labels[triple.tail],
        )

    def fingerprint(self) -> str:
        """Content hash over all split triples; guards snapshot/dataset pairing."""
        h = hashlib.sha256()
        for split in SPLITS:
            h.update(split.encode())
            for tr in self._splits[split]:
                h.update(("\t".join(self.labels_of(tr)) + "\n").encode("utf-8"))
        return h.hexdigest()

    # -- mutation (streaming harness only) ------------------------------------

    def add_triples(
        self, split: str, triples: Iterable[tuple[str, str, str]]
    ) -> tuple[list[int], list[Triple]]:
        """Add label triples to a split; returns (new entity ids, added id triples).

        New entities get fresh contiguous ids. Train additions update the
        adjacency, dev/test additions only the evaluation bookkeeping. Exact
        duplicates of already-stored triples are ignored.
        """
        before = self.num_entities
        added: list[Triple] = []
        for h, r, t in triples:
            tr = self._store(split, h, r, t)
            if tr is not None:
                added.append(tr)
        new_entities = list(range(before, self.num_entities))
        if split == "train":
            touched = {e for tr in added for e in (tr.head, tr.tail)}
            self._refresh(touched | set(new_entities))
        else:
            self._refresh(new_entities)
        return new_entities, added


def load_kg(train: str | Path, dev: str | Path, test: str | Path) -> KnowledgeGraph:
    """Load a graph from three triple files, applying inverse augmentation everywhere."""
    kg = KnowledgeGraph()
    for split, path in (("train", train), ("dev", dev), ("test", test)):
        kg.read_split_file(split, path)
    kg._record_unseen()
    kg._refresh(range(kg.num_entities))
    return kg
