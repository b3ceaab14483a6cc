"""Temporal knowledge graph: typed entities, interval-stamped edges, as-of views.

A ``Graph`` is built once from entities and temporal triples and never
mutated afterwards. All reads go through a ``Snapshot``, which fixes an
as-of date and optionally carries a deletion overlay (the counterfactual
machinery suppresses items without touching the base graph, so baseline
and perturbed runs stay comparable).

Visibility rules enforced by every snapshot:

* an edge is visible iff ``valid_from <= as_of`` and (``valid_to`` absent
  or ``>= as_of``);
* a TextSource node is visible iff ``published_at <= as_of``, and hiding
  a node hides its incident edges;
* overlay-suppressed triples/entities are never visible.

Neighbor listings are deterministically ordered (relation name, neighbor
uid, valid_from) so downstream search is reproducible byte for byte.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from . import traversal
from .dates import NEVER_ORD, OPEN_ORD, parse_date
from .errors import (
    DanglingEndpoint,
    DuplicateUid,
    InvariantViolation,
    UnknownEntity,
    UnknownTriple,
)


class EntityKind(str, Enum):
    TEXT_SOURCE = "TextSource"
    EVENT = "Event"
    PRODUCT = "Product"
    FINANCIAL = "Financial"
    COMPANY = "Company"
    PERSON = "Person"


EXTRACTED_FROM = "EXTRACTED_FROM"

# Seed registry; the set is open — unknown names are accepted at ingestion
# and flagged in the report rather than rejected.
KNOWN_RELATIONS = frozenset(
    {
        EXTRACTED_FROM,
        "SELLS",
        "INVESTED_IN",
        "CAUSED_INCREASE",
        "CAUSED_DECLINE",
        "PARTNERED",
        "DIVESTED",
        "ACQUIRED",
        "WORKS_FOR",
        "LICENSED",
        "SETTLED",
        "SUED",
    }
)

_RELATION_RE = re.compile(r"[A-Z_]+\Z")


def valid_relation_name(name: str) -> bool:
    return bool(_RELATION_RE.match(name))


@dataclass(frozen=True)
class Entity:
    """A typed graph node; ``published_at`` only for TextSource, ``ticker`` only for Company."""

    uid: str
    kind: EntityKind
    name: str = ""
    ticker: Optional[str] = None
    published_at: Optional[date] = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.uid:
            raise InvariantViolation("entity uid must be non-empty")
        if self.kind is EntityKind.TEXT_SOURCE and self.published_at is None:
            raise InvariantViolation(f"TextSource {self.uid!r} requires published_at")
        if self.ticker is not None and self.kind is not EntityKind.COMPANY:
            raise InvariantViolation(f"entity {self.uid!r}: ticker only allowed on Company nodes")


@dataclass(frozen=True, order=True)
class TemporalTriple:
    """Directed typed edge with a validity interval; ``valid_to=None`` means open-ended."""

    head: str
    relation: str
    tail: str
    valid_from: date
    valid_to: Optional[date] = None

    def __post_init__(self) -> None:
        if not valid_relation_name(self.relation):
            raise InvariantViolation(f"relation {self.relation!r} must match [A-Z_]+")
        if self.valid_to is not None and self.valid_to < self.valid_from:
            raise InvariantViolation(
                f"({self.head},{self.relation},{self.tail}): valid_to precedes valid_from"
            )
        if self.head == self.tail:
            raise InvariantViolation(f"self-loop on {self.head!r} is not allowed")

    def valid_at(self, as_of: date) -> bool:
        return self.valid_from <= as_of and (self.valid_to is None or self.valid_to >= as_of)


@dataclass(eq=False)  # identity semantics: kernels cache views per instance
class AdjacencyArrays:
    """Flat CSR arrays consumed by the traversal kernel."""

    head_idx: np.ndarray
    tail_idx: np.ndarray
    rel_id: np.ndarray
    from_ord: np.ndarray
    to_ord: np.ndarray
    pub_ord: np.ndarray
    out_start: np.ndarray
    out_edge: np.ndarray
    in_start: np.ndarray
    in_edge: np.ndarray


def _csr(n_nodes: int, keyed: list[tuple[tuple, int]]) -> tuple[np.ndarray, np.ndarray]:
    keyed.sort()
    starts = np.zeros(n_nodes + 1, dtype=np.int64)
    order = np.zeros(len(keyed), dtype=np.int32)
    for pos, (key, e) in enumerate(keyed):
        starts[key[0] + 1] += 1
        order[pos] = e
    np.cumsum(starts, out=starts)
    return starts, order


class Graph:
    """Immutable temporal KG; construct via :func:`build_graph`."""

    def __init__(self, entities: Sequence[Entity], triples: Sequence[TemporalTriple]):
        self._entities: dict[str, Entity] = {}
        for ent in entities:
            if ent.uid in self._entities:
                raise DuplicateUid(ent.uid)
            self._entities[ent.uid] = ent
        for tri in triples:
            for uid in (tri.head, tri.tail):
                if uid not in self._entities:
                    raise DanglingEndpoint(uid)

        self._triples: tuple[TemporalTriple, ...] = tuple(triples)
        self._uids: tuple[str, ...] = tuple(sorted(self._entities))
        self._uid_to_idx = {uid: i for i, uid in enumerate(self._uids)}
        self._rel_names: tuple[str, ...] = tuple(sorted({t.relation for t in self._triples}))
        self._rel_to_id = {r: i for i, r in enumerate(self._rel_names)}

        n, m = len(self._uids), len(self._triples)
        head_idx = np.zeros(m, dtype=np.int32)
        tail_idx = np.zeros(m, dtype=np.int32)
        rel_id = np.zeros(m, dtype=np.int32)
        from_ord = np.zeros(m, dtype=np.int64)
        to_ord = np.zeros(m, dtype=np.int64)
        pub_ord = np.full(n, NEVER_ORD, dtype=np.int64)
        for uid, ent in self._entities.items():
            if ent.kind is EntityKind.TEXT_SOURCE:
                pub_ord[self._uid_to_idx[uid]] = ent.published_at.toordinal()

        out_keyed: list[tuple[tuple, int]] = []
        in_keyed: list[tuple[tuple, int]] = []
        self._triple_to_edges: dict[TemporalTriple, list[int]] = {}
        for e, tri in enumerate(self._triples):
            h = self._uid_to_idx[tri.head]
            t = self._uid_to_idx[tri.tail]
            r = self._rel_to_id[tri.relation]
            head_idx[e], tail_idx[e], rel_id[e] = h, t, r
            from_ord[e] = tri.valid_from.toordinal()
            to_ord[e] = OPEN_ORD if tri.valid_to is None else tri.valid_to.toordinal()
            out_keyed.append(((h, r, t, from_ord[e], e), e))
            in_keyed.append(((t, r, h, from_ord[e], e), e))
            self._triple_to_edges.setdefault(tri, []).append(e)

        out_start, out_edge = _csr(n, out_keyed)
        in_start, in_edge = _csr(n, in_keyed)
        self.adj = AdjacencyArrays(
            head_idx, tail_idx, rel_id, from_ord, to_ord, pub_ord,
            out_start, out_edge, in_start, in_edge,
        )

    @property
    def triples(self) -> tuple[TemporalTriple, ...]:
        return self._triples

    @property
    def relation_names(self) -> tuple[str, ...]:
        return self._rel_names

    def __len__(self) -> int:
        return len(self._entities)

    def has_entity(self, uid: str) -> bool:
        return uid in self._entities

    def entity(self, uid: str) -> Entity:
        try:
            return self._entities[uid]
        except KeyError:
            raise UnknownEntity(uid) from None

    def entities(self) -> tuple[Entity, ...]:
        return tuple(self._entities[uid] for uid in self._uids)

    def companies(self) -> tuple[Entity, ...]:
        return tuple(e for e in self.entities() if e.kind is EntityKind.COMPANY)

    def company_by_ticker(self, ticker: str) -> Entity:
        for ent in self.companies():
            if ent.ticker == ticker:
                return ent
        raise UnknownEntity(f"no company with ticker {ticker!r}")

    def node_index(self, uid: str) -> int:
        try:
            return self._uid_to_idx[uid]
        except KeyError:
            raise UnknownEntity(uid) from None

    def uid_of(self, idx: int) -> str:
        return self._uids[idx]

    def relation_id(self, name: str) -> Optional[int]:
        return self._rel_to_id.get(name)

    def triple_of(self, edge_idx: int) -> TemporalTriple:
        return self._triples[edge_idx]

    def edges_of(self, triple: TemporalTriple) -> list[int]:
        try:
            return self._triple_to_edges[triple]
        except KeyError:
            raise UnknownTriple(repr(triple)) from None

    def at(self, as_of: date) -> "Snapshot":
        return Snapshot(self, as_of)


def build_graph(entities: Iterable[Entity], triples: Iterable[TemporalTriple]) -> Graph:
    """Validate and freeze a graph; raises DuplicateUid / DanglingEndpoint."""
    return Graph(list(entities), list(triples))


class Snapshot:
    """As-of view of a graph, optionally with a deletion overlay."""

    def __init__(
        self,
        graph: Graph,
        as_of: date,
        edge_mask: Optional[np.ndarray] = None,
        node_mask: Optional[np.ndarray] = None,
    ):
        self.graph = graph
        self.as_of = as_of
        self._ord = as_of.toordinal()
        self._edge_mask = edge_mask
        self._node_mask = node_mask

    def is_entity_visible(self, uid: str, temporal: bool = True) -> bool:
        idx = self.graph.node_index(uid)
        if self._node_mask is not None and self._node_mask[idx]:
            return False
        if temporal and self.graph.adj.pub_ord[idx] > self._ord:
            return False
        return True

    def _edges(self, uid: str, direction: str, temporal: bool) -> list[tuple[int, bool]]:
        idx = self.graph.node_index(uid)
        args = (self.graph.adj, idx, self._ord, temporal, self._edge_mask, self._node_mask)
        if direction == "out":
            return [(e, True) for e in traversal.visible_out(*args)]
        if direction == "in":
            return [(e, False) for e in traversal.visible_in(*args)]
        if direction == "both":
            merged = [(e, True) for e in traversal.visible_out(*args)]
            merged += [(e, False) for e in traversal.visible_in(*args)]
            adj = self.graph.adj
            uids = self.graph._uids

            def key(item: tuple[int, bool]):
                e, is_out = item
                other = adj.tail_idx[e] if is_out else adj.head_idx[e]
                rel = self.graph._rel_names[adj.rel_id[e]]
                return (rel, uids[other], adj.from_ord[e], 0 if is_out else 1, e)

            merged.sort(key=key)
            return merged
        raise ValueError(f"direction must be out/in/both, got {direction!r}")

    def neighbors(
        self, uid: str, direction: str = "out", temporal: bool = True
    ) -> list[tuple[str, str, TemporalTriple]]:
        """Visible (relation, neighbor_uid, triple) listing in deterministic order."""
        adj = self.graph.adj
        out = []
        for e, is_out in self._edges(uid, direction, temporal):
            other = adj.tail_idx[e] if is_out else adj.head_idx[e]
            tri = self.graph.triple_of(e)
            out.append((tri.relation, self.graph.uid_of(other), tri))
        return out

    def degree(self, uid: str, temporal: bool = True) -> int:
        idx = self.graph.node_index(uid)
        return traversal.visible_degree(
            self.graph.adj, idx, self._ord, temporal, self._edge_mask, self._node_mask
        )

    def rooted_body_ids(self, uid: str, max_len: int) -> set[tuple[int, ...]]:
        """Like :meth:`rooted_bodies` but with graph-local relation ids."""
        idx = self.graph.node_index(uid)
        return traversal.rooted_relation_sequences(
            self.graph.adj, idx, self._ord, max_len, self._edge_mask, self._node_mask
        )

    def rooted_bodies(self, uid: str, max_len: int) -> set[tuple[str, ...]]:
        """Distinct relation sequences of simple forward paths from ``uid`` (length 1..max_len)."""
        rels = self.graph._rel_names
        return {tuple(rels[r] for r in seq) for seq in self.rooted_body_ids(uid, max_len)}

    def visible_triples(self) -> Iterator[TemporalTriple]:
        adj = self.graph.adj
        for e, tri in enumerate(self.graph.triples):
            if self._edge_mask is not None and self._edge_mask[e]:
                continue
            h, t = adj.head_idx[e], adj.tail_idx[e]
            if self._node_mask is not None and (self._node_mask[h] or self._node_mask[t]):
                continue
            if adj.from_ord[e] > self._ord or adj.to_ord[e] < self._ord:
                continue
            if adj.pub_ord[h] > self._ord or adj.pub_ord[t] > self._ord:
                continue
            yield tri

    def with_deletions(
        self,
        suppressed_triples: Iterable[TemporalTriple] = (),
        suppressed_entities: Iterable[str] = (),
    ) -> "Snapshot":
        """New snapshot excluding the given items; this snapshot is unchanged."""
        edge_mask = (
            self._edge_mask.copy()
            if self._edge_mask is not None
            else np.zeros(len(self.graph.triples), dtype=np.uint8)
        )
        node_mask = (
            self._node_mask.copy()
            if self._node_mask is not None
            else np.zeros(len(self.graph), dtype=np.uint8)
        )
        for tri in suppressed_triples:
            for e in self.graph.edges_of(tri):
                edge_mask[e] = 1
        for uid in suppressed_entities:
            node_mask[self.graph.node_index(uid)] = 1
        return Snapshot(self.graph, self.as_of, edge_mask, node_mask)


def snapshot(graph: Graph, as_of: date) -> Snapshot:
    return graph.at(as_of)


def apply_deletions(
    snap: Snapshot,
    suppressed_triples: Iterable[TemporalTriple] = (),
    suppressed_entities: Iterable[str] = (),
) -> Snapshot:
    return snap.with_deletions(suppressed_triples, suppressed_entities)


# ---------------------------------------------------------------------------
# JSONL ingestion
# ---------------------------------------------------------------------------


@dataclass
class IngestionReport:
    entity_counts: dict[str, int] = field(default_factory=dict)
    relation_counts: dict[str, int] = field(default_factory=dict)
    unknown_relations: list[str] = field(default_factory=list)
    rejected: list[dict] = field(default_factory=list)

    def reject(self, source: str, line_no: int, reason: str) -> None:
        self.rejected.append({"file": source, "line": line_no, "reason": reason})

    def to_json(self) -> dict:
        return {
            "entity_counts": dict(sorted(self.entity_counts.items())),
            "relation_counts": dict(sorted(self.relation_counts.items())),
            "unknown_relations": sorted(self.unknown_relations),
            "rejected": self.rejected,
            "n_rejected": len(self.rejected),
        }


def _data_lines(path: str) -> Iterator[tuple[int, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, line


def _is_header(obj: object) -> bool:
    return isinstance(obj, dict) and "_header" in obj


def load_entities_jsonl(path: str, report: Optional[IngestionReport] = None) -> tuple[list[Entity], IngestionReport]:
    """Read ``entities.jsonl``; bad lines are reported and skipped, never fatal."""
    report = report if report is not None else IngestionReport()
    entities: list[Entity] = []
    counts: Counter[str] = Counter()
    for line_no, line in _data_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.reject(path, line_no, f"invalid JSON: {exc.msg}")
            continue
        if _is_header(obj):
            continue
        try:
            kind = EntityKind(obj["kind"])
            published = parse_date(obj["published_at"]) if obj.get("published_at") else None
            ent = Entity(
                uid=obj["uid"],
                kind=kind,
                name=obj.get("name", ""),
                ticker=obj.get("ticker"),
                published_at=published,
                metadata=obj.get("metadata", {}),
            )
        except (KeyError, ValueError, TypeError, InvariantViolation) as exc:
            report.reject(path, line_no, str(exc))
            continue
        entities.append(ent)
        counts[kind.value] += 1
    report.entity_counts = dict(counts)
    return entities, report


def load_edges_jsonl(path: str, report: Optional[IngestionReport] = None) -> tuple[list[TemporalTriple], IngestionReport]:
    """Read ``edges.jsonl``; unknown relation names are accepted but flagged."""
    report = report if report is not None else IngestionReport()
    triples: list[TemporalTriple] = []
    counts: Counter[str] = Counter()
    unknown: set[str] = set()
    for line_no, line in _data_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.reject(path, line_no, f"invalid JSON: {exc.msg}")
            continue
        if _is_header(obj):
            continue
        try:
            tri = TemporalTriple(
                head=obj["head"],
                relation=obj["relation"],
                tail=obj["tail"],
                valid_from=parse_date(obj["valid_from"]),
                valid_to=parse_date(obj["valid_to"]) if obj.get("valid_to") else None,
            )
        except (KeyError, ValueError, TypeError, InvariantViolation) as exc:
            report.reject(path, line_no, str(exc))
            continue
        triples.append(tri)
        counts[tri.relation] += 1
        if tri.relation not in KNOWN_RELATIONS:
            unknown.add(tri.relation)
    report.relation_counts = dict(counts)
    report.unknown_relations = sorted(unknown)
    return triples, report


def entity_to_json(ent: Entity) -> dict:
    obj: dict = {"uid": ent.uid, "kind": ent.kind.value, "name": ent.name}
    if ent.ticker is not None:
        obj["ticker"] = ent.ticker
    if ent.published_at is not None:
        obj["published_at"] = ent.published_at.isoformat()
    if ent.metadata:
        obj["metadata"] = dict(ent.metadata)
    return obj


def triple_to_json(tri: TemporalTriple) -> dict:
    obj: dict = {
        "head": tri.head,
        "relation": tri.relation,
        "tail": tri.tail,
        "valid_from": tri.valid_from.isoformat(),
    }
    if tri.valid_to is not None:
        obj["valid_to"] = tri.valid_to.isoformat()
    return obj
