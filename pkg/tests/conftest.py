"""Shared fixtures: seeded random graphs and brute-force oracles.

The oracles here intentionally re-derive everything from raw entity and
triple fields (their own date comparisons, their own adjacency) so the
package code under test shares no logic with them.
"""

from __future__ import annotations

import random
from datetime import date, timedelta

import pytest

from rulehop.graph import Entity, EntityKind, TemporalTriple, build_graph

RELATION_POOL = (
    "EXTRACTED_FROM",
    "SELLS",
    "INVESTED_IN",
    "CAUSED_INCREASE",
    "CAUSED_DECLINE",
    "PARTNERED",
    "ACQUIRED",
    "SUED",
)

BASE_DAY = date(2022, 6, 15)


def random_graph(rng: random.Random, max_nodes: int = 30, max_edges: int = 60):
    """Random typed graph with mixed open/closed/future intervals.

    Returns (graph, entities, triples, query_dates).
    """
    n_companies = rng.randint(1, 4)
    n_events = rng.randint(1, max(1, max_nodes // 2))
    n_texts = rng.randint(0, max_nodes // 3)
    entities = []
    for i in range(n_companies):
        entities.append(Entity(f"c{i}", EntityKind.COMPANY, f"Co {i}", ticker=f"T{i}"))
    for i in range(n_events):
        entities.append(Entity(f"e{i}", EntityKind.EVENT, f"Ev {i}"))
    for i in range(n_texts):
        published = BASE_DAY + timedelta(days=rng.randint(-40, 40))
        entities.append(Entity(f"n{i}", EntityKind.TEXT_SOURCE, f"Nw {i}", published_at=published))
    uids = [e.uid for e in entities]

    triples = []
    n_edges = rng.randint(0, max_edges)
    for _ in range(n_edges):
        head, tail = rng.sample(uids, 2)
        rel = rng.choice(RELATION_POOL)
        valid_from = BASE_DAY + timedelta(days=rng.randint(-40, 40))
        valid_to = None if rng.random() < 0.5 else valid_from + timedelta(days=rng.randint(0, 30))
        triples.append(TemporalTriple(head, rel, tail, valid_from, valid_to))

    query_dates = [BASE_DAY + timedelta(days=rng.choice((-20, -5, 0, 5, 20)))
                   for _ in range(rng.randint(1, 3))]
    return build_graph(entities, triples), entities, triples, sorted(set(query_dates))


# ---------------------------------------------------------------------------
# Independent visibility / traversal oracles
# ---------------------------------------------------------------------------


def oracle_entity_visible(entity: Entity, as_of: date, suppressed_entities=frozenset()) -> bool:
    if entity.uid in suppressed_entities:
        return False
    if entity.kind is EntityKind.TEXT_SOURCE:
        return entity.published_at <= as_of
    return True


def oracle_triple_visible(
    triple: TemporalTriple,
    entities_by_uid: dict,
    as_of: date,
    suppressed_triples=frozenset(),
    suppressed_entities=frozenset(),
) -> bool:
    if triple in suppressed_triples:
        return False
    if not oracle_entity_visible(entities_by_uid[triple.head], as_of, suppressed_entities):
        return False
    if not oracle_entity_visible(entities_by_uid[triple.tail], as_of, suppressed_entities):
        return False
    if triple.valid_from > as_of:
        return False
    if triple.valid_to is not None and triple.valid_to < as_of:
        return False
    return True


def oracle_rooted_bodies(
    entities, triples, root: str, as_of: date, max_len: int
) -> set[tuple[str, ...]]:
    """All relation sequences of simple forward paths from root, length 1..max_len."""
    by_uid = {e.uid: e for e in entities}
    if not oracle_entity_visible(by_uid[root], as_of):
        return set()
    adjacency: dict[str, list[TemporalTriple]] = {}
    for tri in triples:
        if oracle_triple_visible(tri, by_uid, as_of):
            adjacency.setdefault(tri.head, []).append(tri)
    found: set[tuple[str, ...]] = set()

    def walk(node: str, seq: tuple[str, ...], visited: frozenset):
        if len(seq) >= max_len:
            return
        for tri in adjacency.get(node, ()):
            if tri.tail in visited:
                continue
            nxt = seq + (tri.relation,)
            found.add(nxt)
            walk(tri.tail, nxt, visited | {tri.tail})

    walk(root, (), frozenset([root]))
    return found


def oracle_mine_counts(entities, triples, snap_days, labels_by_instance, max_len):
    """(body, direction) -> (support, hits) by exhaustive per-instance recount.

    ``labels_by_instance`` maps (ticker, day) -> "UP"/"DOWN".
    """
    companies = [e for e in entities if e.kind is EntityKind.COMPANY]
    counts: dict[tuple[tuple[str, ...], str], list[int]] = {}
    for day in snap_days:
        for company in companies:
            lab = labels_by_instance.get((company.ticker, day))
            if lab is None:
                continue
            for body in oracle_rooted_bodies(entities, triples, company.uid, day, max_len):
                for direction in ("UP", "DOWN"):
                    entry = counts.setdefault((body, direction), [0, 0])
                    entry[0] += 1
                    if lab == direction:
                        entry[1] += 1
    return {key: tuple(value) for key, value in counts.items()}


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
