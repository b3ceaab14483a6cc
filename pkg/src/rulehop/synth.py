"""Seeded synthetic KG + price generator with planted, manifest-tracked signal.

Each planted rule fires per (company, trading day) with its firing rate.
A firing instantiates a fresh grounded chain for the rule body — the first
edge is a day-exact gate interval so the instance exists on exactly that
day — anchored at a fresh TextSource published at or before the day, and
the next-day return sign then matches the rule head with probability
``precision``. Non-firing days draw their sign uniformly. The manifest
records every firing with its realized direction, so miners and the
acceptance suite can check recovered confidences against realized rates
instead of the nominal precision.

Decoy edges (first body relation only, no continuation, no text) keep the
1-hop prefix of a planted body from having the identical instance set and
confidence as the full body, which would otherwise make subsumption
pruning collapse the bank onto the prefix.

Generated noise never lets a Company emit a planted body's first relation
and never anchors a Company directly to a TextSource (configurable), so
the manifest's instance sets are exactly the miner's.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Optional

from .dates import weekdays
from .errors import SpecInvalid
from .graph import EXTRACTED_FROM, KNOWN_RELATIONS, Entity, EntityKind, Graph, TemporalTriple, build_graph, valid_relation_name
from .market import DOWN, UP, PriceSeries
from .seeding import derive_seed

MIN_MOVE = 5e-4


@dataclass(frozen=True)
class PlantedRule:
    body: tuple[str, ...]
    direction: str
    precision: float
    firing_rate: float
    decoy_rate: float = 0.0


@dataclass(frozen=True)
class GeneratorSpec:
    start: date
    end: date
    planted: tuple[PlantedRule, ...]
    n_companies: int = 8
    n_text_sources: int = 30
    n_events: int = 24
    noise_edge_rate: float = 3.0
    recent_text_fraction: float = 0.7
    recent_max_days: int = 7
    stale_min_days: int = 8
    stale_max_days: int = 30
    anchor_companies: bool = False
    seed: int = 7

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise SpecInvalid("start must precede end")
        if self.n_companies < 1 or self.n_text_sources < 0 or self.n_events < 0:
            raise SpecInvalid("entity counts out of range")
        if self.noise_edge_rate < 0:
            raise SpecInvalid("noise_edge_rate must be non-negative")
        if not 0.0 <= self.recent_text_fraction <= 1.0:
            raise SpecInvalid("recent_text_fraction must lie in [0, 1]")
        if not 0 <= self.recent_max_days < self.stale_min_days <= self.stale_max_days:
            raise SpecInvalid("recency day ranges must satisfy recent_max < stale_min <= stale_max")
        bodies = [r.body for r in self.planted]
        for rule in self.planted:
            if not 1 <= len(rule.body) <= 4:
                raise SpecInvalid(f"planted body length {len(rule.body)} outside 1..4")
            if any(not valid_relation_name(rel) for rel in rule.body):
                raise SpecInvalid(f"planted body {rule.body} has an invalid relation name")
            if EXTRACTED_FROM in rule.body[:-1]:
                raise SpecInvalid("EXTRACTED_FROM may only appear as the final body relation")
            if rule.direction not in (UP, DOWN):
                raise SpecInvalid(f"planted direction must be UP or DOWN, got {rule.direction!r}")
            if not 0.0 < rule.precision <= 1.0:
                raise SpecInvalid("planted precision must lie in (0, 1]")
            if not 0.0 <= rule.firing_rate <= 1.0 or not 0.0 <= rule.decoy_rate <= 1.0:
                raise SpecInvalid("firing and decoy rates must lie in [0, 1]")
        for i, a in enumerate(bodies):
            for j, b in enumerate(bodies):
                if i != j and b[: len(a)] == a:
                    raise SpecInvalid(
                        f"planted bodies must not duplicate or prefix one another: {a} vs {b}"
                    )

    def to_json(self) -> dict:
        return {
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "planted": [
                {
                    "body": list(r.body),
                    "direction": r.direction,
                    "precision": r.precision,
                    "firing_rate": r.firing_rate,
                    "decoy_rate": r.decoy_rate,
                }
                for r in self.planted
            ],
            "n_companies": self.n_companies,
            "n_text_sources": self.n_text_sources,
            "n_events": self.n_events,
            "noise_edge_rate": self.noise_edge_rate,
            "recent_text_fraction": self.recent_text_fraction,
            "recent_max_days": self.recent_max_days,
            "stale_min_days": self.stale_min_days,
            "stale_max_days": self.stale_max_days,
            "anchor_companies": self.anchor_companies,
            "seed": self.seed,
        }


def default_spec(seed: int = 7) -> GeneratorSpec:
    """Desk-scale demo: one UP and one DOWN multi-hop rule, both text-anchored."""
    return GeneratorSpec(
        start=date(2022, 1, 3),
        end=date(2022, 7, 1),
        planted=(
            PlantedRule(("PARTNERED", "CAUSED_INCREASE", EXTRACTED_FROM), UP, 0.80, 0.10, 0.10),
            PlantedRule(("SUED", "CAUSED_DECLINE", EXTRACTED_FROM), DOWN, 0.80, 0.08, 0.08),
        ),
        n_companies=12,
        seed=seed,
    )


@dataclass
class SynthDataset:
    entities: list[Entity]
    triples: list[TemporalTriple]
    prices: dict[str, PriceSeries]
    manifest: dict
    spec: GeneratorSpec = field(repr=False, default=None)

    def graph(self) -> Graph:
        return build_graph(self.entities, self.triples)


def _mid_interval(day: date, rng: random.Random) -> tuple[date, Optional[date]]:
    start = day - timedelta(days=rng.randint(0, 3))
    end = None if rng.random() < 0.5 else day + timedelta(days=rng.randint(5, 30))
    return start, end


def generate(spec: GeneratorSpec) -> SynthDataset:
    rng_fire = random.Random(derive_seed(spec.seed, "fire"))
    rng_path = random.Random(derive_seed(spec.seed, "path"))
    rng_sign = random.Random(derive_seed(spec.seed, "sign"))
    rng_mag = random.Random(derive_seed(spec.seed, "mag"))
    rng_noise = random.Random(derive_seed(spec.seed, "noise"))

    days = list(weekdays(spec.start, spec.end))
    if len(days) < 2:
        raise SpecInvalid("date range must contain at least two trading days")
    fire_days = days[:-1]

    companies = [
        Entity(uid=f"C{i:03d}", kind=EntityKind.COMPANY, name=f"Company {i}", ticker=f"TK{i:03d}")
        for i in range(spec.n_companies)
    ]
    noise_events = [
        Entity(uid=f"E{i:03d}", kind=EntityKind.EVENT, name=f"Event {i}")
        for i in range(spec.n_events)
    ]
    noise_texts = []
    pub_lo = (spec.start - timedelta(days=30)).toordinal()
    pub_hi = spec.end.toordinal()
    for i in range(spec.n_text_sources):
        published = date.fromordinal(rng_noise.randint(pub_lo, pub_hi - 1))
        noise_texts.append(
            Entity(
                uid=f"NT{i:03d}",
                kind=EntityKind.TEXT_SOURCE,
                name=f"Brief {i}",
                published_at=published,
                metadata={"title": f"Market brief {i}", "publisher": "SynthWire"},
            )
        )

    planted_entities: list[Entity] = []
    triples: list[TemporalTriple] = []
    firings: list[dict] = []
    decoys: list[dict] = []
    targets: dict[tuple[str, date], tuple[int, str, float]] = {}
    counter = 0

    def fresh_event() -> Entity:
        nonlocal counter
        counter += 1
        ent = Entity(uid=f"PE{counter:05d}", kind=EntityKind.EVENT, name=f"Development {counter}")
        planted_entities.append(ent)
        return ent

    def fresh_text(company: Entity, day: date) -> Entity:
        nonlocal counter
        counter += 1
        if rng_path.random() < spec.recent_text_fraction:
            age = rng_path.randint(0, spec.recent_max_days)
        else:
            age = rng_path.randint(spec.stale_min_days, spec.stale_max_days)
        ent = Entity(
            uid=f"PT{counter:05d}",
            kind=EntityKind.TEXT_SOURCE,
            name=f"Story {counter}",
            published_at=day - timedelta(days=age),
            metadata={
                "title": f"Coverage of {company.name} item {counter}",
                "publisher": "SynthWire",
                "url": f"https://synth.example/{counter}",
            },
        )
        planted_entities.append(ent)
        return ent

    for day in fire_days:
        for company in companies:
            for rule_idx, rule in enumerate(spec.planted):
                fired = rng_fire.random() < rule.firing_rate
                if not fired:
                    continue
                nodes = [company]
                body = rule.body
                ends_in_text = body[-1] == EXTRACTED_FROM
                for hop in range(len(body) - 1):
                    nodes.append(fresh_event())
                text = fresh_text(company, day)
                nodes.append(text if ends_in_text else fresh_event())
                for hop, rel in enumerate(body):
                    head, tail = nodes[hop], nodes[hop + 1]
                    if hop == 0:
                        valid_from, valid_to = day, day
                    elif rel == EXTRACTED_FROM and tail.kind is EntityKind.TEXT_SOURCE:
                        valid_from, valid_to = tail.published_at, None
                    else:
                        valid_from, valid_to = _mid_interval(day, rng_path)
                    triples.append(TemporalTriple(head.uid, rel, tail.uid, valid_from, valid_to))
                if not ends_in_text:
                    triples.append(
                        TemporalTriple(nodes[-1].uid, EXTRACTED_FROM, text.uid, text.published_at, None)
                    )
                key = (company.ticker, day)
                if key not in targets:
                    targets[key] = (rule_idx, rule.direction, rule.precision)
                firings.append(
                    {
                        "rule": rule_idx,
                        "ticker": company.ticker,
                        "date": day.isoformat(),
                        "target": rule.direction,
                        "nodes": [n.uid for n in nodes],
                        "relations": list(body),
                        "text": text.uid,
                        "published": text.published_at.isoformat(),
                    }
                )
            for rule_idx, rule in enumerate(spec.planted):
                if rule.decoy_rate <= 0:
                    continue
                wants_decoy = rng_fire.random() < rule.decoy_rate
                if not wants_decoy or (company.ticker, day) in targets:
                    continue
                stub = fresh_event()
                triples.append(TemporalTriple(company.uid, rule.body[0], stub.uid, day, day))
                decoys.append(
                    {"rule": rule_idx, "ticker": company.ticker, "date": day.isoformat(), "node": stub.uid}
                )

    # Realized next-day signs: planted target with its precision, else uniform.
    signs: dict[tuple[str, date], int] = {}
    for day in fire_days:
        for company in companies:
            key = (company.ticker, day)
            target = targets.get(key)
            if target is None:
                p_up = 0.5
            else:
                _idx, direction, precision = target
                p_up = precision if direction == UP else 1.0 - precision
            signs[key] = 1 if rng_sign.random() < p_up else -1

    for record in firings:
        realized = signs[(record["ticker"], date.fromisoformat(record["date"]))]
        record["realized"] = UP if realized > 0 else DOWN

    prices: dict[str, PriceSeries] = {}
    for company in companies:
        closes = [100.0]
        for day in fire_days:
            magnitude = max(abs(rng_mag.gauss(0.01, 0.005)), MIN_MOVE)
            closes.append(closes[-1] * (1.0 + signs[(company.ticker, day)] * magnitude))
        prices[company.ticker] = PriceSeries(company.ticker, tuple(days), tuple(closes))

    # Noise edges: heads from companies+events, event or text tails. A text
    # tail forces EXTRACTED_FROM; company heads avoid planted first
    # relations and (unless configured) direct text anchors.
    first_rels = {r.body[0] for r in spec.planted}
    safe_rels = sorted(KNOWN_RELATIONS - {EXTRACTED_FROM})
    company_rels = sorted(set(safe_rels) - first_rels)
    head_pool = companies + noise_events
    n_noise = int(spec.noise_edge_rate * len(days))
    lo, hi = (spec.start - timedelta(days=10)).toordinal(), spec.end.toordinal()
    for _ in range(n_noise):
        head = head_pool[rng_noise.randrange(len(head_pool))]
        is_company = head.kind is EntityKind.COMPANY
        tail_pool: list[Entity] = list(noise_events)
        if noise_texts and (not is_company or spec.anchor_companies):
            tail_pool += noise_texts
        tail_pool = [t for t in tail_pool if t.uid != head.uid]
        if not tail_pool:
            continue
        tail = tail_pool[rng_noise.randrange(len(tail_pool))]
        if tail.kind is EntityKind.TEXT_SOURCE:
            rel = EXTRACTED_FROM
        else:
            rel_pool = company_rels if is_company else safe_rels
            rel = rel_pool[rng_noise.randrange(len(rel_pool))]
        valid_from = date.fromordinal(rng_noise.randint(lo, hi - 1))
        # Company-rooted noise stays open-ended: its body instances then span
        # many labeled days and regress to ~0.5 confidence instead of forming
        # spurious low-support rules.
        if is_company or rng_noise.random() < 0.5:
            valid_to = None
        else:
            valid_to = valid_from + timedelta(days=rng_noise.randint(1, 60))
        triples.append(TemporalTriple(head.uid, rel, tail.uid, valid_from, valid_to))

    per_rule_hits = {i: 0 for i in range(len(spec.planted))}
    per_rule_count = {i: 0 for i in range(len(spec.planted))}
    for record in firings:
        per_rule_count[record["rule"]] += 1
        if record["realized"] == record["target"]:
            per_rule_hits[record["rule"]] += 1
    realized_rates = {
        str(i): (per_rule_hits[i] / per_rule_count[i] if per_rule_count[i] else None)
        for i in range(len(spec.planted))
    }

    manifest = {
        "spec": spec.to_json(),
        "rules": [
            {
                "index": i,
                "body": list(r.body),
                "direction": r.direction,
                "precision": r.precision,
                "firing_rate": r.firing_rate,
                "decoy_rate": r.decoy_rate,
            }
            for i, r in enumerate(spec.planted)
        ],
        "n_trading_days": len(days),
        "firings": firings,
        "decoys": decoys,
        "realized_rates": realized_rates,
    }
    entities = companies + noise_events + noise_texts + planted_entities
    return SynthDataset(entities, triples, prices, manifest, spec)


def write_dataset(
    dataset: SynthDataset,
    entities_path: str,
    edges_path: str,
    prices_path: str,
    header: Optional[dict] = None,
) -> None:
    """Emit the exact ingestion formats plus a header line per file."""
    from .graph import entity_to_json, triple_to_json
    from .market import write_prices_csv

    head = json.dumps({"_header": header or {}}, separators=(",", ":"))
    with open(entities_path, "w", encoding="utf-8") as fh:
        fh.write(head + "\n")
        for ent in dataset.entities:
            fh.write(json.dumps(entity_to_json(ent), separators=(",", ":")) + "\n")
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write(head + "\n")
        for tri in dataset.triples:
            fh.write(json.dumps(triple_to_json(tri), separators=(",", ":")) + "\n")
    comment = " ".join(f"{k}={v}" for k, v in (header or {}).items())
    write_prices_csv(prices_path, dataset.prices.values(), comment)
