"""Mining, pruning, and lookup of label-predictive relational rules.

A rule body is a sequence of relation names; an instance of a body is a
(stock, day) pair for which some simple forward path rooted at the stock's
Company node realizes the full sequence with every edge valid as-of that
day. Multiple groundings on the same stock-day count once. Support counts
labeled instances, hits count instances whose realized movement matches
the rule head, confidence is hits/support, and rules below the confidence
or support floor are discarded. Longer rules that a shorter same-direction
prefix already matches at equal or better confidence are pruned as
redundant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Optional, Sequence

from .errors import EmptyLabelTable, InvariantViolation, ParseError
from .graph import EntityKind, Snapshot
from .market import DOWN, UP, LabelTable

MAX_BODY_LEN = 4

Body = tuple[str, ...]


@dataclass(frozen=True)
class Rule:
    body: Body
    direction: str
    support: int
    hits: int
    confidence: float

    def __post_init__(self) -> None:
        if not 1 <= len(self.body) <= MAX_BODY_LEN:
            raise InvariantViolation(f"rule body length {len(self.body)} outside 1..{MAX_BODY_LEN}")
        if self.direction not in (UP, DOWN):
            raise InvariantViolation(f"rule direction must be UP or DOWN, got {self.direction!r}")
        if self.hits > self.support:
            raise InvariantViolation("rule hits exceed support")
        if self.support > 0 and self.confidence != self.hits / self.support:
            raise InvariantViolation("rule confidence is not hits/support")


@dataclass(frozen=True)
class MiningConfig:
    tau_mine: float = 0.60
    min_support: int = 5
    max_body_len: int = 4
    horizon: int = 1
    # The source enumeration starts at two hops; single-relation bodies are
    # admitted by default for degenerate graphs and can be switched off.
    include_single_relation: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau_mine <= 1.0:
            raise InvariantViolation("tau_mine must lie in [0, 1]")
        if self.min_support < 1:
            raise InvariantViolation("min_support must be positive")
        if not 1 <= self.max_body_len <= MAX_BODY_LEN:
            raise InvariantViolation(f"max_body_len must lie in 1..{MAX_BODY_LEN}")
        if self.horizon < 1:
            raise InvariantViolation("horizon must be >= 1")


def _rule_sort_key(rule: Rule):
    return (-rule.confidence, -rule.support, rule.body, rule.direction)


class RuleBank:
    """Pruned rule collection with prefix lookup for the explorer."""

    def __init__(self, rules: Sequence[Rule], config: Optional[MiningConfig] = None):
        seen: set[tuple[Body, str]] = set()
        for rule in rules:
            key = (rule.body, rule.direction)
            if key in seen:
                raise InvariantViolation(f"duplicate rule {key}")
            seen.add(key)
        self.rules: tuple[Rule, ...] = tuple(rules)
        self.config = config
        self._prefix: dict[Body, list[Rule]] = {}
        for rule in self.rules:
            for length in range(len(rule.body) + 1):
                self._prefix.setdefault(rule.body[:length], []).append(rule)

    def __len__(self) -> int:
        return len(self.rules)

    def prefix_matches(self, prefix: Sequence[str]) -> tuple[Rule, ...]:
        """Rules whose body begins with ``prefix`` (empty prefix matches all)."""
        return tuple(self._prefix.get(tuple(prefix), ()))

    def exact_matches(self, body: Sequence[str]) -> tuple[Rule, ...]:
        return tuple(r for r in self.prefix_matches(body) if r.body == tuple(body))


def enumerate_bodies(
    snap_dates: Iterable[tuple[Snapshot, date]],
    stocks: Iterable[str],
    config: MiningConfig = MiningConfig(),
) -> dict[Body, set[tuple[str, date]]]:
    """Realized relation sequences rooted at each stock, with their (stock, day) instances."""
    stock_list = sorted(set(stocks))
    by_ids: dict[tuple[int, ...], set[tuple[str, date]]] = {}
    rel_names: Optional[tuple[str, ...]] = None
    base_graph = None
    for snap, day in snap_dates:
        if base_graph is None:
            base_graph = snap.graph
            rel_names = base_graph.relation_names
        elif snap.graph is not base_graph:
            raise InvariantViolation("all mining snapshots must view the same graph")
        for stock in stock_list:
            ent = snap.graph.entity(stock)
            if ent.kind is not EntityKind.COMPANY:
                raise InvariantViolation(f"mining root {stock!r} is not a Company node")
            for seq in snap.rooted_body_ids(stock, config.max_body_len):
                if len(seq) == 1 and not config.include_single_relation:
                    continue
                by_ids.setdefault(seq, set()).add((stock, day))
    return {
        tuple(rel_names[r] for r in seq): instances
        for seq, instances in by_ids.items()
    }


def mine(
    snap_dates: Sequence[tuple[Snapshot, date]],
    stocks: Iterable[str],
    labels: LabelTable,
    config: MiningConfig = MiningConfig(),
) -> RuleBank:
    """Mine, filter, and prune rules from historical snapshots.

    Each body yields an UP and a DOWN candidate; support counts labeled
    (stock, day) instances of the body, hits count those whose label matches
    the candidate head.
    """
    if len(labels) == 0:
        raise EmptyLabelTable("cannot mine against an empty label table")
    tickers: dict[str, Optional[str]] = {}
    bodies = enumerate_bodies(snap_dates, stocks, config)
    if snap_dates:
        graph = snap_dates[0][0].graph
        tickers = {uid: graph.entity(uid).ticker for uid in sorted({s for s in stocks})}

    candidates: list[Rule] = []
    for body in sorted(bodies):
        support = 0
        up_hits = 0
        for stock, day in bodies[body]:
            ticker = tickers.get(stock)
            if ticker is None:
                continue
            lab = labels.lookup(ticker, day)
            if lab is None:
                continue
            support += 1
            if lab.direction == UP:
                up_hits += 1
        if support < config.min_support:
            continue
        for direction, hits in ((UP, up_hits), (DOWN, support - up_hits)):
            confidence = hits / support
            if confidence >= config.tau_mine:
                candidates.append(Rule(body, direction, support, hits, confidence))
    return RuleBank(prune(candidates, config), config)


def prune(rules: Sequence[Rule], config: MiningConfig = MiningConfig()) -> tuple[Rule, ...]:
    """Drop rules subsumed by a strictly shorter same-direction prefix rule
    of equal or better confidence; order the survivors deterministically."""
    by_key = {(r.body, r.direction): r for r in rules}
    kept: list[Rule] = []
    for rule in rules:
        subsumed = False
        for length in range(1, len(rule.body)):
            shorter = by_key.get((rule.body[:length], rule.direction))
            if shorter is not None and shorter.confidence >= rule.confidence:
                subsumed = True
                break
        if not subsumed:
            kept.append(rule)
    kept.sort(key=_rule_sort_key)
    return tuple(kept)


# ---------------------------------------------------------------------------
# rules.jsonl round trip
# ---------------------------------------------------------------------------


def rule_to_json(rule: Rule) -> dict:
    return {
        "body": list(rule.body),
        "direction": rule.direction,
        "support": rule.support,
        "hits": rule.hits,
        "confidence": rule.confidence,
    }


def save_bank(bank: RuleBank, path: str, header: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        head: dict = {"_header": header or {}}
        if bank.config is not None:
            head["_header"]["mining_config"] = {
                "tau_mine": bank.config.tau_mine,
                "min_support": bank.config.min_support,
                "max_body_len": bank.config.max_body_len,
                "horizon": bank.config.horizon,
                "include_single_relation": bank.config.include_single_relation,
            }
        fh.write(json.dumps(head, separators=(",", ":")) + "\n")
        for rule in bank.rules:
            fh.write(json.dumps(rule_to_json(rule), separators=(",", ":")) + "\n")


def load_bank(path: str) -> RuleBank:
    rules: list[Rule] = []
    config: Optional[MiningConfig] = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
            if isinstance(obj, dict) and "_header" in obj:
                cfg = obj["_header"].get("mining_config")
                if cfg:
                    config = MiningConfig(**cfg)
                continue
            try:
                rules.append(
                    Rule(
                        body=tuple(obj["body"]),
                        direction=obj["direction"],
                        support=int(obj["support"]),
                        hits=int(obj["hits"]),
                        confidence=float(obj["confidence"]),
                    )
                )
            except (KeyError, TypeError, ValueError, InvariantViolation) as exc:
                raise ParseError(str(exc), line_no) from None
    return RuleBank(tuple(rules), config)
