"""Rule-guided beam search over an as-of snapshot.

For one (stock, day) the explorer expands paths breadth-by-depth, keeps the
top-K per depth under a lexicographic key, and emits a label-predictive
hypothesis whenever a path's relation sequence exactly equals a mined rule
body above the hypothesis threshold and the chain is grounded in text
(terminal TextSource, or any path node anchored to one via a valid
EXTRACTED_FROM edge). A branch that completes a hypothesis keeps its beam
slot but is never extended further; TextSource nodes terminate a path
unless they are the depth-0 seed.

Ranking signals per depth: rule completion (0/1), best rule-body coverage,
freshest timestamp, and an anti-hub penalty; the last three are scaled to
percentiles among that depth's candidate pool (computed after selector
filtering). Ties break on a deterministic FNV-1a hash of the node
sequence, so identical inputs reproduce identical outputs byte for byte.

Traversal follows outgoing edges; EXTRACTED_FROM may additionally be
walked inversely (entities point at TextSources in the schema, and a path
must be able to reach text from either role). Paths are simple: a node is
never revisited.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from math import ceil
from typing import Callable, Optional, Sequence

from .errors import EmptyRuleBank, InvariantViolation
from .graph import EXTRACTED_FROM, EntityKind, Snapshot, TemporalTriple
from .rules import Rule, RuleBank

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """Reference FNV-1a 64-bit hash."""
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class Path:
    """Alternating node/relation chain; ``edge_dates`` hold each edge's valid_from."""

    nodes: tuple[str, ...]
    relations: tuple[str, ...] = ()
    edge_dates: tuple[date, ...] = ()
    terminal_is_text: bool = False

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.relations) + 1 or len(self.relations) != len(self.edge_dates):
            raise InvariantViolation("path arity mismatch")

    def __len__(self) -> int:
        return len(self.relations)


def tiebreak_hash(path: Path) -> int:
    """FNV-1a 64 over UTF-8 node uids joined by 0x1F."""
    return fnv1a64(b"\x1f".join(uid.encode("utf-8") for uid in path.nodes))


@dataclass(frozen=True)
class PathScore:
    hyp: int
    cov: float
    rec: float
    ahub: float
    length: int
    tiebreak_hash: int

    def sort_key(self):
        return (-self.hyp, -self.cov, -self.rec, -self.ahub, self.length, self.tiebreak_hash)


@dataclass(frozen=True)
class Hypothesis:
    path: Path
    rule: Rule
    confidence: float
    direction: str
    text_sources: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.rule.body != self.path.relations:
            raise InvariantViolation("hypothesis rule body must equal path relations")
        if not self.text_sources:
            raise InvariantViolation("hypothesis requires text evidence")


@dataclass(frozen=True)
class ExplorerConfig:
    beam_width: int = 8
    max_depth: int = 3
    tau_hyp: float = 0.60
    max_scored_paths: int = 10
    seed_mode: str = "company"  # company | text_source
    temporal_constraints: bool = True
    rule_guidance: bool = True
    multi_hop: bool = True
    llm_selection: bool = True
    selector_recency_days: int = 30
    text_seed_lookback_days: int = 7
    allow_inverse_text_edges: bool = True

    def __post_init__(self) -> None:
        if self.beam_width < 1 or self.max_depth < 1 or self.max_scored_paths < 1:
            raise InvariantViolation("beam_width, max_depth, max_scored_paths must be >= 1")
        if not 0.0 <= self.tau_hyp <= 1.0:
            raise InvariantViolation("tau_hyp must lie in [0, 1]")
        if self.seed_mode not in ("company", "text_source"):
            raise InvariantViolation(f"unknown seed_mode {self.seed_mode!r}")

    @property
    def effective_max_depth(self) -> int:
        return self.max_depth if self.multi_hop else 1


# ---------------------------------------------------------------------------
# Relation selectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateContext:
    parent_uid: str
    prefix_relations: tuple[str, ...]
    relation: str
    neighbor_uid: str
    neighbor_kind: str
    edge_valid_from: date
    neighbor_degree: int


@dataclass(frozen=True)
class SelectionContext:
    as_of: date
    candidates: tuple[CandidateContext, ...]


RelationSelector = Callable[[SelectionContext], Sequence[int]]


def passthrough_selector(ctx: SelectionContext) -> list[int]:
    """Keeps everything; equivalent to disabling selection."""
    return [2] * len(ctx.candidates)


@dataclass(frozen=True)
class HeuristicSelector:
    """Frequency/recency rubric standing in for an external relation scorer.

    2 = relation in the top tercile of this parent's candidate relations AND
    the edge is recent; 1 = exactly one of the two; 0 = neither (pruned).
    """

    recency_days: int = 30

    def __call__(self, ctx: SelectionContext) -> list[int]:
        by_parent: dict[str, dict[str, int]] = {}
        for cand in ctx.candidates:
            by_parent.setdefault(cand.parent_uid, {}).setdefault(cand.relation, 0)
            by_parent[cand.parent_uid][cand.relation] += 1
        top_rels: dict[str, set[str]] = {}
        for parent, freqs in by_parent.items():
            ranked = sorted(freqs, key=lambda r: (-freqs[r], r))
            top_rels[parent] = set(ranked[: ceil(len(ranked) / 3)])
        scores = []
        for cand in ctx.candidates:
            frequent = cand.relation in top_rels[cand.parent_uid]
            recent = (ctx.as_of - cand.edge_valid_from).days <= self.recency_days
            scores.append(2 if frequent and recent else 1 if frequent or recent else 0)
        return scores


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def percentile_scale(values: Sequence[float]) -> list[float]:
    """Average-rank percentiles in [0, 1]; a singleton scores 1.0."""
    n = len(values)
    if n == 0:
        return []
    if n == 1:
        return [1.0]
    order = sorted(range(n), key=lambda i: values[i])
    pct = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg_rank = (i + j) / 2 + 1  # 1-based, averaged over the tie block
        for k in range(i, j + 1):
            pct[order[k]] = (avg_rank - 1) / (n - 1)
        i = j + 1
    return pct


def _raw_signals(path: Path, bank: RuleBank, snap: Snapshot, config: ExplorerConfig):
    hyp = 0
    for rule in bank.exact_matches(path.relations):
        if rule.confidence >= config.tau_hyp:
            hyp = 1
            break
    cov = 0.0
    for rule in bank.prefix_matches(path.relations):
        cov = max(cov, len(path.relations) / len(rule.body))
    rec = max(d.toordinal() for d in path.edge_dates)
    if path.terminal_is_text:
        published = snap.graph.entity(path.nodes[-1]).published_at
        if published is not None:
            rec = max(rec, published.toordinal())
    ahub = -max(snap.degree(uid, temporal=config.temporal_constraints) for uid in path.nodes)
    return hyp, cov, float(rec), float(ahub)


def score_candidates(
    candidates: Sequence[Path], bank: RuleBank, snap: Snapshot, config: ExplorerConfig
) -> list[tuple[Path, PathScore]]:
    """Rank same-depth candidates by the lexicographic key (hyp, cov, rec, ahub, len, hash)."""
    if not candidates:
        return []
    if len({len(p) for p in candidates}) != 1:
        raise InvariantViolation("score_candidates requires a same-depth candidate set")
    raw = [_raw_signals(p, bank, snap, config) for p in candidates]
    cov_p = percentile_scale([r[1] for r in raw])
    rec_p = percentile_scale([r[2] for r in raw])
    ahub_p = percentile_scale([r[3] for r in raw])
    scored = [
        (p, PathScore(raw[i][0], cov_p[i], rec_p[i], ahub_p[i], len(p), tiebreak_hash(p)))
        for i, p in enumerate(candidates)
    ]
    scored.sort(key=lambda item: item[1].sort_key())
    return scored


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------


def admissible_extensions(
    snap: Snapshot, path: Path, bank: RuleBank, config: ExplorerConfig
) -> list[tuple[str, str, TemporalTriple]]:
    """Extensions of ``path`` passing depth, temporal, and rule-prefix gates."""
    if len(path) + 1 > config.effective_max_depth:
        return []
    head = path.nodes[-1]
    if snap.graph.entity(head).kind is EntityKind.TEXT_SOURCE and len(path) > 0:
        return []
    temporal = config.temporal_constraints
    pool = list(snap.neighbors(head, "out", temporal=temporal))
    if config.allow_inverse_text_edges:
        pool += [
            (rel, other, tri)
            for rel, other, tri in snap.neighbors(head, "in", temporal=temporal)
            if rel == EXTRACTED_FROM
        ]
    out = []
    for rel, other, tri in pool:
        if other in path.nodes:
            continue
        if config.rule_guidance and not bank.prefix_matches(path.relations + (rel,)):
            continue
        out.append((rel, other, tri))
    return out


def text_evidence(snap: Snapshot, path: Path, config: ExplorerConfig) -> tuple[str, ...]:
    """TextSources grounding the chain: on the path, or anchored to it via EXTRACTED_FROM."""
    temporal = config.temporal_constraints
    graph = snap.graph
    sources = {uid for uid in path.nodes if graph.entity(uid).kind is EntityKind.TEXT_SOURCE}
    for uid in path.nodes:
        for rel, other, _tri in snap.neighbors(uid, "out", temporal=temporal):
            if rel == EXTRACTED_FROM and graph.entity(other).kind is EntityKind.TEXT_SOURCE:
                sources.add(other)
    return tuple(sorted(sources))


def _extend(snap: Snapshot, path: Path, rel: str, other: str, tri: TemporalTriple) -> Path:
    return Path(
        nodes=path.nodes + (other,),
        relations=path.relations + (rel,),
        edge_dates=path.edge_dates + (tri.valid_from,),
        terminal_is_text=snap.graph.entity(other).kind is EntityKind.TEXT_SOURCE,
    )


def _seed_paths(snap: Snapshot, stock: str, config: ExplorerConfig) -> list[Path]:
    if config.seed_mode == "company":
        return [Path((stock,))]
    lookback = timedelta(days=config.text_seed_lookback_days)
    seeds = []
    for rel, other, _tri in snap.neighbors(stock, "out", temporal=config.temporal_constraints):
        if rel != EXTRACTED_FROM:
            continue
        ent = snap.graph.entity(other)
        if ent.kind is not EntityKind.TEXT_SOURCE or ent.published_at is None:
            continue
        if snap.as_of - lookback <= ent.published_at <= snap.as_of:
            seeds.append(other)
    return [Path((uid,), terminal_is_text=True) for uid in sorted(set(seeds))]


@dataclass
class ExplorationResult:
    hypotheses: tuple[Hypothesis, ...]
    scored_paths: tuple[tuple[Path, PathScore], ...]


def explore(
    snap: Snapshot,
    stock: str,
    bank: RuleBank,
    selector: Optional[RelationSelector],
    config: ExplorerConfig = ExplorerConfig(),
) -> ExplorationResult:
    """Beam search from one stock; returns hypotheses and the scored path log.

    Scored paths are the per-depth beam survivors in (depth, rank) order,
    truncated to ``max_scored_paths``; percentiles are per depth, so no
    cross-depth re-ranking is meaningful.
    """
    ent = snap.graph.entity(stock)
    if ent.kind is not EntityKind.COMPANY:
        raise InvariantViolation(f"explore seed {stock!r} is not a Company node")
    if not snap.is_entity_visible(stock, temporal=config.temporal_constraints):
        raise InvariantViolation(f"explore seed {stock!r} is not visible in the snapshot")
    if config.rule_guidance and len(bank) == 0:
        raise EmptyRuleBank("rule guidance requires a non-empty rule bank")
    if config.llm_selection and selector is None:
        selector = HeuristicSelector(config.selector_recency_days)

    hypotheses: list[Hypothesis] = []
    scored_log: list[tuple[Path, PathScore]] = []
    completed: set[Path] = set()
    beam: list[Path] = _seed_paths(snap, stock, config)

    for _depth in range(1, config.effective_max_depth + 1):
        candidates: list[Path] = []
        seen: set[Path] = set()
        for path in beam:
            if path in completed:
                continue
            for rel, other, tri in admissible_extensions(snap, path, bank, config):
                new_path = _extend(snap, path, rel, other, tri)
                # Parallel edges sharing valid_from collapse to one candidate.
                if new_path in seen:
                    continue
                seen.add(new_path)
                candidates.append(new_path)
                matches = [
                    r
                    for r in bank.exact_matches(new_path.relations)
                    if r.confidence > config.tau_hyp
                ]
                if matches:
                    sources = text_evidence(snap, new_path, config)
                    if sources:
                        for rule in matches:
                            hypotheses.append(
                                Hypothesis(new_path, rule, rule.confidence, rule.direction, sources)
                            )
                        completed.add(new_path)
        if not candidates:
            break
        if config.llm_selection:
            ctx = SelectionContext(
                as_of=snap.as_of,
                candidates=tuple(
                    CandidateContext(
                        parent_uid=p.nodes[-2],
                        prefix_relations=p.relations[:-1],
                        relation=p.relations[-1],
                        neighbor_uid=p.nodes[-1],
                        neighbor_kind=snap.graph.entity(p.nodes[-1]).kind.value,
                        edge_valid_from=p.edge_dates[-1],
                        neighbor_degree=snap.degree(p.nodes[-1], temporal=config.temporal_constraints),
                    )
                    for p in candidates
                ),
            )
            scores = list(selector(ctx))
            if len(scores) != len(candidates) or any(s not in (0, 1, 2) for s in scores):
                raise InvariantViolation("relation selector returned malformed scores")
            candidates = [p for p, s in zip(candidates, scores) if s > 0]
        ranked = score_candidates(candidates, bank, snap, config)
        beam = [p for p, _s in ranked[: config.beam_width]]
        scored_log.extend(ranked[: config.beam_width])
        if not beam:
            break

    return ExplorationResult(tuple(hypotheses), tuple(scored_log[: config.max_scored_paths]))
