"""Mask-Text / Mask-Edge counterfactual deletions and mask-ratio sweeps.

A perturbation derives from the baseline verdict's rank-1 evidence item
("top path"): Mask-Text removes the chain's TextSource and the
EXTRACTED_FROM edge tying it to the path; Mask-Edge removes the first
relation that completes the matched rule (with rule body equal to the
path's relations, that is the path's first edge). Deletions are snapshot
overlays scoped to one instance, so unperturbed instances keep their
baseline verdicts bit for bit.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from datetime import date
from typing import Callable, Iterable, Sequence

from .errors import NoMatchedRule, NoTextEvidence
from .evaluation import classify_metrics
from .explore import ExplorerConfig
from .graph import EXTRACTED_FROM, EntityKind, Snapshot, TemporalTriple
from .market import LabelTable
from .rules import RuleBank
from .seeding import derive_seed
from .verdict import Validator, Verdict, VerdictConfig, predict_instance

MASK_TEXT = "mask_text"
MASK_EDGE = "mask_edge"
DEFAULT_RATIOS = (0, 20, 40, 60, 80, 100)


@dataclass(frozen=True)
class Perturbation:
    kind: str
    ticker: str
    date: date
    suppressed_triples: tuple[TemporalTriple, ...]
    suppressed_entities: tuple[str, ...]


@dataclass(frozen=True)
class SweepResult:
    kind: str
    ratio: int
    accuracy: float
    f1: float
    n_perturbed: int
    seed: int


def _matching_triples(
    snap: Snapshot, head: str, relation: str, tail: str, valid_from: date
) -> tuple[TemporalTriple, ...]:
    """All graph triples consistent with one traversed path edge.

    Paths record (relation, valid_from) but not valid_to, so parallel edges
    that share those are suppressed together; traversal cannot tell them
    apart either.
    """
    hits = []
    for tri in snap.graph.triples:
        if tri.relation != relation or tri.valid_from != valid_from:
            continue
        if (tri.head, tri.tail) == (head, tail):
            hits.append(tri)
        elif relation == EXTRACTED_FROM and (tri.head, tri.tail) == (tail, head):
            hits.append(tri)  # inversely traversed text edge
    return tuple(hits)


def mask_text(verdict: Verdict, snap: Snapshot) -> Perturbation:
    """Suppress the top path's TextSource node and the edge anchoring it."""
    if not verdict.evidence:
        raise NoTextEvidence(f"{verdict.ticker}@{verdict.date}: verdict has no evidence path")
    top = verdict.evidence[0]
    path = top.path
    graph = snap.graph

    terminal = path.nodes[-1]
    if graph.entity(terminal).kind is EntityKind.TEXT_SOURCE and len(path.relations) > 0:
        triples = _matching_triples(
            snap, path.nodes[-2], path.relations[-1], terminal, path.edge_dates[-1]
        )
        return Perturbation(MASK_TEXT, verdict.ticker, verdict.date, triples, (terminal,))

    # Anchored mid-path text: first path node with a valid EXTRACTED_FROM
    # edge to a visible TextSource, neighbors() order breaking ties.
    for uid in path.nodes:
        for rel, other, tri in snap.neighbors(uid, "out"):
            if rel != EXTRACTED_FROM:
                continue
            if graph.entity(other).kind is not EntityKind.TEXT_SOURCE:
                continue
            return Perturbation(MASK_TEXT, verdict.ticker, verdict.date, (tri,), (other,))
    raise NoTextEvidence(f"{verdict.ticker}@{verdict.date}: top path has no TextSource")


def mask_edge(verdict: Verdict, snap: Snapshot) -> Perturbation:
    """Suppress the first edge on the top path that the matched rule body requires."""
    if not verdict.evidence or verdict.evidence[0].rule is None:
        raise NoMatchedRule(f"{verdict.ticker}@{verdict.date}: top path matched no rule")
    top = verdict.evidence[0]
    path, rule = top.path, top.rule
    index = next((i for i, rel in enumerate(path.relations) if rel == rule.body[0]), None)
    if index is None:
        raise NoMatchedRule(f"{verdict.ticker}@{verdict.date}: rule body absent from top path")
    triples = _matching_triples(
        snap, path.nodes[index], path.relations[index], path.nodes[index + 1], path.edge_dates[index]
    )
    return Perturbation(MASK_EDGE, verdict.ticker, verdict.date, triples, ())


def sweep(
    kind: str,
    ratios: Sequence[int],
    baseline: Sequence[Verdict],
    labels: LabelTable,
    snap_factory: Callable[[date], Snapshot],
    stock_uid_of: Callable[[str], str],
    bank: RuleBank,
    selector,
    validator: Validator,
    econfig: ExplorerConfig,
    vconfig: VerdictConfig,
    *,
    seed: int = 0,
    horizon: int = 1,
) -> list[SweepResult]:
    """Re-evaluate after perturbing a sampled r% of instances, per ratio.

    floor(r*N/100) instances are drawn without replacement (independent
    seeded stream per (kind, ratio)), where N is the eligible pool —
    instances whose baseline verdict carries evidence; instances without
    evidence cannot be perturbed and are excluded. Search hyperparameters
    stay fixed; metrics are computed over all instances. The r=0 row is
    the untouched baseline.
    """
    if kind not in (MASK_TEXT, MASK_EDGE):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    baseline_sorted = sorted(baseline, key=lambda v: (v.date, v.ticker))
    eligible = [v for v in baseline_sorted if v.evidence]

    results = []
    for ratio in ratios:
        n_pick = (ratio * len(eligible)) // 100
        rng = random.Random(derive_seed(seed, kind, ratio))
        picked = rng.sample(range(len(eligible)), n_pick) if n_pick else []
        replaced: dict[tuple[str, date], Verdict] = {}
        for i in sorted(picked):
            base_verdict = eligible[i]
            snap = snap_factory(base_verdict.date)
            perturbation = (
                mask_text(base_verdict, snap) if kind == MASK_TEXT else mask_edge(base_verdict, snap)
            )
            overlay = snap.with_deletions(
                perturbation.suppressed_triples, perturbation.suppressed_entities
            )
            new_verdict, _paths = predict_instance(
                overlay,
                stock_uid_of(base_verdict.ticker),
                bank,
                selector,
                validator,
                econfig,
                vconfig,
                ticker=base_verdict.ticker,
                day=base_verdict.date,
                horizon=horizon,
            )
            replaced[(base_verdict.ticker, base_verdict.date)] = new_verdict
        merged = [replaced.get((v.ticker, v.date), v) for v in baseline_sorted]
        report = classify_metrics(merged, labels)
        results.append(SweepResult(kind, ratio, report.accuracy, report.f1, n_pick, seed))
    return results


def write_sweep_csv(path: str, rows: Iterable[SweepResult], header_comment: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "ratio", "accuracy", "f1", "n_perturbed", "seed"])
        for row in rows:
            writer.writerow(
                [row.kind, row.ratio, repr(row.accuracy), repr(row.f1), row.n_perturbed, row.seed]
            )
