"""Consolidate hypotheses into UP/DOWN verdicts with top-M evidence.

Per-direction confidence is the max rule confidence among that direction's
hypotheses; ties go UP; no hypotheses means (DOWN, 0, no evidence).
Validator-disagreeing hypotheses are excluded from evidence but still
count toward the per-direction maxima. Evidence is ranked by the fusion
alpha*conf(rule) + (1-alpha)*plausibility.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import dataclass
from datetime import date
from typing import Callable, Iterable, Optional, Sequence

from .errors import InvariantViolation, PipelineError
from .explore import (
    ExplorerConfig,
    Hypothesis,
    Path,
    PathScore,
    RelationSelector,
    explore,
    tiebreak_hash,
)
from .graph import EntityKind, Snapshot
from .market import DOWN, UP
from .rules import Rule, RuleBank, rule_to_json

# Relations whose presence on a path carries a direction signal.
DIRECTION_RELATIONS = {"CAUSED_INCREASE": UP, "CAUSED_DECLINE": DOWN}

# Tiny lexicon for TextSource metadata; identical role to the relation
# signals above for the deterministic stand-in validator.
UP_WORDS = frozenset(
    "up gain gains rise rises rally surge growth beat beats record increase upgrade".split()
)
DOWN_WORDS = frozenset(
    "down fall falls drop drops decline loss losses plunge miss cut cuts lawsuit downgrade decrease".split()
)


@dataclass(frozen=True)
class VerdictConfig:
    evidence_budget: int = 5  # M
    fusion_alpha: float = 0.5
    aggregation: str = "max"  # max | single_best

    def __post_init__(self) -> None:
        if not 0.0 <= self.fusion_alpha <= 1.0:
            raise InvariantViolation("fusion_alpha must lie in [0, 1]")
        if self.evidence_budget < 1:
            raise InvariantViolation("evidence_budget must be >= 1")
        if self.aggregation not in ("max", "single_best"):
            raise InvariantViolation(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class EvidenceItem:
    path: Path
    rule: Rule
    rule_confidence: float
    validator_label: str
    plausibility: float


@dataclass(frozen=True)
class Verdict:
    ticker: str
    date: date
    horizon: int
    direction: str
    confidence: float
    evidence: tuple[EvidenceItem, ...] = ()


@dataclass(frozen=True)
class ValidatorContext:
    as_of: date
    ticker: str
    snapshot: Optional[Snapshot] = None
    text_sources: tuple[str, ...] = ()


Validator = Callable[[ValidatorContext, Path, Rule], tuple[str, float]]


def _tokenize(text: str) -> list[str]:
    word, words = [], []
    for ch in text.lower():
        if ch.isalpha():
            word.append(ch)
        elif word:
            words.append("".join(word))
            word = []
    if word:
        words.append("".join(word))
    return words


def default_validator(context: ValidatorContext, path: Path, rule: Rule) -> tuple[str, float]:
    """Deterministic stand-in for an external judge.

    Label echoes the rule head. Plausibility counts direction-bearing
    signals (CAUSED_* relations on the path, lexicon hits in the evidence
    TextSources' metadata) and maps their net agreement with the rule head
    onto [0, 1]; neutral 0.5 when no signal exists.
    """
    consistent = inconsistent = 0
    for rel in path.relations:
        implied = DIRECTION_RELATIONS.get(rel)
        if implied is None:
            continue
        if implied == rule.direction:
            consistent += 1
        else:
            inconsistent += 1
    if context.snapshot is not None:
        graph = context.snapshot.graph
        for uid in context.text_sources:
            ent = graph.entity(uid)
            for value in ent.metadata.values():
                for token in _tokenize(value):
                    if token in UP_WORDS:
                        if rule.direction == UP:
                            consistent += 1
                        else:
                            inconsistent += 1
                    elif token in DOWN_WORDS:
                        if rule.direction == DOWN:
                            consistent += 1
                        else:
                            inconsistent += 1
    total = consistent + inconsistent
    p = 0.5 + 0.5 * (consistent - inconsistent) / max(1, total)
    return rule.direction, min(1.0, max(0.0, p))


def decide(
    hypotheses: Sequence[Hypothesis],
    validator: Validator,
    config: VerdictConfig,
    *,
    ticker: str,
    day: date,
    horizon: int = 1,
    snapshot: Optional[Snapshot] = None,
) -> Verdict:
    """Aggregate hypotheses into one verdict; empty input yields (DOWN, 0, no evidence)."""
    hyps = list(hypotheses)
    if not hyps:
        return Verdict(ticker, day, horizon, DOWN, 0.0, ())

    conf_up = max((h.confidence for h in hyps if h.direction == UP), default=0.0)
    conf_down = max((h.confidence for h in hyps if h.direction == DOWN), default=0.0)
    direction = UP if conf_up >= conf_down else DOWN
    confidence = conf_up if direction == UP else conf_down

    pool = []
    for h in hyps:
        if h.direction != direction:
            continue
        ctx = ValidatorContext(day, ticker, snapshot, h.text_sources)
        label, plausibility = validator(ctx, h.path, h.rule)
        if label != h.direction:
            continue
        fused = config.fusion_alpha * h.confidence + (1.0 - config.fusion_alpha) * plausibility
        pool.append((fused, h, label, plausibility))
    pool.sort(key=lambda item: (-item[0], tiebreak_hash(item[1].path), item[1].rule.body, item[1].rule.direction))
    budget = 1 if config.aggregation == "single_best" else config.evidence_budget
    evidence = tuple(
        EvidenceItem(h.path, h.rule, h.confidence, label, plausibility)
        for _fused, h, label, plausibility in pool[:budget]
    )
    return Verdict(ticker, day, horizon, direction, confidence, evidence)


# ---------------------------------------------------------------------------
# Walk-forward prediction
# ---------------------------------------------------------------------------


@dataclass
class PredictRun:
    verdicts: tuple[Verdict, ...]
    paths: tuple[tuple[str, date, tuple[tuple[Path, PathScore], ...]], ...]
    skipped: tuple[dict, ...] = ()


def predict_instance(
    snap: Snapshot,
    stock_uid: str,
    bank: RuleBank,
    selector: Optional[RelationSelector],
    validator: Validator,
    econfig: ExplorerConfig,
    vconfig: VerdictConfig,
    *,
    ticker: str,
    day: date,
    horizon: int = 1,
) -> tuple[Verdict, tuple[tuple[Path, PathScore], ...]]:
    result = explore(snap, stock_uid, bank, selector, econfig)
    verdict = decide(
        result.hypotheses,
        validator,
        vconfig,
        ticker=ticker,
        day=day,
        horizon=horizon,
        snapshot=snap,
    )
    return verdict, result.scored_paths


_WORKER_STATE: dict = {}


def _predict_date(day: date):
    st = _WORKER_STATE
    return _predict_one_date(
        st["snap_factory"], st["stocks"], st["bank"], st["selector"], st["validator"],
        st["econfig"], st["vconfig"], st["horizon"], st["instance_filter"], day,
    )


def _predict_one_date(
    snap_factory, stocks, bank, selector, validator, econfig, vconfig, horizon, instance_filter, day
):
    snap = snap_factory(day)
    verdicts, paths, skipped = [], [], []
    for ticker, uid in stocks:
        if instance_filter is not None and not instance_filter(ticker, day):
            continue
        try:
            verdict, scored = predict_instance(
                snap, uid, bank, selector, validator, econfig, vconfig,
                ticker=ticker, day=day, horizon=horizon,
            )
        except PipelineError as exc:
            skipped.append({"ticker": ticker, "date": day.isoformat(), "error": str(exc)})
            continue
        verdicts.append(verdict)
        paths.append((ticker, day, scored))
    return verdicts, paths, skipped


def predict_all(
    snap_factory: Callable[[date], Snapshot],
    stocks: Iterable[str],
    dates: Iterable[date],
    bank: RuleBank,
    selector: Optional[RelationSelector],
    validator: Validator,
    econfig: ExplorerConfig = ExplorerConfig(),
    vconfig: VerdictConfig = VerdictConfig(),
    *,
    horizon: int = 1,
    instance_filter: Optional[Callable[[str, date], bool]] = None,
    jobs: int = 1,
) -> PredictRun:
    """One verdict per (stock, day): a fresh snapshot per day, deterministic
    (date, ticker) order, failed instances skipped and counted.

    ``jobs > 1`` fans dates out over forked workers; results are merged in
    date order so the output is independent of the worker count.
    """
    day_list = sorted(set(dates))
    stock_pairs = []
    if day_list:
        graph = snap_factory(day_list[0]).graph
        for uid in sorted(set(stocks)):
            ent = graph.entity(uid)
            if ent.kind is not EntityKind.COMPANY or ent.ticker is None:
                raise InvariantViolation(f"prediction universe entry {uid!r} is not a tickered Company")
            stock_pairs.append((ent.ticker, uid))
        stock_pairs.sort()

    per_date = []
    if jobs > 1 and len(day_list) > 1 and "fork" in multiprocessing.get_all_start_methods():
        _WORKER_STATE.update(
            snap_factory=snap_factory, stocks=stock_pairs, bank=bank, selector=selector,
            validator=validator, econfig=econfig, vconfig=vconfig, horizon=horizon,
            instance_filter=instance_filter,
        )
        try:
            with multiprocessing.get_context("fork").Pool(jobs) as pool:
                per_date = pool.map(_predict_date, day_list)
        finally:
            _WORKER_STATE.clear()
    else:
        for day in day_list:
            per_date.append(
                _predict_one_date(
                    snap_factory, stock_pairs, bank, selector, validator,
                    econfig, vconfig, horizon, instance_filter, day,
                )
            )

    verdicts: list[Verdict] = []
    paths: list = []
    skipped: list[dict] = []
    for day_verdicts, day_paths, day_skipped in per_date:
        verdicts.extend(day_verdicts)
        paths.extend(day_paths)
        skipped.extend(day_skipped)
    return PredictRun(tuple(verdicts), tuple(paths), tuple(skipped))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def verdict_to_json(verdict: Verdict) -> dict:
    return {
        "ticker": verdict.ticker,
        "date": verdict.date.isoformat(),
        "horizon": verdict.horizon,
        "direction": verdict.direction,
        "confidence": verdict.confidence,
        "evidence": [
            {
                "nodes": list(item.path.nodes),
                "relations": list(item.path.relations),
                "rule": rule_to_json(item.rule),
                "conf": item.rule_confidence,
                "p": item.plausibility,
                "edge_dates": [d.isoformat() for d in item.path.edge_dates],
            }
            for item in verdict.evidence
        ],
    }


def scored_path_to_json(ticker: str, day: date, path: Path, score: PathScore, bank: RuleBank) -> dict:
    obj = {
        "ticker": ticker,
        "date": day.isoformat(),
        "nodes": list(path.nodes),
        "relations": list(path.relations),
        "score": {
            "hyp": score.hyp,
            "cov": score.cov,
            "rec": score.rec,
            "ahub": score.ahub,
            "len": score.length,
            "tiebreak_hash": score.tiebreak_hash,
        },
    }
    exact = bank.exact_matches(path.relations)
    if exact:
        best = max(exact, key=lambda r: (r.confidence, r.direction))
        obj["rule"] = rule_to_json(best)
        obj["direction"] = best.direction
        obj["confidence"] = best.confidence
    return obj


def write_verdicts_jsonl(path: str, verdicts: Iterable[Verdict], header: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_header": header or {}}, separators=(",", ":")) + "\n")
        for verdict in verdicts:
            fh.write(json.dumps(verdict_to_json(verdict), separators=(",", ":")) + "\n")


def load_verdicts_jsonl(path: str, graph=None) -> list[Verdict]:
    """Read verdicts back; evidence paths are reconstructed only when a graph
    is supplied (needed to re-derive terminal node kinds)."""
    from .errors import ParseError  # local import to keep the hot path lean
    from .graph import EntityKind

    verdicts: list[Verdict] = []
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
                continue
            try:
                evidence = []
                if graph is not None:
                    for item in obj.get("evidence", ()):
                        nodes = tuple(item["nodes"])
                        rule_obj = item["rule"]
                        path_obj = Path(
                            nodes=nodes,
                            relations=tuple(item["relations"]),
                            edge_dates=tuple(date.fromisoformat(d) for d in item["edge_dates"]),
                            terminal_is_text=graph.entity(nodes[-1]).kind is EntityKind.TEXT_SOURCE,
                        )
                        evidence.append(
                            EvidenceItem(
                                path=path_obj,
                                rule=Rule(
                                    body=tuple(rule_obj["body"]),
                                    direction=rule_obj["direction"],
                                    support=int(rule_obj["support"]),
                                    hits=int(rule_obj["hits"]),
                                    confidence=float(rule_obj["confidence"]),
                                ),
                                rule_confidence=float(item["conf"]),
                                validator_label=obj["direction"],
                                plausibility=float(item["p"]),
                            )
                        )
                verdicts.append(
                    Verdict(
                        ticker=obj["ticker"],
                        date=date.fromisoformat(obj["date"]),
                        horizon=int(obj["horizon"]),
                        direction=obj["direction"],
                        confidence=float(obj["confidence"]),
                        evidence=tuple(evidence),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(str(exc), line_no) from None
    return verdicts
