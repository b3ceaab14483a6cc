"""Classification metrics, Top-10 buy&hold backtesting, interpretability stats.

Classification treats UP as the positive class and is computed in exact
rational arithmetic before the final float conversion. Degenerate
denominators yield 0.0 plus an explicit flag, never NaN. The backtest is
long-only, equal-weight, no rebalancing, no costs; annualization uses 252
and the risk-free rate defaults to 0.

The interpretability statistics reconstruct the reported path-quality
measures from the verdicts' evidence; see the README for the exact
reconstructed definitions.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from datetime import date
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import EmptyIntersection, InsufficientTickers, ZeroVariance
from .explore import ExplorerConfig, RelationSelector
from .graph import EXTRACTED_FROM, EntityKind, Graph, Snapshot
from .market import DOWN, UP, LabelTable, PriceSeries
from .rules import RuleBank
from .verdict import Validator, Verdict, VerdictConfig, predict_all

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class ClassificationReport:
    tp: int
    fp: int
    tn: int
    fn: int
    n: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_degenerate: bool = False
    recall_degenerate: bool = False
    f1_degenerate: bool = False
    n_unmatched: int = 0

    def to_json(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn, "n": self.n,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
            "precision_degenerate": self.precision_degenerate,
            "recall_degenerate": self.recall_degenerate,
            "f1_degenerate": self.f1_degenerate,
            "n_unmatched": self.n_unmatched,
        }


def classify_metrics(predictions: Iterable[Verdict], labels: LabelTable) -> ClassificationReport:
    """Confusion counts and point metrics over the (ticker, day) pool.

    Predictions without a matching label are counted and excluded; no
    overlap at all raises EmptyIntersection.
    """
    tp = fp = tn = fn = unmatched = 0
    for pred in predictions:
        lab = labels.lookup(pred.ticker, pred.date)
        if lab is None or lab.horizon != pred.horizon:
            unmatched += 1
            continue
        if pred.direction == UP and lab.direction == UP:
            tp += 1
        elif pred.direction == UP and lab.direction == DOWN:
            fp += 1
        elif pred.direction == DOWN and lab.direction == DOWN:
            tn += 1
        else:
            fn += 1
    n = tp + fp + tn + fn
    if n == 0:
        raise EmptyIntersection("no prediction matches any label")

    accuracy = Fraction(tp + tn, n)
    precision_deg = (tp + fp) == 0
    recall_deg = (tp + fn) == 0
    precision = Fraction(0) if precision_deg else Fraction(tp, tp + fp)
    recall = Fraction(0) if recall_deg else Fraction(tp, tp + fn)
    f1_deg = (precision + recall) == 0
    f1 = Fraction(0) if f1_deg else 2 * precision * recall / (precision + recall)
    return ClassificationReport(
        tp, fp, tn, fn, n,
        float(accuracy), float(precision), float(recall), float(f1),
        precision_deg, recall_deg, f1_deg, unmatched,
    )


# ---------------------------------------------------------------------------
# Backtest
# ---------------------------------------------------------------------------


def total_return(returns: Sequence[float]) -> float:
    prod = 1.0
    for r in returns:
        prod *= 1.0 + r
    return prod - 1.0


def win_rate(returns: Sequence[float]) -> float:
    if not returns:
        return 0.0
    return sum(1 for r in returns if r > 0) / len(returns)


def max_drawdown(returns: Sequence[float]) -> float:
    """Largest peak-to-trough decline; running peak seeded at the initial equity 1."""
    equity = 1.0
    peak = 1.0
    worst = 0.0
    for r in returns:
        equity *= 1.0 + r
        peak = max(peak, equity)
        worst = min(worst, equity / peak - 1.0)
    return worst


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def _guard_variance(values: Sequence[float], what: str) -> None:
    if len(values) < 2:
        raise ZeroVariance(f"need at least two returns for {what}")
    if min(values) == max(values):
        raise ZeroVariance(f"constant return series has no defined {what}")


def annualized_volatility(returns: Sequence[float]) -> float:
    _guard_variance(returns, "a sample deviation")
    _mean, std = _mean_std(returns)
    return std * math.sqrt(TRADING_DAYS_PER_YEAR)


def sharpe_ratio(returns: Sequence[float], risk_free: float = 0.0) -> float:
    excess = [r - risk_free for r in returns]
    _guard_variance(excess, "a Sharpe ratio")
    mean, std = _mean_std(excess)
    return math.sqrt(TRADING_DAYS_PER_YEAR) * mean / std


@dataclass(frozen=True)
class BacktestReport:
    total_return: float
    sharpe: float
    ann_vol: float
    max_drawdown: float
    win_rate: float
    daily_returns: tuple[float, ...]
    dates: tuple[date, ...]
    equity: tuple[float, ...]
    basket: tuple[str, ...]
    base_date: Optional[date] = None

    def to_json(self) -> dict:
        return {
            "total_return": self.total_return,
            "sharpe": self.sharpe,
            "ann_vol": self.ann_vol,
            "max_drawdown": self.max_drawdown,
            "win_rate": self.win_rate,
            "basket": list(self.basket),
            "n_days": len(self.daily_returns),
        }


def compute_backtest(
    returns: Sequence[float],
    dates: Sequence[date],
    basket: Sequence[str],
    risk_free: float = 0.0,
    base_date: Optional[date] = None,
) -> BacktestReport:
    equity = []
    value = 1.0
    for r in returns:
        value *= 1.0 + r
        equity.append(value)
    return BacktestReport(
        total_return=total_return(returns),
        sharpe=sharpe_ratio(returns, risk_free),
        ann_vol=annualized_volatility(returns),
        max_drawdown=max_drawdown(returns),
        win_rate=win_rate(returns),
        daily_returns=tuple(returns),
        dates=tuple(dates),
        equity=tuple(equity),
        basket=tuple(basket),
        base_date=base_date,
    )


def backtest_top10(
    verdicts: Iterable[Verdict],
    prices: dict[str, PriceSeries],
    window: tuple[date, date],
    basket_size: int = 10,
    risk_free: float = 0.0,
) -> BacktestReport:
    """Buy&hold the top ``basket_size`` tickers by verdict confidence at window start.

    Ties break lexicographically by ticker. The basket's trading calendar is
    the intersection of member date sets within the window; members must
    cover the selection date.
    """
    start, end = window
    in_window = [v for v in verdicts if start <= v.date < end]
    if not in_window:
        raise InsufficientTickers("no verdicts inside the backtest window")
    first_day = min(v.date for v in in_window)
    day_one = {}
    for v in in_window:
        if v.date == first_day and v.ticker in prices and first_day in prices[v.ticker].dates:
            day_one.setdefault(v.ticker, v)
    ranked = sorted(day_one.values(), key=lambda v: (-v.confidence, v.ticker))
    if len(ranked) < basket_size:
        raise InsufficientTickers(
            f"need {basket_size} tickers with verdicts and prices at {first_day.isoformat()}, "
            f"got {len(ranked)}"
        )
    basket = tuple(v.ticker for v in ranked[:basket_size])

    calendar: Optional[set[date]] = None
    for ticker in basket:
        member_days = {d for d in prices[ticker].dates if first_day <= d < end}
        calendar = member_days if calendar is None else calendar & member_days
    days = sorted(calendar or ())
    if len(days) < 2:
        raise InsufficientTickers("basket members share fewer than two trading dates in the window")

    returns = []
    for prev, cur in zip(days, days[1:]):
        member_returns = [
            (prices[t].close_at(cur) - prices[t].close_at(prev)) / prices[t].close_at(prev)
            for t in basket
        ]
        returns.append(sum(member_returns) / len(member_returns))
    return compute_backtest(returns, days[1:], basket, risk_free, base_date=days[0])


# ---------------------------------------------------------------------------
# Interpretability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterpretabilityReport:
    n_predictions: int
    path_coverage: float
    mean_paths_per_prediction: float
    rule_match_rate: float
    mean_distinct_relations_per_path: float
    mean_unique_rules_per_prediction: float
    recency_within_7d: float
    recency_within_30d: float
    recency_over_30d: float
    mean_distinct_text_sources: float

    def to_json(self) -> dict:
        return {
            "n_predictions": self.n_predictions,
            "path_coverage": self.path_coverage,
            "mean_paths_per_prediction": self.mean_paths_per_prediction,
            "rule_match_rate": self.rule_match_rate,
            "mean_distinct_relations_per_path": self.mean_distinct_relations_per_path,
            "mean_unique_rules_per_prediction": self.mean_unique_rules_per_prediction,
            "recency_within_7d": self.recency_within_7d,
            "recency_within_30d": self.recency_within_30d,
            "recency_over_30d": self.recency_over_30d,
            "mean_distinct_text_sources": self.mean_distinct_text_sources,
        }


def interpretability_stats(verdicts: Sequence[Verdict], graph: Graph) -> InterpretabilityReport:
    """Path-quality statistics over the verdicts' evidence paths.

    Recency is (verdict date - published_at) of each evidence TextSource;
    the 7d/30d buckets are cumulative and over_30d is the complement.
    """
    n_pred = len(verdicts)
    if n_pred == 0:
        return InterpretabilityReport(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    covered = 0
    total_paths = 0
    paths_with_rule = 0
    distinct_rel_sum = 0
    unique_rule_sum = 0
    text_count_sum = 0
    recency_days: list[int] = []

    snap_cache: dict[date, Snapshot] = {}
    for verdict in verdicts:
        if verdict.evidence:
            covered += 1
        rules_seen = set()
        texts_seen = set()
        snap = snap_cache.setdefault(verdict.date, graph.at(verdict.date))
        for item in verdict.evidence:
            total_paths += 1
            if item.rule is not None:
                paths_with_rule += 1
                rules_seen.add((item.rule.body, item.rule.direction))
            distinct_rel_sum += len(set(item.path.relations))
            for uid in _path_text_sources(snap, item.path):
                texts_seen.add(uid)
        unique_rule_sum += len(rules_seen)
        text_count_sum += len(texts_seen)
        for uid in sorted(texts_seen):
            published = graph.entity(uid).published_at
            if published is not None:
                recency_days.append((verdict.date - published).days)

    n_rec = len(recency_days)
    within7 = sum(1 for d in recency_days if d <= 7) / n_rec if n_rec else 0.0
    within30 = sum(1 for d in recency_days if d <= 30) / n_rec if n_rec else 0.0
    return InterpretabilityReport(
        n_predictions=n_pred,
        path_coverage=covered / n_pred,
        mean_paths_per_prediction=total_paths / n_pred,
        rule_match_rate=paths_with_rule / total_paths if total_paths else 0.0,
        mean_distinct_relations_per_path=distinct_rel_sum / total_paths if total_paths else 0.0,
        mean_unique_rules_per_prediction=unique_rule_sum / n_pred,
        recency_within_7d=within7,
        recency_within_30d=within30,
        recency_over_30d=1.0 - within30 if n_rec else 0.0,
        mean_distinct_text_sources=text_count_sum / n_pred,
    )


def _path_text_sources(snap: Snapshot, path) -> set[str]:
    """TextSources on the path or anchored to it via EXTRACTED_FROM valid as-of."""
    graph = snap.graph
    sources = {uid for uid in path.nodes if graph.entity(uid).kind is EntityKind.TEXT_SOURCE}
    for uid in path.nodes:
        for rel, other, _tri in snap.neighbors(uid, "out"):
            if rel == EXTRACTED_FROM and graph.entity(other).kind is EntityKind.TEXT_SOURCE:
                sources.add(other)
    return sources


# ---------------------------------------------------------------------------
# Ablation grid
# ---------------------------------------------------------------------------

ABLATION_NAMES = (
    "full",
    "no_temporal_constraints",
    "no_rule_guidance",
    "no_multi_hop",
    "single_best_aggregation",
    "no_llm_selection",
    "random_classifier",
)


@dataclass(frozen=True)
class AblationRow:
    name: str
    report: ClassificationReport


def ablation_run(
    snap_factory: Callable[[date], Snapshot],
    stocks: Sequence[str],
    dates: Sequence[date],
    bank: RuleBank,
    selector: Optional[RelationSelector],
    validator: Validator,
    econfig: ExplorerConfig,
    vconfig: VerdictConfig,
    labels: LabelTable,
    *,
    seed: int = 0,
    horizon: int = 1,
    instance_filter=None,
    jobs: int = 1,
) -> list[AblationRow]:
    """Classification reports for the component-toggle grid plus a seeded
    random-classifier baseline; each toggle changes exactly one behavior."""

    variants: list[tuple[str, ExplorerConfig, VerdictConfig]] = [
        ("full", econfig, vconfig),
        ("no_temporal_constraints", replace(econfig, temporal_constraints=False), vconfig),
        ("no_rule_guidance", replace(econfig, rule_guidance=False), vconfig),
        ("no_multi_hop", replace(econfig, multi_hop=False), vconfig),
        ("single_best_aggregation", econfig, replace(vconfig, aggregation="single_best")),
        ("no_llm_selection", replace(econfig, llm_selection=False), vconfig),
    ]
    rows: list[AblationRow] = []
    instances: list[tuple[str, date]] = []
    for name, ec, vc in variants:
        run = predict_all(
            snap_factory, stocks, dates, bank, selector, validator, ec, vc,
            horizon=horizon, instance_filter=instance_filter, jobs=jobs,
        )
        if name == "full":
            instances = [(v.ticker, v.date) for v in run.verdicts]
        rows.append(AblationRow(name, classify_metrics(run.verdicts, labels)))

    rng = random.Random(seed)
    random_verdicts = [
        Verdict(ticker, day, horizon, UP if rng.random() < 0.5 else DOWN, 0.5, ())
        for ticker, day in instances
    ]
    rows.append(AblationRow("random_classifier", classify_metrics(random_verdicts, labels)))
    return rows
