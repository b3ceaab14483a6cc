"""Rule-guided temporal knowledge-graph reasoning for stock movement verdicts.

Pipeline: ingest a temporal KG and price data, mine label-predictive
relation rules from historical as-of snapshots, run rule-guided beam
search per (stock, day) to collect text-grounded hypotheses, aggregate
them into UP/DOWN verdicts with evidence paths, and evaluate via
classification metrics, Top-10 buy&hold backtests, interpretability
statistics, ablations, and counterfactual deletions.
"""

__version__ = "0.1.0"

from .errors import PipelineError
from .graph import Entity, EntityKind, Graph, Snapshot, TemporalTriple, build_graph, snapshot
from .market import DOWN, UP, Label, PriceSeries, forward_return, label, label_table
from .rules import MiningConfig, Rule, RuleBank, mine, prune
from .explore import ExplorerConfig, Hypothesis, Path, PathScore, explore
from .verdict import Verdict, VerdictConfig, decide, default_validator, predict_all
from .evaluation import backtest_top10, classify_metrics, interpretability_stats
from .counterfactual import mask_edge, mask_text, sweep
from .synth import GeneratorSpec, PlantedRule, default_spec, generate

__all__ = [
    "__version__",
    "PipelineError",
    "Entity",
    "EntityKind",
    "Graph",
    "Snapshot",
    "TemporalTriple",
    "build_graph",
    "snapshot",
    "UP",
    "DOWN",
    "Label",
    "PriceSeries",
    "forward_return",
    "label",
    "label_table",
    "MiningConfig",
    "Rule",
    "RuleBank",
    "mine",
    "prune",
    "ExplorerConfig",
    "Hypothesis",
    "Path",
    "PathScore",
    "explore",
    "Verdict",
    "VerdictConfig",
    "decide",
    "default_validator",
    "predict_all",
    "backtest_top10",
    "classify_metrics",
    "interpretability_stats",
    "mask_edge",
    "mask_text",
    "sweep",
    "GeneratorSpec",
    "PlantedRule",
    "default_spec",
    "generate",
]
