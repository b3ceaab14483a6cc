"""Operator-facing command line: synth, ingest, mine, predict, evaluate,
backtest, counterfactual, ablate.

Every command reads one flat INI config (flags override the file, the
file overrides defaults), stamps outputs with the canonical config hash
plus seed, and drops a per-command run report (wall time, counts, kernel
backend) next to them. Errors leave machine-readable JSON on stderr and
a nonzero exit code.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from datetime import date
from typing import Optional

from . import __version__
from .config import RunConfig, config_hash, dump_config, load_config
from .counterfactual import MASK_EDGE, MASK_TEXT, sweep, write_sweep_csv
from .errors import ConfigError, IoError, PipelineError
from .evaluation import ablation_run, backtest_top10, classify_metrics, interpretability_stats
from .explore import HeuristicSelector, passthrough_selector
from .graph import (
    Graph,
    IngestionReport,
    build_graph,
    load_edges_jsonl,
    load_entities_jsonl,
)
from .market import label_table, load_prices_csv
from .remote import HttpRelationSelector, HttpValidator
from .rules import load_bank, mine, save_bank
from .seeding import derive_seed
from .synth import generate, write_dataset
from .traversal import backend_name
from .verdict import (
    default_validator,
    load_verdicts_jsonl,
    predict_all,
    scored_path_to_json,
    write_verdicts_jsonl,
)

ABLATE_FLAGS = {
    "no-temporal": ("explorer", "temporal_constraints"),
    "no-rules": ("explorer", "rule_guidance"),
    "no-multihop": ("explorer", "multi_hop"),
    "no-selection": ("explorer", "llm_selection"),
    "no-aggregation": ("verdict", "aggregation"),
}


def _require_file(path: str, role: str) -> str:
    if not os.path.isfile(path):
        raise ConfigError(f"{role} file not found: {path}")
    return path


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _header(cfg: RunConfig) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg.seed}


def _comment(cfg: RunConfig) -> str:
    return f"config_hash={config_hash(cfg)} seed={cfg.seed}"


def _run_report(cfg: RunConfig, command: str, counts: dict, started: float) -> None:
    report = {
        "command": command,
        "version": __version__,
        "python": sys.version.split()[0],
        "kernel_backend": backend_name(),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "counts": counts,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    _write_json(os.path.join(cfg.out_dir, f"run_report.{command}.json"), report)


def _effective_jobs(cfg: RunConfig) -> int:
    return cfg.jobs if cfg.jobs > 0 else (os.cpu_count() or 1)


def _sanitized_graph(cfg: RunConfig) -> tuple[Graph, IngestionReport]:
    """Load entity/edge files, drop unusable lines into the report, build."""
    _require_file(cfg.entities_path, "entities")
    _require_file(cfg.edges_path, "edges")
    report = IngestionReport()
    entities, report = load_entities_jsonl(cfg.entities_path, report)
    seen: set[str] = set()
    unique = []
    for ent in entities:
        if ent.uid in seen:
            report.reject(cfg.entities_path, -1, f"duplicate uid {ent.uid!r}")
            continue
        seen.add(ent.uid)
        unique.append(ent)
    triples, report = load_edges_jsonl(cfg.edges_path, report)
    kept = []
    for tri in triples:
        missing = [uid for uid in (tri.head, tri.tail) if uid not in seen]
        if missing:
            report.reject(cfg.edges_path, -1, f"unknown endpoint {missing[0]!r}")
            continue
        kept.append(tri)
    return build_graph(unique, kept), report


def _load_market(cfg: RunConfig):
    _require_file(cfg.prices_path, "prices")
    return load_prices_csv(cfg.prices_path)


def _selector(cfg: RunConfig):
    if cfg.selector_url:
        return HttpRelationSelector(
            cfg.selector_url, cfg.selector_timeout, HeuristicSelector(cfg.explorer.selector_recency_days)
        )
    if not cfg.explorer.llm_selection:
        return passthrough_selector
    return HeuristicSelector(cfg.explorer.selector_recency_days)


def _validator(cfg: RunConfig):
    if cfg.validator_url:
        return HttpValidator(cfg.validator_url, cfg.validator_timeout)
    return default_validator


def _universe(graph: Graph, prices: dict) -> list[str]:
    return [ent.uid for ent in graph.companies() if ent.ticker in prices]


def _window_dates(prices: dict, start: date, end: date) -> list[date]:
    days: set[date] = set()
    for series in prices.values():
        days.update(d for d in series.dates if start <= d < end)
    return sorted(days)


def _predict_run(cfg: RunConfig, graph: Graph, prices: dict, bank, selector, validator):
    stocks = _universe(graph, prices)
    dates = _window_dates(prices, cfg.test_start, cfg.test_end)
    filt = lambda ticker, day: ticker in prices and day in prices[ticker].dates
    return predict_all(
        graph.at,
        stocks,
        dates,
        bank,
        selector,
        validator,
        cfg.explorer,
        cfg.verdict,
        horizon=cfg.horizon,
        instance_filter=filt,
        jobs=_effective_jobs(cfg),
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(cfg: RunConfig) -> dict:
    spec = cfg.synth_spec()
    dataset = generate(spec)
    for path in (cfg.entities_path, cfg.edges_path, cfg.prices_path):
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
    write_dataset(dataset, cfg.entities_path, cfg.edges_path, cfg.prices_path, _header(cfg))
    manifest = dict(dataset.manifest)
    manifest["config_hash"] = config_hash(cfg)
    _write_json(os.path.join(cfg.out_dir, "manifest.json"), manifest)
    return {
        "entities": len(dataset.entities),
        "edges": len(dataset.triples),
        "tickers": len(dataset.prices),
        "firings": len(dataset.manifest["firings"]),
        "decoys": len(dataset.manifest["decoys"]),
    }


def cmd_ingest(cfg: RunConfig) -> dict:
    graph, report = _sanitized_graph(cfg)
    prices, extreme = _load_market(cfg)
    out = report.to_json()
    out["config_hash"] = config_hash(cfg)
    out["n_entities"] = len(graph)
    out["n_edges"] = len(graph.triples)
    out["n_tickers"] = len(prices)
    out["extreme_moves"] = extreme
    _write_json(os.path.join(cfg.out_dir, "ingest_report.json"), out)
    return {"entities": len(graph), "edges": len(graph.triples), "rejected": len(report.rejected)}


def cmd_mine(cfg: RunConfig) -> dict:
    graph, _report = _sanitized_graph(cfg)
    prices, _extreme = _load_market(cfg)
    labels = label_table(prices.values(), cfg.train_start, cfg.train_end, cfg.mining.horizon)
    mining_days = sorted({lab.date for lab in labels})
    snap_dates = [(graph.at(day), day) for day in mining_days]
    stocks = _universe(graph, prices)
    bank = mine(snap_dates, stocks, labels, cfg.mining)
    parent = os.path.dirname(cfg.rules_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    save_bank(bank, cfg.rules_path, _header(cfg))
    return {"rules": len(bank), "mining_days": len(mining_days), "stocks": len(stocks)}


def cmd_predict(cfg: RunConfig) -> dict:
    graph, _report = _sanitized_graph(cfg)
    prices, _extreme = _load_market(cfg)
    _require_file(cfg.rules_path, "rules")
    bank = load_bank(cfg.rules_path)
    selector = _selector(cfg)
    run = _predict_run(cfg, graph, prices, bank, selector, _validator(cfg))
    write_verdicts_jsonl(os.path.join(cfg.out_dir, "verdicts.jsonl"), run.verdicts, _header(cfg))
    with open(os.path.join(cfg.out_dir, "paths.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_header": _header(cfg)}, separators=(",", ":")) + "\n")
        for ticker, day, scored in run.paths:
            for path, score in scored:
                fh.write(
                    json.dumps(scored_path_to_json(ticker, day, path, score, bank), separators=(",", ":"))
                    + "\n"
                )
    counts = {
        "verdicts": len(run.verdicts),
        "skipped": len(run.skipped),
        "with_evidence": sum(1 for v in run.verdicts if v.evidence),
    }
    if isinstance(selector, HttpRelationSelector):
        counts["selector_fallbacks"] = selector.fallback_count
    return counts


def cmd_evaluate(cfg: RunConfig) -> dict:
    graph, _report = _sanitized_graph(cfg)
    prices, _extreme = _load_market(cfg)
    verdicts_path = _require_file(os.path.join(cfg.out_dir, "verdicts.jsonl"), "verdicts")
    verdicts = load_verdicts_jsonl(verdicts_path, graph)
    labels = label_table(prices.values(), cfg.test_start, cfg.test_end, cfg.horizon)
    classification = classify_metrics(verdicts, labels)
    interpretability = interpretability_stats(verdicts, graph)
    report: dict = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "classification": classification.to_json(),
        "interpretability": interpretability.to_json(),
    }
    try:
        bt = backtest_top10(verdicts, prices, (cfg.test_start, cfg.test_end), cfg.basket_size, cfg.risk_free)
        report["backtest"] = bt.to_json()
        _write_equity_csv(cfg, bt)
    except PipelineError as exc:
        report["backtest"] = {"error": f"{type(exc).__name__}: {exc}"}
    _write_json(os.path.join(cfg.out_dir, "report.json"), report)
    return {"n": classification.n, "accuracy": classification.accuracy}


def _write_equity_csv(cfg: RunConfig, bt) -> None:
    with open(os.path.join(cfg.out_dir, "equity_curve.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {_comment(cfg)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "portfolio_value"])
        if bt.base_date is not None:
            writer.writerow([bt.base_date.isoformat(), repr(1.0)])
        for day, value in zip(bt.dates, bt.equity):
            writer.writerow([day.isoformat(), repr(value)])


def cmd_backtest(cfg: RunConfig) -> dict:
    graph, _report = _sanitized_graph(cfg)
    prices, _extreme = _load_market(cfg)
    verdicts_path = _require_file(os.path.join(cfg.out_dir, "verdicts.jsonl"), "verdicts")
    verdicts = load_verdicts_jsonl(verdicts_path, graph)
    bt = backtest_top10(verdicts, prices, (cfg.test_start, cfg.test_end), cfg.basket_size, cfg.risk_free)
    obj = bt.to_json()
    obj["config_hash"] = config_hash(cfg)
    _write_json(os.path.join(cfg.out_dir, "backtest.json"), obj)
    _write_equity_csv(cfg, bt)
    return {"total_return": bt.total_return, "sharpe": bt.sharpe}


def cmd_counterfactual(cfg: RunConfig) -> dict:
    graph, _report = _sanitized_graph(cfg)
    prices, _extreme = _load_market(cfg)
    _require_file(cfg.rules_path, "rules")
    bank = load_bank(cfg.rules_path)
    selector = _selector(cfg)
    validator = _validator(cfg)
    run = _predict_run(cfg, graph, prices, bank, selector, validator)
    labels = label_table(prices.values(), cfg.test_start, cfg.test_end, cfg.horizon)
    kinds = [MASK_TEXT, MASK_EDGE] if cfg.cf_kind == "both" else [cfg.cf_kind]
    rows = []
    for kind in kinds:
        rows.extend(
            sweep(
                kind,
                cfg.ratios,
                run.verdicts,
                labels,
                graph.at,
                lambda ticker: graph.company_by_ticker(ticker).uid,
                bank,
                selector,
                validator,
                cfg.explorer,
                cfg.verdict,
                seed=derive_seed(cfg.seed, "counterfactual"),
                horizon=cfg.horizon,
            )
        )
    write_sweep_csv(os.path.join(cfg.out_dir, "counterfactual.csv"), rows, _comment(cfg))
    return {"rows": len(rows), "kinds": len(kinds), "baseline_instances": len(run.verdicts)}


def cmd_ablate(cfg: RunConfig) -> dict:
    graph, _report = _sanitized_graph(cfg)
    prices, _extreme = _load_market(cfg)
    _require_file(cfg.rules_path, "rules")
    bank = load_bank(cfg.rules_path)
    stocks = _universe(graph, prices)
    dates = _window_dates(prices, cfg.test_start, cfg.test_end)
    labels = label_table(prices.values(), cfg.test_start, cfg.test_end, cfg.horizon)
    filt = lambda ticker, day: ticker in prices and day in prices[ticker].dates
    rows = ablation_run(
        graph.at,
        stocks,
        dates,
        bank,
        _selector(cfg),
        _validator(cfg),
        cfg.explorer,
        cfg.verdict,
        labels,
        seed=derive_seed(cfg.seed, "random_classifier"),
        horizon=cfg.horizon,
        instance_filter=filt,
        jobs=_effective_jobs(cfg),
    )
    with open(os.path.join(cfg.out_dir, "ablation.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {_comment(cfg)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["configuration", "accuracy", "precision", "recall", "f1", "n"])
        for row in rows:
            rep = row.report
            writer.writerow(
                [row.name, repr(rep.accuracy), repr(rep.precision), repr(rep.recall), repr(rep.f1), rep.n]
            )
    _write_json(
        os.path.join(cfg.out_dir, "ablation.json"),
        {"config_hash": config_hash(cfg), "rows": {row.name: row.report.to_json() for row in rows}},
    )
    return {"configurations": len(rows)}


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "mine": cmd_mine,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "backtest": cmd_backtest,
    "counterfactual": cmd_counterfactual,
    "ablate": cmd_ablate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulehop",
        description="Rule-guided temporal KG reasoning for stock movement verdicts",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synth", "generate a synthetic KG, prices, and ground-truth manifest"),
        ("ingest", "validate input files and write the ingestion report"),
        ("mine", "mine the rule bank from the training window"),
        ("predict", "walk-forward verdicts over the test window"),
        ("evaluate", "classification/interpretability/backtest report"),
        ("backtest", "Top-10 buy&hold backtest of existing verdicts"),
        ("counterfactual", "Mask-Text / Mask-Edge ratio sweeps"),
        ("ablate", "component-toggle ablation grid"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="INI config file")
        cmd.add_argument("--seed", type=int, help="master seed override")
        cmd.add_argument("--jobs", type=int, help="worker count (0 = all cores)")
        cmd.add_argument("--out-dir", help="output directory override")
        cmd.add_argument(
            "--dump-config", action="store_true", help="print the canonical effective config and exit"
        )
        if name == "predict":
            cmd.add_argument(
                "--ablate",
                action="append",
                default=[],
                choices=sorted(ABLATE_FLAGS),
                help="disable one component (repeatable)",
            )
    return parser


def _apply_ablate_flags(cfg: RunConfig, flags: list[str]) -> RunConfig:
    from dataclasses import replace

    explorer, verdict = cfg.explorer, cfg.verdict
    for flag in flags:
        section, key = ABLATE_FLAGS[flag]
        if section == "explorer":
            explorer = replace(explorer, **{key: False})
        else:
            verdict = replace(verdict, aggregation="single_best")
    return replace(cfg, explorer=explorer, verdict=verdict)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.jobs is not None:
            overrides["jobs"] = args.jobs
        if args.out_dir is not None:
            overrides["out_dir"] = args.out_dir
        cfg = load_config(args.config, overrides)
        if getattr(args, "ablate", None):
            cfg = _apply_ablate_flags(cfg, args.ablate)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return 0
        os.makedirs(cfg.out_dir, exist_ok=True)
        counts = COMMANDS[args.command](cfg)
        _run_report(cfg, args.command, counts, started)
        print(json.dumps({"command": args.command, "ok": True, "counts": counts}))
        return 0
    except OSError as exc:
        error = IoError(str(exc))
        print(json.dumps({"error": {"type": "IoError", "message": str(error)}}), file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "ConfigError", "message": str(exc)}}), file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(
            json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
