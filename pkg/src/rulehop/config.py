"""Run configuration: one flat INI file, CLI-flag overrides, canonical hashing.

Precedence is flag > file > default. The canonical dump is what gets
hashed, so two runs with equal hash and seed are guaranteed the same
effective configuration.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Optional

from .dates import parse_date
from .errors import ConfigError
from .explore import ExplorerConfig
from .rules import MiningConfig
from .seeding import derive_seed
from .synth import GeneratorSpec, PlantedRule, default_spec
from .verdict import VerdictConfig

DEFAULT_RATIOS = (0, 20, 40, 60, 80, 100)


@dataclass(frozen=True)
class RunConfig:
    entities_path: str = "data/entities.jsonl"
    edges_path: str = "data/edges.jsonl"
    prices_path: str = "data/prices.csv"
    rules_path: str = "out/rules.jsonl"
    out_dir: str = "out"
    train_start: date = date(2022, 1, 1)
    train_end: date = date(2023, 1, 1)
    test_start: date = date(2023, 1, 1)
    test_end: date = date(2024, 1, 1)
    horizon: int = 1
    seed: int = 7
    jobs: int = 0  # 0 = one worker per available core
    mining: MiningConfig = MiningConfig()
    explorer: ExplorerConfig = ExplorerConfig()
    verdict: VerdictConfig = VerdictConfig()
    basket_size: int = 10
    risk_free: float = 0.0
    ratios: tuple[int, ...] = DEFAULT_RATIOS
    cf_kind: str = "both"  # mask_text | mask_edge | both
    synth_overrides: dict = field(default_factory=dict)
    selector_url: str = ""
    selector_timeout: float = 5.0
    validator_url: str = ""
    validator_timeout: float = 5.0

    def __post_init__(self) -> None:
        if not (self.train_start < self.train_end <= self.test_start < self.test_end):
            raise ConfigError(
                "windows must satisfy train_start < train_end <= test_start < test_end"
            )
        if self.cf_kind not in ("mask_text", "mask_edge", "both"):
            raise ConfigError(f"cf_kind must be mask_text/mask_edge/both, got {self.cf_kind!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.jobs < 0:
            raise ConfigError("jobs must be >= 0")

    def synth_spec(self) -> GeneratorSpec:
        """Generator spec from [synth] overrides, seeded off the master seed."""
        base = default_spec(seed=derive_seed(self.seed, "synth"))
        kwargs = dict(self.synth_overrides)
        if "planted" in kwargs:
            kwargs["planted"] = tuple(
                PlantedRule(
                    body=tuple(entry["body"]),
                    direction=entry["direction"],
                    precision=float(entry["precision"]),
                    firing_rate=float(entry["firing_rate"]),
                    decoy_rate=float(entry.get("decoy_rate", 0.0)),
                )
                for entry in kwargs["planted"]
            )
        for key in ("start", "end"):
            if key in kwargs and isinstance(kwargs[key], str):
                kwargs[key] = parse_date(kwargs[key])
        try:
            return replace(base, **kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad [synth] key: {exc}") from None


def _get(parser: configparser.ConfigParser, section: str, key: str, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return parser.getboolean(section, key)
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Build the effective configuration (file optional, overrides win)."""
    parser = configparser.ConfigParser()
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not readable: {path}")

    mining = MiningConfig(
        tau_mine=_get(parser, "mining", "tau_mine", float, 0.60),
        min_support=_get(parser, "mining", "min_support", int, 5),
        max_body_len=_get(parser, "mining", "max_body_len", int, 4),
        horizon=_get(parser, "mining", "horizon", int, 1),
        include_single_relation=_get(parser, "mining", "include_single_relation", bool, True),
    )
    explorer = ExplorerConfig(
        beam_width=_get(parser, "explorer", "beam_width", int, 8),
        max_depth=_get(parser, "explorer", "max_depth", int, 3),
        tau_hyp=_get(parser, "explorer", "tau_hyp", float, 0.60),
        max_scored_paths=_get(parser, "explorer", "max_scored_paths", int, 10),
        seed_mode=_get(parser, "explorer", "seed_mode", str, "company"),
        temporal_constraints=_get(parser, "explorer", "temporal_constraints", bool, True),
        rule_guidance=_get(parser, "explorer", "rule_guidance", bool, True),
        multi_hop=_get(parser, "explorer", "multi_hop", bool, True),
        llm_selection=_get(parser, "explorer", "llm_selection", bool, True),
        selector_recency_days=_get(parser, "explorer", "selector_recency_days", int, 30),
        text_seed_lookback_days=_get(parser, "explorer", "text_seed_lookback_days", int, 7),
        allow_inverse_text_edges=_get(parser, "explorer", "allow_inverse_text_edges", bool, True),
    )
    verdict = VerdictConfig(
        evidence_budget=_get(parser, "verdict", "evidence_budget", int, 5),
        fusion_alpha=_get(parser, "verdict", "fusion_alpha", float, 0.5),
        aggregation=_get(parser, "verdict", "aggregation", str, "max"),
    )

    synth_overrides: dict = {}
    if parser.has_section("synth"):
        for key in parser.options("synth"):
            raw = parser.get("synth", key)
            if key == "planted":
                try:
                    synth_overrides[key] = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"[synth] planted must be JSON: {exc.msg}") from None
            elif key in ("start", "end"):
                synth_overrides[key] = raw
            elif key == "anchor_companies":
                synth_overrides[key] = parser.getboolean("synth", key)
            elif key in ("noise_edge_rate", "recent_text_fraction"):
                synth_overrides[key] = float(raw)
            else:
                synth_overrides[key] = int(raw)

    ratios_raw = _get(parser, "counterfactual", "ratios", str, None)
    ratios = DEFAULT_RATIOS
    if ratios_raw is not None:
        try:
            ratios = tuple(int(x) for x in ratios_raw.replace(" ", "").split(",") if x)
        except ValueError:
            raise ConfigError(f"[counterfactual] ratios: cannot parse {ratios_raw!r}") from None

    cfg = RunConfig(
        entities_path=_get(parser, "paths", "entities", str, "data/entities.jsonl"),
        edges_path=_get(parser, "paths", "edges", str, "data/edges.jsonl"),
        prices_path=_get(parser, "paths", "prices", str, "data/prices.csv"),
        rules_path=_get(parser, "paths", "rules", str, "out/rules.jsonl"),
        out_dir=_get(parser, "paths", "out_dir", str, "out"),
        train_start=_get(parser, "run", "train_start", parse_date, date(2022, 1, 1)),
        train_end=_get(parser, "run", "train_end", parse_date, date(2023, 1, 1)),
        test_start=_get(parser, "run", "test_start", parse_date, date(2023, 1, 1)),
        test_end=_get(parser, "run", "test_end", parse_date, date(2024, 1, 1)),
        horizon=_get(parser, "run", "horizon", int, 1),
        seed=_get(parser, "run", "seed", int, 7),
        jobs=_get(parser, "run", "jobs", int, 0),
        mining=mining,
        explorer=explorer,
        verdict=verdict,
        basket_size=_get(parser, "backtest", "basket_size", int, 10),
        risk_free=_get(parser, "backtest", "risk_free", float, 0.0),
        ratios=ratios,
        cf_kind=_get(parser, "counterfactual", "kind", str, "both"),
        synth_overrides=synth_overrides,
        selector_url=_get(parser, "selector", "url", str, ""),
        selector_timeout=_get(parser, "selector", "timeout", float, 5.0),
        validator_url=_get(parser, "validator", "url", str, ""),
        validator_timeout=_get(parser, "validator", "timeout", float, 5.0),
    )
    if overrides:
        try:
            cfg = replace(cfg, **overrides)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def dump_config(cfg: RunConfig) -> str:
    """Canonical INI text; fixed key order so the hash is stable."""
    parser = configparser.ConfigParser()
    parser["run"] = {
        "train_start": cfg.train_start.isoformat(),
        "train_end": cfg.train_end.isoformat(),
        "test_start": cfg.test_start.isoformat(),
        "test_end": cfg.test_end.isoformat(),
        "horizon": str(cfg.horizon),
        "seed": str(cfg.seed),
        "jobs": str(cfg.jobs),
    }
    parser["paths"] = {
        "entities": cfg.entities_path,
        "edges": cfg.edges_path,
        "prices": cfg.prices_path,
        "rules": cfg.rules_path,
        "out_dir": cfg.out_dir,
    }
    parser["mining"] = {
        "tau_mine": repr(cfg.mining.tau_mine),
        "min_support": str(cfg.mining.min_support),
        "max_body_len": str(cfg.mining.max_body_len),
        "horizon": str(cfg.mining.horizon),
        "include_single_relation": str(cfg.mining.include_single_relation).lower(),
    }
    parser["explorer"] = {
        "beam_width": str(cfg.explorer.beam_width),
        "max_depth": str(cfg.explorer.max_depth),
        "tau_hyp": repr(cfg.explorer.tau_hyp),
        "max_scored_paths": str(cfg.explorer.max_scored_paths),
        "seed_mode": cfg.explorer.seed_mode,
        "temporal_constraints": str(cfg.explorer.temporal_constraints).lower(),
        "rule_guidance": str(cfg.explorer.rule_guidance).lower(),
        "multi_hop": str(cfg.explorer.multi_hop).lower(),
        "llm_selection": str(cfg.explorer.llm_selection).lower(),
        "selector_recency_days": str(cfg.explorer.selector_recency_days),
        "text_seed_lookback_days": str(cfg.explorer.text_seed_lookback_days),
        "allow_inverse_text_edges": str(cfg.explorer.allow_inverse_text_edges).lower(),
    }
    parser["verdict"] = {
        "evidence_budget": str(cfg.verdict.evidence_budget),
        "fusion_alpha": repr(cfg.verdict.fusion_alpha),
        "aggregation": cfg.verdict.aggregation,
    }
    parser["backtest"] = {
        "basket_size": str(cfg.basket_size),
        "risk_free": repr(cfg.risk_free),
    }
    parser["counterfactual"] = {
        "ratios": ",".join(str(r) for r in cfg.ratios),
        "kind": cfg.cf_kind,
    }
    if cfg.synth_overrides:
        parser["synth"] = {
            key: (json.dumps(value) if key == "planted" else str(value))
            for key, value in sorted(cfg.synth_overrides.items())
        }
    if cfg.selector_url:
        parser["selector"] = {"url": cfg.selector_url, "timeout": repr(cfg.selector_timeout)}
    if cfg.validator_url:
        parser["validator"] = {"url": cfg.validator_url, "timeout": repr(cfg.validator_timeout)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode("utf-8")).hexdigest()[:16]
