"""HTTP relation-selector and validator plugins.

Both POST a JSON context and fall back to the deterministic local
implementation on any transport or contract failure, counting fallbacks
for the run report.
"""

from __future__ import annotations

import json
import urllib.request
from typing import Optional

from .explore import HeuristicSelector, SelectionContext
from .market import DOWN, UP
from .rules import Rule, rule_to_json
from .verdict import ValidatorContext, default_validator


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    req = urllib.request.Request(
        url,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        return json.loads(resp.read().decode("utf-8"))


class HttpRelationSelector:
    """Scores candidate extensions via an external service; heuristic fallback."""

    def __init__(self, url: str, timeout: float = 5.0, fallback: Optional[HeuristicSelector] = None):
        self.url = url
        self.timeout = timeout
        self.fallback = fallback if fallback is not None else HeuristicSelector()
        self.fallback_count = 0

    def __call__(self, ctx: SelectionContext) -> list[int]:
        payload = {
            "kind": "selector",
            "as_of": ctx.as_of.isoformat(),
            "candidates": [
                {
                    "parent": c.parent_uid,
                    "prefix_relations": list(c.prefix_relations),
                    "relation": c.relation,
                    "neighbor": c.neighbor_uid,
                    "neighbor_kind": c.neighbor_kind,
                    "edge_valid_from": c.edge_valid_from.isoformat(),
                    "neighbor_degree": c.neighbor_degree,
                }
                for c in ctx.candidates
            ],
        }
        try:
            obj = _post_json(self.url, payload, self.timeout)
            scores = [int(s) for s in obj["scores"]]
            if len(scores) != len(ctx.candidates) or any(s not in (0, 1, 2) for s in scores):
                raise ValueError("malformed selector response")
            return scores
        except Exception:
            self.fallback_count += 1
            return self.fallback(ctx)


class HttpValidator:
    """External (label, plausibility) judge; deterministic local fallback."""

    def __init__(self, url: str, timeout: float = 5.0):
        self.url = url
        self.timeout = timeout
        self.fallback_count = 0

    def __call__(self, context: ValidatorContext, path, rule: Rule) -> tuple[str, float]:
        texts = []
        if context.snapshot is not None:
            for uid in context.text_sources:
                ent = context.snapshot.graph.entity(uid)
                texts.append({"uid": uid, "metadata": dict(ent.metadata)})
        payload = {
            "kind": "validator",
            "as_of": context.as_of.isoformat(),
            "ticker": context.ticker,
            "nodes": list(path.nodes),
            "relations": list(path.relations),
            "rule": rule_to_json(rule),
            "text_sources": texts,
        }
        try:
            obj = _post_json(self.url, payload, self.timeout)
            label = obj["label"]
            plausibility = float(obj["plausibility"])
            if label not in (UP, DOWN) or not 0.0 <= plausibility <= 1.0:
                raise ValueError("malformed validator response")
            return label, plausibility
        except Exception:
            self.fallback_count += 1
            return default_validator(context, path, rule)
