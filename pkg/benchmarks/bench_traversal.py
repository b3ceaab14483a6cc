"""Benchmark: compiled traversal kernel vs pure-Python fallback.

Times the three hot operations (visible-neighbor expansion, visible
degree, rooted relation-sequence enumeration) plus an end-to-end rule
mining pass on a year-scale synthetic graph, once per backend.

Run:  python benchmarks/bench_traversal.py [--seed N] [--companies N]
"""

from __future__ import annotations

import argparse
import time
from datetime import date

from rulehop import traversal
from rulehop import _traversal_py
from rulehop.graph import EXTRACTED_FROM
from rulehop.market import UP, label_table
from rulehop.rules import MiningConfig, mine
from rulehop.synth import GeneratorSpec, PlantedRule, generate

try:
    from rulehop import _traversal as _compiled
except ImportError:
    _compiled = None

KERNEL_FUNCS = ("visible_out", "visible_in", "visible_degree", "rooted_relation_sequences")


def build_dataset(seed: int, companies: int):
    spec = GeneratorSpec(
        start=date(2022, 1, 3),
        end=date(2023, 1, 2),
        planted=(
            PlantedRule(("PARTNERED", "CAUSED_INCREASE", EXTRACTED_FROM), UP, 0.8, 0.15, 0.15),
        ),
        n_companies=companies,
        n_text_sources=200,
        n_events=150,
        noise_edge_rate=20.0,
        seed=seed,
    )
    return generate(spec)


def _use_backend(impl) -> None:
    for name in KERNEL_FUNCS:
        setattr(traversal, name, getattr(impl, name))


def bench_backend(name: str, impl, dataset) -> dict[str, float]:
    _use_backend(impl)
    graph = dataset.graph()
    adj = graph.adj
    n_nodes = len(graph)
    days = [date(2022, m, 15) for m in range(2, 13)]
    ords = [d.toordinal() for d in days]
    timings: dict[str, float] = {}

    started = time.perf_counter()
    touched = 0
    for as_of in ords:
        for node in range(n_nodes):
            touched += len(impl.visible_out(adj, node, as_of, True, None, None))
            touched += len(impl.visible_in(adj, node, as_of, True, None, None))
    timings["neighbors"] = time.perf_counter() - started

    started = time.perf_counter()
    total_degree = 0
    for as_of in ords:
        for node in range(n_nodes):
            total_degree += impl.visible_degree(adj, node, as_of, True, None, None)
    timings["degree"] = time.perf_counter() - started

    roots = [graph.node_index(e.uid) for e in graph.companies()]
    started = time.perf_counter()
    sequences = 0
    for as_of in ords:
        for root in roots:
            sequences += len(impl.rooted_relation_sequences(adj, root, as_of, 4, None, None))
    timings["enumerate"] = time.perf_counter() - started

    labels = label_table(dataset.prices.values(), dataset.spec.start, dataset.spec.end)
    mining_days = sorted({l.date for l in labels})
    snap_dates = [(graph.at(d), d) for d in mining_days]
    stocks = [e.uid for e in graph.companies()]
    started = time.perf_counter()
    bank = mine(snap_dates, stocks, labels, MiningConfig(min_support=10))
    timings["mine"] = time.perf_counter() - started

    print(f"  [{name}] edges touched={touched}, degree sum={total_degree}, "
          f"sequences={sequences}, rules={len(bank)}")
    return timings


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--companies", type=int, default=40)
    args = parser.parse_args()

    dataset = build_dataset(args.seed, args.companies)
    print(f"graph: {len(dataset.entities)} entities, {len(dataset.triples)} edges, "
          f"{len(dataset.prices)} tickers")

    results = {}
    results["pure"] = bench_backend("pure", _traversal_py, dataset)
    if _compiled is not None:
        results["compiled"] = bench_backend("compiled", _compiled, dataset)
    else:
        print("compiled kernel not built; showing pure timings only")

    ops = ("neighbors", "degree", "enumerate", "mine")
    header = f"{'op':<12}" + "".join(f"{b:>12}" for b in results) + (
        f"{'speedup':>10}" if len(results) == 2 else ""
    )
    print()
    print(header)
    print("-" * len(header))
    for op in ops:
        row = f"{op:<12}" + "".join(f"{results[b][op]:>11.3f}s" for b in results)
        if len(results) == 2:
            row += f"{results['pure'][op] / results['compiled'][op]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
