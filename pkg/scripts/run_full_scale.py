#!/usr/bin/env python3
"""End-to-end planning run at deployment scale (64 sublayers, 5 types).

Uses the shipped memory/latency measurements, a synthetic trace, and a few
representative weight vectors; prints the chosen composition, estimated
QoS, average effective bits, and wall time per plan.
"""

import argparse
import time
from pathlib import Path

from make_synthetic_trace import build_trace

from quantplan.allocation import allocate, average_effective_bits
from quantplan.contribution import score_layers
from quantplan.registry import WeightVector, load_qos_matrix, load_registry
from quantplan.topsis import collect_column_stats, select_best_given_stats

DATA = Path(__file__).resolve().parent.parent / "data"

WEIGHTS = [
    ("memory-first", (1.0, 0.0)),
    ("latency-first", (0.0, 1.0)),
    ("balanced", (0.5, 0.5)),
    ("memory-leaning", (0.7, 0.3)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--qos", default=DATA / "llama31_memlat.csv",
                        help="uniform QoS CSV (default: shipped Llama3.1 data)")
    parser.add_argument("--registry", default=DATA / "kquants_memlat.json")
    parser.add_argument("--layers", type=int, default=64)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    registry = load_registry(args.registry)
    matrix = load_qos_matrix(args.qos, registry)
    trace = build_trace(args.layers, prompts=8, tokens=16, seed=42)
    scores = score_layers(trace)

    t0 = time.perf_counter()
    stats = collect_column_stats(args.layers, registry, matrix, workers=args.workers)
    t_stats = time.perf_counter() - t0
    print(f"pass 1 over {stats.count} candidates: {t_stats:.2f} s")

    for name, weights in WEIGHTS:
        w = WeightVector(weights)
        t0 = time.perf_counter()
        best = select_best_given_stats(args.layers, registry, matrix, w, stats,
                                       workers=args.workers)
        dt = time.perf_counter() - t0
        alloc = allocate(scores, best.composition, registry.types, weights=w)
        bits = average_effective_bits(alloc, registry)
        comp = ", ".join(
            f"{t.name}={z}" for t, z in zip(registry.types, best.composition.counts) if z
        )
        est = ", ".join(
            f"{m.name}={v:.3f}" for m, v in zip(matrix.metrics, best.estimated.values)
        )
        print(f"{name:15s} [{comp}] -> {est} | avg bits {bits:.3f} | "
              f"score {best.ranking_score:.4f} | pass 2 {dt:.2f} s")


if __name__ == "__main__":
    main()
