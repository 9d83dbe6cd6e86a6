#!/usr/bin/env python3
"""Generate a deterministic synthetic similarity trace for experiments.

Real traces come from an instrumented inference run; this produces a
statistically plausible stand-in (deep layers drift toward similarity 1,
early layers vary more) so the planning pipeline can be exercised without
a model.
"""

import argparse

import numpy as np

from quantplan.trace import SimilarityObservation, TraceFile, write_trace


def build_trace(num_layers, prompts, tokens, seed, model="synthetic"):
    rng = np.random.default_rng(seed)
    # per-layer mean similarity rises with depth, with per-layer jitter
    depth = np.linspace(0.0, 1.0, num_layers)
    means = 0.65 + 0.3 * depth + rng.normal(0, 0.05, size=num_layers)
    obs = []
    for p in range(prompts):
        for t in range(tokens):
            sims = np.clip(rng.normal(means, 0.08), -1.0, 1.0)
            for layer_id in range(num_layers):
                obs.append(
                    SimilarityObservation(
                        prompt_id=p,
                        token_index=t,
                        layer_id=layer_id,
                        kind="attention" if layer_id % 2 == 0 else "ffn",
                        similarity=float(sims[layer_id]),
                    )
                )
    return TraceFile(model_name=model, num_layers=num_layers, observations=tuple(obs))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--layers", type=int, default=64, help="sublayer count L (default 64)")
    parser.add_argument("--prompts", type=int, default=10)
    parser.add_argument("--tokens", type=int, default=32, help="tokens per prompt")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--model", default="synthetic")
    parser.add_argument("--out", required=True, help="output JSONL path")
    args = parser.parse_args()

    trace = build_trace(args.layers, args.prompts, args.tokens, args.seed, args.model)
    write_trace(trace, args.out)
    print(f"wrote {len(trace.observations)} observations over {args.layers} layers to {args.out}")


if __name__ == "__main__":
    main()
