"""Command-line trace extraction."""

import argparse
import logging
import sys

from .extract import ExtractionConfig, extract_trace


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracecap",
        description="Capture a residual-stream similarity trace from a causal LM",
    )
    parser.add_argument("--model", required=True, help="model id or local path")
    parser.add_argument("--prompts", required=True, help="text file, one prompt per line")
    parser.add_argument("--out", required=True, help="output JSONL trace path")
    parser.add_argument("--max-tokens", type=int, default=64, help="prompt truncation length")
    parser.add_argument("--generate", type=int, default=0,
                        help="greedy continuation tokens to capture as well")
    parser.add_argument("--block-level", action="store_true",
                        help="capture block boundaries only (no sublayer split)")
    parser.add_argument("--dump-vectors", help="optional .npz with the raw captured states")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    cfg = ExtractionConfig(
        model=args.model,
        prompts_path=args.prompts,
        output_path=args.out,
        max_tokens=args.max_tokens,
        generate=args.generate,
        block_level=args.block_level,
        dump_vectors=args.dump_vectors,
        device=args.device,
    )
    try:
        path = extract_trace(cfg)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    with open(path, encoding="utf-8") as fh:
        total = sum(1 for _ in fh) - 1
    print(f"wrote {total} observations to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
