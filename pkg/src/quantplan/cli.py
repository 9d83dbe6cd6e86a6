"""Command-line entry points.

Subcommands: score, plan, eval, suite, count. Exit codes: 0 success,
2 validation error, 3 runtime error. Identical inputs and flags produce
byte-identical outputs regardless of worker count. The output directory of
`plan` can be overridden with the QUANTPLAN_OUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ._util import atomic_write_text
from .allocation import allocate, average_effective_bits, emit_manifest
from .compositions import count_compositions, write_composition_dump
from .contribution import ScoreConfig, score_layers, write_scores_csv
from .errors import ValidationError
from .pareto import (
    hv_gain,
    hypervolume,
    hypervolume_monte_carlo,
    pareto_filter,
    read_points_csv,
    reference_from_baseline,
    write_points_csv,
)
from .registry import WeightVector, load_qos_matrix, load_registry
from .topsis import collect_column_stats, select_best_given_stats
from .trace import parse_trace
from .weight_suite import (
    SUITE_METRICS,
    distance_to_best_report,
    generate_weight_suite,
    member_label,
    suite_members,
    write_distance_report_csv,
    write_suite_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _parse_weights(text: str) -> WeightVector:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise ValidationError(f"weights must be comma-separated numbers, got {text!r}") from None
    return WeightVector(tuple(parts))


def _out_dir(args) -> Path:
    env = os.environ.get("QUANTPLAN_OUT_DIR")
    return Path(env) if env else Path(args.out_dir)


def cmd_count(args) -> int:
    n = count_compositions(args.layers, args.types)
    print(n)
    return EXIT_OK


def cmd_score(args) -> int:
    trace = parse_trace(args.trace)
    scores = score_layers(trace, ScoreConfig(gamma=args.gamma))
    write_scores_csv(scores, args.out)
    print(f"wrote {len(scores)} layer scores to {args.out}")
    return EXIT_OK


def _write_plan_files(out_dir, tag, registry, matrix, weights, stats, best, scores, model):
    alloc = allocate(scores, best.composition, registry.types, weights=weights)
    manifest_path = out_dir / f"manifest{tag}.json"
    emit_manifest(alloc, registry, model_name=model, path=manifest_path)
    report = {
        "weights": list(weights.weights),
        "best_composition": list(best.composition.counts),
        "estimated_qos": {
            m.name: v for m, v in zip(matrix.metrics, best.estimated.values)
        },
        "ranking_score": best.ranking_score,
        "column_stats": {
            "sum_of_squares": list(stats.sum_of_squares),
            "minimum": list(stats.minimum),
            "maximum": list(stats.maximum),
            "count": stats.count,
        },
    }
    plan_path = out_dir / f"plan{tag}.json"
    atomic_write_text(plan_path, json.dumps(report, indent=2) + "\n")
    avg_bits = average_effective_bits(alloc, registry)
    counts = ", ".join(
        f"{t.name}={z}" for t, z in zip(registry.types, best.composition.counts) if z
    )
    est = ", ".join(f"{m.name}={v:.4g}" for m, v in zip(matrix.metrics, best.estimated.values))
    print(f"plan{tag}: {counts} | {est} | avg bits {avg_bits:.3f} | score {best.ranking_score:.4f}")
    return plan_path, manifest_path


def cmd_plan(args) -> int:
    registry = load_registry(args.registry)
    matrix = load_qos_matrix(args.qos, registry)
    trace = parse_trace(args.trace)
    scores = score_layers(trace, ScoreConfig(gamma=args.gamma))
    L = trace.num_layers
    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.dump_compositions:
        write_composition_dump(args.dump_compositions, L, len(registry.types), matrix)

    stats = collect_column_stats(L, registry, matrix, workers=args.workers)

    if args.suite:
        if len(matrix.metrics) != len(SUITE_METRICS):
            raise ValidationError(
                f"--suite needs the {len(SUITE_METRICS)} standard metrics, matrix has {len(matrix.metrics)}"
            )
        for idx, (label, _, weights) in enumerate(suite_members(generate_weight_suite(args.compat_residual))):
            best = select_best_given_stats(L, registry, matrix, weights, stats, workers=args.workers)
            _write_plan_files(
                out_dir, f"_{idx:02d}_{label}", registry, matrix, weights, stats, best,
                scores, trace.model_name,
            )
        return EXIT_OK

    if not args.weights:
        raise ValidationError("either --weights or --suite is required")
    weights = _parse_weights(args.weights)
    best = select_best_given_stats(L, registry, matrix, weights, stats, workers=args.workers)
    _write_plan_files(out_dir, "", registry, matrix, weights, stats, best, scores, trace.model_name)
    return EXIT_OK


def cmd_eval(args) -> int:
    baseline, base_metrics = read_points_csv(args.baseline)
    if args.candidates:
        candidates, cand_metrics = read_points_csv(args.candidates)
        if cand_metrics != base_metrics:
            raise ValidationError(
                f"metric columns differ: baseline {base_metrics} vs candidates {cand_metrics}"
            )
    else:
        candidates = []
    directions = tuple(args.directions.split(",")) if args.directions else tuple("cost" for _ in base_metrics)
    if len(directions) != len(base_metrics):
        raise ValidationError(f"expected {len(base_metrics)} directions, got {len(directions)}")

    reference = reference_from_baseline(baseline, directions)
    hv_base_raw = hypervolume(baseline, reference, directions)
    hv_base = hypervolume(baseline, reference, directions, normalize=True)
    combined = baseline + candidates
    hv_cand_raw = hypervolume(candidates or baseline, reference, directions)
    hv_cand = hypervolume(candidates or baseline, reference, directions, normalize=True)
    front = pareto_filter(combined, directions)
    front_labels = {p.label for p in front}

    report = {
        "metrics": base_metrics,
        "directions": list(directions),
        "reference": list(reference),
        "baseline": {
            "points": len(baseline),
            "hv_raw": hv_base_raw.hypervolume,
            "hv_normalized": hv_base.hypervolume,
            "clipped": hv_base.clipped_points,
        },
        "candidates": {
            "points": len(candidates),
            "hv_raw": hv_cand_raw.hypervolume,
            "hv_normalized": hv_cand.hypervolume,
            "clipped": hv_cand.clipped_points,
        },
        "hv_gain_raw": hv_gain(hv_cand_raw.hypervolume, hv_base_raw.hypervolume)
        if hv_base_raw.hypervolume > 0
        else None,
        "hv_gain_normalized": hv_gain(hv_cand.hypervolume, hv_base.hypervolume)
        if hv_base.hypervolume > 0
        else None,
        "pareto_front": [
            {"label": p.label, "provenance": p.provenance, "values": list(p.values)}
            for p in front
        ],
        "front_membership": {p.label: (p.label in front_labels) for p in combined},
    }
    if args.mc_check:
        report["hv_monte_carlo_raw"] = hypervolume_monte_carlo(
            candidates or baseline, reference, directions, samples=args.samples, seed=args.seed
        )
    if args.out:
        atomic_write_text(args.out, json.dumps(report, indent=2) + "\n")
    else:
        print(json.dumps(report, indent=2))
    if args.pareto_csv:
        write_points_csv(front, base_metrics, args.pareto_csv)
    gain = report["hv_gain_normalized"]
    print(
        f"baseline hv {hv_base.hypervolume:.6g}, candidate hv {hv_cand.hypervolume:.6g}"
        + (f", gain {100 * gain:.2f}%" if gain is not None else "")
    )
    return EXIT_OK


def cmd_suite(args) -> int:
    suite = generate_weight_suite(compat_residual=args.compat_residual)
    if args.out:
        write_suite_json(suite, args.out)
        print(f"wrote {sum(len(c.members) for c in suite)} weight vectors to {args.out}")
    else:
        for label, category, w in suite_members(suite):
            print(f"{category:9s} {label} {list(w.weights)}")
    if args.distance_report:
        if not args.baseline:
            raise ValidationError("--distance-report requires --baseline")
        measured, metrics = read_points_csv(args.distance_report)
        baseline, base_metrics = read_points_csv(args.baseline)
        if metrics != base_metrics:
            raise ValidationError(
                f"metric columns differ: measured {metrics} vs baseline {base_metrics}"
            )
        report = distance_to_best_report(
            {p.label: p for p in measured}, baseline, suite=suite, metrics=tuple(metrics)
        )
        if args.report_out:
            write_distance_report_csv(report, args.report_out)
            print(f"wrote category report to {args.report_out}")
        else:
            for name, dists in report.category_distances.items():
                print(name, " ".join(format(d, ".4g") for d in dists))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantplan",
        description="Layer-wise mixed-precision quantization planning and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="size of the candidate composition space")
    p.add_argument("layers", type=int, help="number of sublayers L")
    p.add_argument("types", type=int, help="number of quantization types M")
    p.set_defaults(fn=cmd_count)

    p = sub.add_parser("score", help="layer contribution scores from a similarity trace")
    p.add_argument("--trace", required=True, help="JSONL similarity trace")
    p.add_argument("--gamma", type=float, default=0.9, help="similarity threshold (default 0.9)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("plan", help="full pipeline: score, select, allocate, emit manifest")
    p.add_argument("--registry", required=True, help="quantization type registry JSON")
    p.add_argument("--qos", required=True, help="uniform QoS matrix CSV")
    p.add_argument("--trace", required=True, help="JSONL similarity trace")
    p.add_argument("--weights", help="comma-separated metric weights, e.g. 0.7,0.15,0.15")
    p.add_argument("--suite", action="store_true", help="emit one plan per suite weight vector")
    p.add_argument("--compat-residual", action="store_true",
                   help="skewed suite vectors use 0.1 residuals instead of an equal split")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--out-dir", default=".", help="output directory (env QUANTPLAN_OUT_DIR overrides)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="parallel workers; results do not depend on this")
    p.add_argument("--dump-compositions", help="debug CSV of the whole candidate space")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("eval", help="hypervolume / gain / Pareto report for point sets")
    p.add_argument("--baseline", required=True, help="baseline points CSV")
    p.add_argument("--candidates", help="candidate points CSV")
    p.add_argument("--directions", help="comma-separated cost/benefit per metric (default all cost)")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.add_argument("--pareto-csv", help="write the combined Pareto front as CSV")
    p.add_argument("--mc-check", action="store_true",
                   help="add a Monte-Carlo hypervolume estimate to the report")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("suite", help="emit the 28-vector weight suite / category report")
    p.add_argument("--compat-residual", action="store_true")
    p.add_argument("--out", help="suite JSON path (default: stdout listing)")
    p.add_argument("--distance-report", help="measured results CSV keyed by suite member label")
    p.add_argument("--baseline", help="baseline points CSV for the report")
    p.add_argument("--report-out", help="category report CSV path")
    p.set_defaults(fn=cmd_suite)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
