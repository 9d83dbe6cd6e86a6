"""The 28-configuration weight suite and the category report.

Metric order is fixed to (memory, latency, accuracy). The Fairness category
spreads weight evenly over two or three metrics; each of the three priority
categories contains, for its metric: three skewed vectors (0.7 / 0.8 / 0.9
with the residual shared equally by the other two), one dominant vector,
and four pairwise vectors (0.75 and 0.9 paired with each other metric).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ._util import atomic_write_text
from .errors import ValidationError
from .pareto import SolutionPoint
from .registry import WeightVector

SUITE_METRICS = ("memory", "latency", "accuracy")

FAIRNESS = "Fairness"
MEMORY = "Memory"
LATENCY = "Latency"
ACCURACY = "Accuracy"

_PRIORITY_CATEGORIES = (MEMORY, LATENCY, ACCURACY)
_SKEWED_LEVELS = (0.7, 0.8, 0.9)
_PAIRWISE_LEVELS = (0.75, 0.9)

BASELINE_CATEGORY = "Uniform"


@dataclass(frozen=True)
class WeightCategory:
    name: str
    members: tuple[WeightVector, ...]


def _vec(values: list[float]) -> WeightVector:
    return WeightVector(tuple(round(v, 6) for v in values))


def member_label(category: str, weights: WeightVector) -> str:
    body = "-".join(format(w, ".3f") for w in weights)
    return f"{category.lower()}_{body}"


def generate_weight_suite(compat_residual: bool = False) -> list[WeightCategory]:
    """All 28 weight vectors, split 4/8/8/8 over the four categories.

    With ``compat_residual`` the skewed vectors pin the two non-prioritized
    weights at 0.1 instead of splitting the residual equally, i.e.
    (0.7, 0.1, 0.1) instead of (0.7, 0.15, 0.15).
    """
    third = 1.0 / 3.0
    fairness = WeightCategory(
        name=FAIRNESS,
        members=(
            WeightVector((third, third, third)),
            _vec([0.5, 0.5, 0.0]),
            _vec([0.5, 0.0, 0.5]),
            _vec([0.0, 0.5, 0.5]),
        ),
    )

    categories = [fairness]
    for p, name in enumerate(_PRIORITY_CATEGORIES):
        members = []
        for level in _SKEWED_LEVELS:
            residual = 0.1 if compat_residual else (1.0 - level) / 2.0
            w = [residual] * 3
            w[p] = level
            members.append(_vec(w))
        dominant = [0.0] * 3
        dominant[p] = 1.0
        members.append(_vec(dominant))
        for level in _PAIRWISE_LEVELS:
            for o in range(3):
                if o == p:
                    continue
                w = [0.0] * 3
                w[p] = level
                w[o] = round(1.0 - level, 6)
                members.append(_vec(w))
        categories.append(WeightCategory(name=name, members=tuple(members)))
    return categories


def suite_members(suite: list[WeightCategory]) -> list[tuple[str, str, WeightVector]]:
    """Flat (label, category, weights) list in suite order."""
    out = []
    for cat in suite:
        for w in cat.members:
            out.append((member_label(cat.name, w), cat.name, w))
    return out


def write_suite_json(suite: list[WeightCategory], path) -> None:
    doc = [
        {"name": label, "category": category, "weights": list(w.weights)}
        for label, category, w in suite_members(suite)
    ]
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


@dataclass(frozen=True)
class DistanceReport:
    metrics: tuple[str, ...]
    # category -> per-metric mean distance to the global best value
    category_distances: dict[str, tuple[float, ...]]
    # metric -> (best value, label of the best model, best came from the
    # category dedicated to that metric)
    best_models: dict[str, tuple[float, str, bool]]


def distance_to_best_report(
    results: dict[str, SolutionPoint],
    baseline: list[SolutionPoint],
    suite: list[WeightCategory] | None = None,
    metrics: tuple[str, ...] = SUITE_METRICS,
    directions: tuple[str, ...] | None = None,
) -> DistanceReport:
    """Per-category mean distance to the best observed value of each metric.

    `results` maps suite member labels to their measured points; every suite
    member must be present. The global best of a metric is taken over the
    union of suite results and baseline points, and the report records
    whether it was produced by the category dedicated to that metric.
    """
    suite = suite if suite is not None else generate_weight_suite()
    directions = directions or tuple("cost" for _ in metrics)
    members = suite_members(suite)
    missing = [label for label, _, _ in members if label not in results]
    if missing:
        raise ValidationError(f"missing measured results for suite members: {missing[:8]}")
    J = len(metrics)
    for label, p in results.items():
        if len(p.values) != J:
            raise ValidationError(f"result {label!r} has {len(p.values)} metrics, expected {J}")
    for p in baseline:
        if len(p.values) != J:
            raise ValidationError(f"baseline point {p.label!r} has {len(p.values)} metrics, expected {J}")

    # (value, owning category, label) per model, suite members then baseline
    evaluated: list[tuple[SolutionPoint, str, str]] = [
        (results[label], category, label) for label, category, _ in members
    ]
    evaluated += [(p, BASELINE_CATEGORY, p.label) for p in baseline]

    dedicated = {"memory": MEMORY, "latency": LATENCY, "accuracy": ACCURACY}
    best_models: dict[str, tuple[float, str, bool]] = {}
    best_values = []
    for j, metric in enumerate(metrics):
        sign = 1.0 if directions[j] == "cost" else -1.0
        point, category, label = min(evaluated, key=lambda e: sign * e[0].values[j])
        best_values.append(point.values[j])
        best_models[metric] = (point.values[j], label, category == dedicated.get(metric))

    category_distances: dict[str, tuple[float, ...]] = {}
    groups = [(cat.name, [results[member_label(cat.name, w)] for w in cat.members]) for cat in suite]
    if baseline:
        groups.append((BASELINE_CATEGORY, baseline))
    for name, pts in groups:
        dists = []
        for j in range(J):
            sign = 1.0 if directions[j] == "cost" else -1.0
            dists.append(math.fsum(sign * (p.values[j] - best_values[j]) for p in pts) / len(pts))
        category_distances[name] = tuple(dists)

    return DistanceReport(
        metrics=tuple(metrics),
        category_distances=category_distances,
        best_models=best_models,
    )


def write_distance_report_csv(report: DistanceReport, path) -> None:
    lines = ["category," + ",".join(report.metrics)]
    for name, dists in report.category_distances.items():
        lines.append(name + "," + ",".join(format(d, ".6g") for d in dists))
    atomic_write_text(path, "\n".join(lines) + "\n")
