"""Dominance filtering, exact hypervolume, and baseline-relative gain.

Hypervolume is the Lebesgue measure of the region dominated by a point set
up to a reference point. It is computed exactly here: interval length in
1-D, a sorted sweep with running best in 2-D, and a slab decomposition over
the sorted third coordinate in 3-D. Higher dimensions are out of scope. A
seeded Monte-Carlo estimator is provided as an independent cross-check.

Benefit metrics are handled by negating their coordinates internally, so
all core routines work in minimization space.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._util import atomic_write_text
from .errors import ValidationError
from .registry import BENEFIT, COST

logger = logging.getLogger(__name__)

PROVENANCES = ("measured", "estimated")

MAX_EXACT_DIMENSIONS = 3


@dataclass(frozen=True)
class SolutionPoint:
    label: str
    values: tuple[float, ...]
    provenance: str = "measured"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"provenance must be one of {PROVENANCES}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationError(f"point {self.label!r} has non-finite values")


@dataclass(frozen=True)
class HVResult:
    hypervolume: float
    reference: tuple[float, ...]
    contributing_points: int
    clipped_points: int = 0


def _check_directions(dim: int, directions: Sequence[str]) -> tuple[str, ...]:
    dirs = tuple(directions)
    if len(dirs) != dim:
        raise ValidationError(f"expected {dim} directions, got {len(dirs)}")
    for d in dirs:
        if d not in (COST, BENEFIT):
            raise ValidationError(f"direction must be '{COST}' or '{BENEFIT}', got {d!r}")
    return dirs


def _oriented(values: Sequence[float], directions: Sequence[str]) -> tuple[float, ...]:
    """Flip benefit coordinates so smaller is better everywhere."""
    return tuple(-v if d == BENEFIT else v for v, d in zip(values, directions))


def dominates(p: SolutionPoint, q: SolutionPoint, directions: Sequence[str]) -> bool:
    """True iff p is at least as good everywhere and strictly better somewhere."""
    if len(p.values) != len(q.values):
        raise ValidationError("points have different dimensionality")
    dirs = _check_directions(len(p.values), directions)
    pv = _oriented(p.values, dirs)
    qv = _oriented(q.values, dirs)
    return all(a <= b for a, b in zip(pv, qv)) and any(a < b for a, b in zip(pv, qv))


def pareto_filter(points: list[SolutionPoint], directions: Sequence[str]) -> list[SolutionPoint]:
    """Maximal non-dominated subset; duplicate value vectors kept once,
    input order preserved."""
    if not points:
        return []
    dirs = _check_directions(len(points[0].values), directions)
    seen: set[tuple[float, ...]] = set()
    unique: list[SolutionPoint] = []
    for p in points:
        if len(p.values) != len(dirs):
            raise ValidationError("points have different dimensionality")
        if p.values in seen:
            continue
        seen.add(p.values)
        unique.append(p)

    oriented = [_oriented(p.values, dirs) for p in unique]
    front = []
    for i, p in enumerate(unique):
        dominated = any(
            all(a <= b for a, b in zip(oriented[k], oriented[i]))
            and any(a < b for a, b in zip(oriented[k], oriented[i]))
            for k in range(len(unique))
            if k != i
        )
        if not dominated:
            front.append(p)
    return front


def _hv1(points: list[tuple[float, ...]], ref: tuple[float, ...]) -> float:
    return ref[0] - min(p[0] for p in points)


def _hv2(points: list[tuple[float, ...]], ref: tuple[float, ...]) -> float:
    hv = 0.0
    best_y = ref[1]
    for x, y in sorted(points):
        if y < best_y:
            hv += (ref[0] - x) * (best_y - y)
            best_y = y
    return hv


def _hv3(points: list[tuple[float, ...]], ref: tuple[float, ...]) -> float:
    order = sorted(points, key=lambda p: p[2])
    ref2 = (ref[0], ref[1])
    hv = 0.0
    active: list[tuple[float, ...]] = []
    i = 0
    n = len(order)
    while i < n:
        z = order[i][2]
        while i < n and order[i][2] == z:
            active.append(order[i][:2])
            i += 1
        z_next = order[i][2] if i < n else ref[2]
        hv += _hv2(active, ref2) * (z_next - z)
    return hv


_EXACT = {1: _hv1, 2: _hv2, 3: _hv3}


def _retained(points, reference, directions):
    """Points strictly inside the reference box, in minimization space."""
    dim = len(reference)
    dirs = _check_directions(dim, directions)
    ref = _oriented(reference, dirs)
    kept = []
    clipped = 0
    for p in points:
        if len(p.values) != dim:
            raise ValidationError("point dimensionality does not match the reference")
        v = _oriented(p.values, dirs)
        if all(a < r for a, r in zip(v, ref)):
            kept.append(v)
        elif any(a > r for a, r in zip(v, ref)):
            clipped += 1
        # on-boundary points are dropped silently; their box has zero volume
    return kept, ref, clipped


def hypervolume(
    points: list[SolutionPoint],
    reference: Sequence[float],
    directions: Sequence[str],
    normalize: bool = False,
) -> HVResult:
    """Exact hypervolume of `points` relative to `reference`.

    Points that are worse than the reference in any coordinate are excluded
    and counted in clipped_points (also logged). With ``normalize=True``
    every coordinate, including the reference, is first divided by the
    reference value, making volumes comparable across metric units; this
    requires strictly positive reference coordinates.
    """
    reference = tuple(float(r) for r in reference)
    if len(reference) > MAX_EXACT_DIMENSIONS:
        raise ValidationError(
            f"exact hypervolume supports up to {MAX_EXACT_DIMENSIONS} metrics, got {len(reference)}"
        )
    kept, ref, clipped = _retained(points, reference, directions)
    if clipped:
        logger.warning("hypervolume: %d point(s) worse than the reference were clipped", clipped)
    if normalize:
        if any(r <= 0 for r in reference):
            raise ValidationError("normalized hypervolume requires positive reference coordinates")
        scale = [abs(r) for r in ref]
        kept = [tuple(v / s for v, s in zip(p, scale)) for p in kept]
        ref = tuple(r / s for r, s in zip(ref, scale))
    if not kept:
        return HVResult(0.0, reference, 0, clipped)
    hv = _EXACT[len(reference)](kept, ref)
    return HVResult(hv, reference, len(kept), clipped)


def hypervolume_monte_carlo(
    points: list[SolutionPoint],
    reference: Sequence[float],
    directions: Sequence[str],
    samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Seeded uniform-sampling estimate of the same volume as `hypervolume`.

    Works in any dimension; used as an independent check of the exact
    computation.
    """
    if samples < 1:
        raise ValidationError(f"sample count must be positive, got {samples}")
    reference = tuple(float(r) for r in reference)
    kept, ref, _ = _retained(points, reference, directions)
    if not kept:
        return 0.0
    pts = np.asarray(kept)
    lower = pts.min(axis=0)
    upper = np.asarray(ref)
    box = float(np.prod(upper - lower))
    if box == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    batch = 250_000
    while remaining > 0:
        n = min(batch, remaining)
        draw = rng.uniform(lower, upper, size=(n, pts.shape[1]))
        dominated = (draw[:, None, :] >= pts[None, :, :]).all(axis=2).any(axis=1)
        hits += int(dominated.sum())
        remaining -= n
    return box * hits / samples


def hv_gain(hv_candidate: float, hv_baseline: float) -> float:
    """Relative hypervolume improvement over a baseline set."""
    if hv_baseline <= 0.0:
        raise ValidationError(f"baseline hypervolume must be positive, got {hv_baseline}")
    return (hv_candidate - hv_baseline) / hv_baseline


def reference_from_baseline(
    baseline_points: list[SolutionPoint], directions: Sequence[str]
) -> tuple[float, ...]:
    """Componentwise worst baseline values: the anchor for all hypervolumes."""
    if not baseline_points:
        raise ValidationError("cannot derive a reference point from an empty baseline")
    dim = len(baseline_points[0].values)
    dirs = _check_directions(dim, directions)
    ref = []
    for j, d in enumerate(dirs):
        col = [p.values[j] for p in baseline_points]
        ref.append(max(col) if d == COST else min(col))
    return tuple(ref)


def read_points_csv(path: str | Path) -> tuple[list[SolutionPoint], list[str]]:
    """Solution points from CSV ``label,provenance,<metric1>,...``.

    Returns the points and the metric names from the header.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"points file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"points file {path}: empty") from None
        rows = [r for r in reader if r]
    if len(header) < 3 or header[0] != "label" or header[1] != "provenance":
        raise ValidationError(f"points file {path}: header must be label,provenance,<metrics...>")
    metrics = header[2:]
    points = []
    for r in rows:
        if len(r) != len(header):
            raise ValidationError(f"points file {path}: row {r!r} has wrong field count")
        try:
            values = tuple(float(v) for v in r[2:])
        except ValueError:
            raise ValidationError(f"points file {path}: non-numeric value in row {r!r}") from None
        points.append(SolutionPoint(label=r[0], values=values, provenance=r[1]))
    return points, metrics


def write_points_csv(points: list[SolutionPoint], metrics: Sequence[str], path: str | Path) -> None:
    lines = ["label,provenance," + ",".join(metrics)]
    for p in points:
        lines.append(f"{p.label},{p.provenance}," + ",".join(repr(v) for v in p.values))
    atomic_write_text(path, "\n".join(lines) + "\n")
