"""TOPSIS ranking of candidate compositions under a metric weight vector.

The candidate space (C(L+M-1, M-1) compositions) is never materialized.
Selection runs two streaming passes over the canonical enumeration:

  pass 1: per-metric column statistics (sum of squares for the Euclidean
          norm, min, max) over every candidate's estimated QoS vector;
  pass 2: each candidate's weighted normalized vector is scored by its
          relative closeness to the ideal point, keeping the running best.

Ties are broken by the smallest composition index, so output is fully
deterministic. Both passes operate on fixed-size chunks of the enumeration
and merge results in chunk order, which makes multi-worker runs bitwise
identical to single-worker runs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compositions import (
    Composition,
    EstimatedQoS,
    composition_block,
    count_compositions,
    estimate_block,
    estimate_qos,
    unrank_composition,
)
from .errors import ValidationError
from .registry import BENEFIT, COST, Registry, UniformQoSMatrix, WeightVector

# Fixed chunk size: worker-count independence relies on stable chunk boundaries.
CHUNK_SIZE = 65536

# rank_all materializes every candidate; past this, callers must stream.
RANK_ALL_CAP = 200_000


@dataclass(frozen=True)
class ColumnStats:
    """Per-metric statistics over the full candidate stream."""

    sum_of_squares: tuple[float, ...]
    minimum: tuple[float, ...]
    maximum: tuple[float, ...]
    count: int

    def norms(self) -> tuple[float, ...]:
        return tuple(math.sqrt(s) for s in self.sum_of_squares)


@dataclass(frozen=True)
class IdealPair:
    ideal: tuple[float, ...]
    negative_ideal: tuple[float, ...]


@dataclass(frozen=True)
class RankedCandidate:
    composition: Composition
    estimated: EstimatedQoS
    weighted: tuple[float, ...]
    ranking_score: float


@dataclass(frozen=True)
class SelectionResult:
    best: RankedCandidate
    stats: ColumnStats


def normalize(x: float, column_norm: float) -> float:
    """Euclidean column normalization; an all-zero column maps to 0."""
    if column_norm == 0.0:
        return 0.0
    return x / column_norm


def ranking_score(weighted: Sequence[float], ideal: IdealPair) -> float:
    """Relative closeness d- / (d- + d+); 0.5 when the space is degenerate."""
    dn_sq = 0.0
    dp_sq = 0.0
    for j, a in enumerate(weighted):
        dn_sq += (a - ideal.negative_ideal[j]) ** 2
        dp_sq += (a - ideal.ideal[j]) ** 2
    dn = math.sqrt(dn_sq)
    dp = math.sqrt(dp_sq)
    if dn + dp == 0.0:
        return 0.5
    return dn / (dn + dp)


def _chunk_ranges(total: int) -> list[tuple[int, int]]:
    return [(s, min(CHUNK_SIZE, total - s)) for s in range(0, total, CHUNK_SIZE)]


def _stats_chunk(args) -> tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]]:
    start, n, L, M, c = args
    x = estimate_block(composition_block(start, n, L, M), c, L)
    sums = tuple(math.fsum((x[:, j] ** 2).tolist()) for j in range(x.shape[1]))
    mins = tuple(float(x[:, j].min()) for j in range(x.shape[1]))
    maxs = tuple(float(x[:, j].max()) for j in range(x.shape[1]))
    return sums, mins, maxs


def _best_chunk(args) -> tuple[float, int]:
    start, n, L, M, c, norms, weights, ideal, negative = args
    x = estimate_block(composition_block(start, n, L, M), c, L)
    a = _weight_block(x, norms, weights)
    dn_sq = np.zeros(n)
    dp_sq = np.zeros(n)
    for j in range(a.shape[1]):
        dn_sq += (a[:, j] - negative[j]) ** 2
        dp_sq += (a[:, j] - ideal[j]) ** 2
    dn = np.sqrt(dn_sq)
    dp = np.sqrt(dp_sq)
    denom = dn + dp
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(denom == 0.0, 0.5, dn / np.where(denom == 0.0, 1.0, denom))
    i = int(np.argmax(scores))  # first occurrence, i.e. smallest index on ties
    return float(scores[i]), start + i


def _weight_block(x: np.ndarray, norms, weights) -> np.ndarray:
    a = np.empty_like(x)
    for j in range(x.shape[1]):
        if norms[j] == 0.0:
            a[:, j] = 0.0
        else:
            a[:, j] = (x[:, j] / norms[j]) * weights[j]
    return a


def _weight_vector(values: Sequence[float], norms, weights) -> tuple[float, ...]:
    return tuple(normalize(v, norms[j]) * weights[j] for j, v in enumerate(values))


def _run_chunks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _validate_inputs(L, registry: Registry, matrix: UniformQoSMatrix, weights) -> WeightVector:
    if not isinstance(L, int) or L < 1:
        raise ValidationError(f"L must be a positive integer, got {L!r}")
    if len(matrix.types) < 1:
        raise ValidationError("matrix must cover at least one quantization type")
    if registry.types != matrix.types or registry.metrics != matrix.metrics:
        raise ValidationError("registry and QoS matrix disagree on types or metrics")
    w = weights if isinstance(weights, WeightVector) else WeightVector(tuple(weights))
    if len(w) != len(matrix.metrics):
        raise ValidationError(f"expected {len(matrix.metrics)} weights, got {len(w)}")
    return w


def collect_column_stats(
    L: int, registry: Registry, matrix: UniformQoSMatrix, workers: int = 1
) -> ColumnStats:
    """Pass 1: min/max and compensated sums of squares per metric over all
    candidates. Chunked so results never depend on the worker count."""
    M = len(matrix.types)
    total = count_compositions(L, M)
    c = matrix.as_array()
    tasks = [(start, n, L, M, c) for start, n in _chunk_ranges(total)]
    parts = _run_chunks(_stats_chunk, tasks, workers)
    J = len(matrix.metrics)
    sums = tuple(math.fsum(p[0][j] for p in parts) for j in range(J))
    mins = tuple(min(p[1][j] for p in parts) for j in range(J))
    maxs = tuple(max(p[2][j] for p in parts) for j in range(J))
    return ColumnStats(sum_of_squares=sums, minimum=mins, maximum=maxs, count=total)


def ideal_pair(stats: ColumnStats, weights: WeightVector, metrics) -> IdealPair:
    """Ideal / negative-ideal of the weighted normalized matrix.

    Weighted normalization is monotone per column (weights and norms are
    non-negative), so column extremes of the raw estimates map directly to
    the extremes of the weighted values.
    """
    norms = stats.norms()
    lo = _weight_vector(stats.minimum, norms, weights.weights)
    hi = _weight_vector(stats.maximum, norms, weights.weights)
    ideal_v = []
    negative = []
    for j, m in enumerate(metrics):
        if m.direction == COST:
            ideal_v.append(lo[j])
            negative.append(hi[j])
        else:
            ideal_v.append(hi[j])
            negative.append(lo[j])
    return IdealPair(ideal=tuple(ideal_v), negative_ideal=tuple(negative))


def select_best_given_stats(
    L: int,
    registry: Registry,
    matrix: UniformQoSMatrix,
    weights: WeightVector | Sequence[float],
    stats: ColumnStats,
    workers: int = 1,
) -> RankedCandidate:
    """Pass 2: score every candidate against precomputed column statistics."""
    w = _validate_inputs(L, registry, matrix, weights)
    M = len(matrix.types)
    total = count_compositions(L, M)
    if stats.count != total:
        raise ValidationError("column statistics were gathered over a different candidate space")
    c = matrix.as_array()
    norms = stats.norms()
    pair = ideal_pair(stats, w, matrix.metrics)
    tasks = [
        (start, n, L, M, c, norms, w.weights, pair.ideal, pair.negative_ideal)
        for start, n in _chunk_ranges(total)
    ]
    best_score = -1.0
    best_rank = -1
    for score, rank in _run_chunks(_best_chunk, tasks, workers):
        if score > best_score:  # equal keeps the earlier chunk, i.e. smaller index
            best_score = score
            best_rank = rank
    comp = unrank_composition(best_rank, L, M)
    est = estimate_qos(comp, matrix)
    weighted = _weight_vector(est.values, norms, w.weights)
    return RankedCandidate(
        composition=comp,
        estimated=est,
        weighted=weighted,
        ranking_score=ranking_score(weighted, pair),
    )


def run_selection(
    L: int,
    registry: Registry,
    matrix: UniformQoSMatrix,
    weights: WeightVector | Sequence[float],
    workers: int = 1,
) -> SelectionResult:
    """Both passes; returns the winner together with the column statistics."""
    w = _validate_inputs(L, registry, matrix, weights)
    stats = collect_column_stats(L, registry, matrix, workers=workers)
    best = select_best_given_stats(L, registry, matrix, w, stats, workers=workers)
    return SelectionResult(best=best, stats=stats)


def select_best(
    L: int,
    registry: Registry,
    matrix: UniformQoSMatrix,
    weights: WeightVector | Sequence[float],
    workers: int = 1,
) -> RankedCandidate:
    """The best composition under TOPSIS for the given weights."""
    return run_selection(L, registry, matrix, weights, workers=workers).best


def rank_all(
    L: int,
    registry: Registry,
    matrix: UniformQoSMatrix,
    weights: WeightVector | Sequence[float],
    cap: int = RANK_ALL_CAP,
) -> list[RankedCandidate]:
    """Full ranking, score descending with index ascending on ties.

    Only valid for candidate spaces up to `cap`; larger instances must use
    select_best, which never materializes the space.
    """
    w = _validate_inputs(L, registry, matrix, weights)
    M = len(matrix.types)
    total = count_compositions(L, M)
    if total > cap:
        raise ValidationError(
            f"{total} candidates exceed the materialization cap of {cap}; use select_best instead"
        )
    stats = collect_column_stats(L, registry, matrix)
    norms = stats.norms()
    pair = ideal_pair(stats, w, matrix.metrics)

    ranked: list[RankedCandidate] = []
    c = matrix.as_array()
    for start, n in _chunk_ranges(total):
        zblock = composition_block(start, n, L, M)
        x = estimate_block(zblock, c, L)
        a = _weight_block(x, norms, w.weights)
        for r in range(n):
            weighted = tuple(a[r])
            ranked.append(
                RankedCandidate(
                    composition=Composition(counts=tuple(int(v) for v in zblock[r]), index=start + r),
                    estimated=EstimatedQoS(values=tuple(x[r])),
                    weighted=weighted,
                    ranking_score=ranking_score(weighted, pair),
                )
            )
    ranked.sort(key=lambda rc: (-rc.ranking_score, rc.composition.index))
    return ranked
