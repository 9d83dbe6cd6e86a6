"""Candidate mixed-precision designs as integer compositions.

A candidate assigns z_i of the L layers to quantization type i, so the
search space is all weak compositions of L into M parts: C(L+M-1, M-1)
vectors. They are enumerated in lexicographic order over (z_1, ..., z_M),
which fixes each candidate's index k across runs and across the two passes
of the streaming ranker. Workers can seek anywhere in the sequence via
unranking.

Each candidate's QoS vector is estimated by linear mixing of the measured
uniform-type values: x_j = sum_i (z_i / L) * c_ij. This assumes every layer
contributes equally to every metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ._util import atomic_write_text
from .errors import ValidationError
from .registry import UniformQoSMatrix

# The debug dump materializes every candidate, so it is capped to small instances.
DUMP_CAP = 100_000


@dataclass(frozen=True)
class Composition:
    """Per-type layer counts plus the candidate's position in the canonical
    lexicographic enumeration (None when constructed ad hoc)."""

    counts: tuple[int, ...]
    index: int | None = None

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValidationError(f"composition counts must be non-negative: {self.counts}")

    @property
    def num_layers(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class EstimatedQoS:
    values: tuple[float, ...]


def count_compositions(L: int, M: int) -> int:
    """Number of weak compositions of L into M parts: C(L+M-1, M-1).

    Exact integer arithmetic; cannot overflow.
    """
    if L < 1 or M < 1:
        raise ValidationError(f"need L >= 1 and M >= 1, got L={L}, M={M}")
    return math.comb(L + M - 1, M - 1)


def _advance(z: list[int]) -> bool:
    """Step z to its lexicographic successor in place.

    Returns False when z is already the last composition (L, 0, ..., 0).
    """
    i = len(z) - 1
    while i >= 0 and z[i] == 0:
        i -= 1
    if i <= 0:
        return False
    moved = z[i]
    z[i] = 0
    z[i - 1] += 1
    z[-1] = moved - 1
    return True


def enumerate_compositions(L: int, M: int) -> Iterator[Composition]:
    """Stream every composition exactly once, lexicographically ascending."""
    count_compositions(L, M)  # validates inputs
    z = [0] * (M - 1) + [L]
    k = 0
    while True:
        yield Composition(counts=tuple(z), index=k)
        if not _advance(z):
            return
        k += 1


def unrank_composition(rank: int, L: int, M: int) -> Composition:
    """The composition at position `rank` of the lexicographic order."""
    total = count_compositions(L, M)
    if not 0 <= rank < total:
        raise ValidationError(f"rank {rank} outside 0..{total - 1}")
    remaining_rank = rank
    remaining_sum = L
    counts = []
    for pos in range(M - 1):
        parts_left = M - pos - 1
        v = 0
        while True:
            block = math.comb(remaining_sum - v + parts_left - 1, parts_left - 1)
            if remaining_rank < block:
                break
            remaining_rank -= block
            v += 1
        counts.append(v)
        remaining_sum -= v
    counts.append(remaining_sum)
    return Composition(counts=tuple(counts), index=rank)


def composition_block(start: int, n: int, L: int, M: int) -> np.ndarray:
    """Rows start..start+n-1 of the enumeration as an (n, M) int64 array."""
    z = list(unrank_composition(start, L, M).counts)
    out = np.empty((n, M), dtype=np.int64)
    for r in range(n):
        out[r] = z
        if r + 1 < n and not _advance(z):
            raise ValidationError(f"block [{start}, {start + n}) runs past the last composition")
    return out


def estimate_block(zblock: np.ndarray, c: np.ndarray, L: int) -> np.ndarray:
    """Linear QoS mixing for a block of compositions.

    Accumulates in type order i = 0..M-1 so each output element is computed
    in exactly the same floating-point order as the scalar path.
    """
    n, m = zblock.shape
    x = np.zeros((n, c.shape[1]), dtype=np.float64)
    for i in range(m):
        frac = zblock[:, i] / L
        x += frac[:, None] * c[i]
    return x


def estimate_qos(z: Composition | Sequence[int], matrix: UniformQoSMatrix) -> EstimatedQoS:
    """Estimated QoS vector of one candidate: x_j = sum_i (z_i / L) * c_ij."""
    counts = z.counts if isinstance(z, Composition) else tuple(z)
    if len(counts) != len(matrix.types):
        raise ValidationError(
            f"composition has {len(counts)} parts but matrix has {len(matrix.types)} types"
        )
    L = sum(counts)
    if L < 1:
        raise ValidationError("composition must place at least one layer")
    J = len(matrix.metrics)
    values = []
    for j in range(J):
        x = 0.0
        for i, zi in enumerate(counts):
            x += (zi / L) * matrix.values[i][j]
        values.append(x)
    return EstimatedQoS(values=tuple(values))


def write_composition_dump(path, L: int, M: int, matrix: UniformQoSMatrix) -> None:
    """Debug CSV of the whole candidate space: k, z_1..z_M, x_1..x_J."""
    total = count_compositions(L, M)
    if total > DUMP_CAP:
        raise ValidationError(
            f"{total} candidates exceed the dump cap of {DUMP_CAP}; dumping is for small instances"
        )
    header = (
        ["k"]
        + [f"z_{i}" for i in range(1, M + 1)]
        + [f"x_{j}" for j in range(1, len(matrix.metrics) + 1)]
    )
    lines = [",".join(header)]
    for comp in enumerate_compositions(L, M):
        est = estimate_qos(comp, matrix)
        fields = [str(comp.index), *map(str, comp.counts), *map(repr, est.values)]
        lines.append(",".join(fields))
    atomic_write_text(path, "\n".join(lines) + "\n")
