"""Quantization-type registry and measured uniform-QoS matrix.

The registry declares the M available uniform quantization types and the J
QoS metrics they are judged on. The QoS matrix holds one measured value per
(type, metric) pair and is the building block every mixed-precision estimate
is derived from.

File formats
    registry: JSON  {"types": [{"name", "nominal_bits", "effective_bits",
              "rank"?}], "metrics": [{"name", "unit", "direction"}]}
    matrix:   CSV, header ``type,<metric1>,<metric2>,...``, one row per type,
              ``.`` decimal separator, UTF-8.

Everything returned by the loaders is immutable and safe to share across
parallel workers.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from ._util import atomic_write_text
from .errors import ValidationError

logger = logging.getLogger(__name__)

COST = "cost"
BENEFIT = "benefit"
_DIRECTIONS = (COST, BENEFIT)


@dataclass(frozen=True)
class QuantType:
    """One uniform quantization level.

    `effective_bits` is the real storage cost per parameter including group
    scaling overhead, so it is always at least `nominal_bits`. Rank 1 is the
    least aggressive type (highest precision).
    """

    name: str
    nominal_bits: int
    effective_bits: float
    rank: int

    def __post_init__(self):
        if not self.name:
            raise ValidationError("quant type name must be non-empty")
        if self.nominal_bits <= 0:
            raise ValidationError(f"{self.name}: nominal_bits must be positive")
        if not math.isfinite(self.effective_bits) or self.effective_bits < self.nominal_bits:
            raise ValidationError(
                f"{self.name}: effective_bits ({self.effective_bits}) must be finite "
                f"and >= nominal_bits ({self.nominal_bits})"
            )


@dataclass(frozen=True)
class MetricSpec:
    name: str
    unit: str
    direction: str

    def __post_init__(self):
        if not self.name:
            raise ValidationError("metric name must be non-empty")
        if self.direction not in _DIRECTIONS:
            raise ValidationError(
                f"metric {self.name}: direction must be one of {_DIRECTIONS}, got {self.direction!r}"
            )


class Registry(NamedTuple):
    """Validated (types, metrics) pair; types ordered least aggressive first."""

    types: tuple[QuantType, ...]
    metrics: tuple[MetricSpec, ...]


@dataclass(frozen=True)
class UniformQoSMatrix:
    """Measured per-type metric values c[i][j], row i = types[i], col j = metrics[j]."""

    types: tuple[QuantType, ...]
    metrics: tuple[MetricSpec, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.values) != len(self.types):
            raise ValidationError("matrix row count must match number of types")
        for tname, row in zip((t.name for t in self.types), self.values):
            if len(row) != len(self.metrics):
                raise ValidationError(f"row {tname}: expected {len(self.metrics)} values")
            for spec, v in zip(self.metrics, row):
                if not math.isfinite(v):
                    raise ValidationError(f"row {tname}, metric {spec.name}: non-finite value {v!r}")
                if spec.direction == COST and v <= 0:
                    raise ValidationError(
                        f"row {tname}, metric {spec.name}: cost metrics must be strictly "
                        f"positive, got {v}"
                    )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def column(self, metric_name: str) -> tuple[float, ...]:
        j = [m.name for m in self.metrics].index(metric_name)
        return tuple(row[j] for row in self.values)


@dataclass(frozen=True)
class WeightVector:
    """Per-metric priority weights, each in [0, 1], at least one positive.

    Weights are used as given; they are not renormalized to sum to 1.
    """

    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.weights:
            raise ValidationError("weight vector must be non-empty")
        for w in self.weights:
            if not math.isfinite(w) or w < 0.0 or w > 1.0:
                raise ValidationError(f"weights must lie in [0, 1], got {w}")
        if not any(w > 0.0 for w in self.weights):
            raise ValidationError("at least one weight must be positive")

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


def _check_unique(names: Iterable[str], what: str) -> None:
    seen = set()
    for n in names:
        if n in seen:
            raise ValidationError(f"duplicate {what} name: {n!r}")
        seen.add(n)


def load_registry(path: str | Path) -> Registry:
    """Load and validate a registry file.

    Types are returned sorted by aggressiveness rank ascending, i.e. least
    aggressive (highest precision) first. If the file carries no explicit
    ranks they are derived from effective_bits descending (name ascending on
    ties); explicit ranks, when present, must cover every type and form the
    contiguous set 1..M.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"registry file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"registry {path}: invalid JSON: {e}") from e
    return parse_registry(doc)


def parse_registry(doc: dict) -> Registry:
    if not isinstance(doc, dict):
        raise ValidationError("registry document must be a JSON object")
    raw_types = doc.get("types")
    raw_metrics = doc.get("metrics")
    if not raw_types or not isinstance(raw_types, list):
        raise ValidationError("registry must declare a non-empty 'types' list")
    if not raw_metrics or not isinstance(raw_metrics, list):
        raise ValidationError("registry must declare a non-empty 'metrics' list")

    _check_unique((str(t.get("name")) for t in raw_types), "quant type")
    _check_unique((str(m.get("name")) for m in raw_metrics), "metric")

    with_rank = [t for t in raw_types if t.get("rank") is not None]
    if with_rank and len(with_rank) != len(raw_types):
        raise ValidationError("either every type carries an explicit rank or none does")

    if with_rank:
        ranks = [int(t["rank"]) for t in raw_types]
        if sorted(ranks) != list(range(1, len(raw_types) + 1)):
            raise ValidationError(
                f"explicit ranks must form the contiguous set 1..{len(raw_types)}, got {sorted(ranks)}"
            )
        typed = [
            QuantType(
                name=str(t["name"]),
                nominal_bits=int(t["nominal_bits"]),
                effective_bits=float(t["effective_bits"]),
                rank=int(t["rank"]),
            )
            for t in raw_types
        ]
    else:
        ordered = sorted(raw_types, key=lambda t: (-float(t["effective_bits"]), str(t["name"])))
        typed = [
            QuantType(
                name=str(t["name"]),
                nominal_bits=int(t["nominal_bits"]),
                effective_bits=float(t["effective_bits"]),
                rank=i,
            )
            for i, t in enumerate(ordered, start=1)
        ]

    typed.sort(key=lambda t: t.rank)
    bits = [t.effective_bits for t in typed]
    if any(b2 > b1 for b1, b2 in zip(bits, bits[1:])):
        # Legal but unusual: explicit ranks that do not follow precision order
        # break the precision-monotonicity guarantee of allocations.
        logger.warning(
            "registry ranks do not follow effective_bits descending; "
            "layer allocation will reject this ordering"
        )

    metrics = tuple(
        MetricSpec(name=str(m["name"]), unit=str(m.get("unit", "")), direction=str(m["direction"]))
        for m in raw_metrics
    )
    return Registry(types=tuple(typed), metrics=metrics)


def save_registry(registry: Registry, path: str | Path) -> None:
    doc = {
        "types": [
            {
                "name": t.name,
                "nominal_bits": t.nominal_bits,
                "effective_bits": t.effective_bits,
                "rank": t.rank,
            }
            for t in registry.types
        ],
        "metrics": [
            {"name": m.name, "unit": m.unit, "direction": m.direction} for m in registry.metrics
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_qos_matrix(path: str | Path, registry: Registry) -> UniformQoSMatrix:
    """Load the measured uniform-QoS CSV and align it with the registry.

    The file may list rows and metric columns in any order; the returned
    matrix always follows registry order (types by rank ascending, metrics
    as declared). Every registered type must appear exactly once and the
    header must name exactly the registered metrics.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"QoS matrix file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"QoS matrix {path}: empty file") from None
        rows = [r for r in reader if r]

    if not header or header[0] != "type":
        raise ValidationError(f"QoS matrix {path}: header must start with 'type'")
    file_metrics = header[1:]
    registered = [m.name for m in registry.metrics]
    if sorted(file_metrics) != sorted(registered):
        raise ValidationError(
            f"QoS matrix {path}: metric columns {file_metrics} do not match "
            f"registered metrics {registered}"
        )
    col_of = {name: i + 1 for i, name in enumerate(file_metrics)}

    by_name: dict[str, list[str]] = {}
    for r in rows:
        if len(r) != len(header):
            raise ValidationError(f"QoS matrix {path}: row {r!r} has {len(r)} fields, expected {len(header)}")
        if r[0] in by_name:
            raise ValidationError(f"QoS matrix {path}: duplicate row for type {r[0]!r}")
        by_name[r[0]] = r

    known = {t.name for t in registry.types}
    unknown = sorted(set(by_name) - known)
    if unknown:
        raise ValidationError(f"QoS matrix {path}: unknown types {unknown}")
    missing = sorted(known - set(by_name))
    if missing:
        raise ValidationError(f"QoS matrix {path}: missing rows for types {missing}")

    values = []
    for t in registry.types:
        row = by_name[t.name]
        parsed = []
        for m in registry.metrics:
            cell = row[col_of[m.name]]
            try:
                v = float(cell)
            except ValueError:
                raise ValidationError(
                    f"QoS matrix {path}: type {t.name}, metric {m.name}: not a number: {cell!r}"
                ) from None
            parsed.append(v)
        values.append(tuple(parsed))

    return UniformQoSMatrix(types=registry.types, metrics=registry.metrics, values=tuple(values))


def save_qos_matrix(matrix: UniformQoSMatrix, path: str | Path) -> None:
    lines = ["type," + ",".join(m.name for m in matrix.metrics)]
    for t, row in zip(matrix.types, matrix.values):
        lines.append(t.name + "," + ",".join(repr(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
