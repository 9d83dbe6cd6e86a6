"""Mapping the winning composition onto ranked layers.

Types are walked from least to most aggressive while layers are walked from
highest to lowest contribution score, so the most important layers always
receive the highest-precision types. The result is emitted as a neutral
JSON manifest a downstream quantizer can consume; embedding and LM-head
tensors stay out of the per-layer allocation and are listed as passthrough
entries with a configurable default type.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from ._util import atomic_write_text
from .compositions import Composition
from .contribution import ContributionScore, rank_layers
from .errors import ValidationError
from .registry import QuantType, Registry, WeightVector
from .trace import ATTENTION, FFN

# (block, sublayer kind) -> tensor name pattern understood by the quantizer.
NamingScheme = Callable[[int, str], str]


def default_tensor_pattern(block: int, kind: str) -> str:
    suffix = "attn" if kind == ATTENTION else "ffn"
    return f"blk.{block}.{suffix}_*"


DEFAULT_PASSTHROUGH_PATTERNS = ("token_embd.*", "output.*")


@dataclass(frozen=True)
class Allocation:
    """Total layer -> type assignment realizing one composition."""

    assignment: dict[int, str]
    source_composition: Composition
    source_weights: WeightVector | None = None

    @property
    def num_layers(self) -> int:
        return len(self.assignment)

    def type_counts(self, types: Sequence[QuantType]) -> tuple[int, ...]:
        by_name = {t.name: 0 for t in types}
        for name in self.assignment.values():
            by_name[name] += 1
        return tuple(by_name[t.name] for t in types)


def sublayer_of(layer_id: int) -> tuple[int, str]:
    """layer id -> (decoder block, sublayer kind) under the 2-per-block convention."""
    return layer_id // 2, ATTENTION if layer_id % 2 == 0 else FFN


def allocate(
    scores: list[ContributionScore],
    z_best: Composition | Sequence[int],
    types: Sequence[QuantType],
    weights: WeightVector | None = None,
) -> Allocation:
    """Assign the next z_i highest-scoring layers to type i, in type order.

    `types` must be ordered least to most aggressive, which for a sane
    registry means effective bits non-increasing; anything else would break
    the guarantee that higher-scoring layers keep at least as much precision.
    """
    comp = z_best if isinstance(z_best, Composition) else Composition(counts=tuple(z_best))
    L = len(scores)
    if comp.num_layers != L:
        raise ValidationError(
            f"composition places {comp.num_layers} layers but {L} scores were given"
        )
    if len(types) != len(comp.counts):
        raise ValidationError(
            f"composition has {len(comp.counts)} parts but {len(types)} types were given"
        )
    bits = [t.effective_bits for t in types]
    if any(b2 > b1 for b1, b2 in zip(bits, bits[1:])):
        raise ValidationError(
            "types must be ordered least to most aggressive (effective bits non-increasing)"
        )

    order = rank_layers(scores)
    assignment: dict[int, str] = {}
    p = 0
    for qt, zi in zip(types, comp.counts):
        for _ in range(zi):
            assignment[order[p]] = qt.name
            p += 1
    return Allocation(assignment=assignment, source_composition=comp, source_weights=weights)


def average_effective_bits(allocation: Allocation, registry: Registry) -> float:
    """Layer-count weighted mean of effective bits: sum_i z_i * bits_i / L."""
    counts = allocation.type_counts(registry.types)
    L = allocation.num_layers
    return math.fsum(z * t.effective_bits for z, t in zip(counts, registry.types)) / L


def type_share_percent(count: int, total: int) -> float:
    """Share of layers as a percentage, rounded to one decimal."""
    return round(100.0 * count / total, 1)


def build_manifest(
    allocation: Allocation,
    registry: Registry,
    model_name: str,
    naming: NamingScheme = default_tensor_pattern,
    passthrough_quant: str | None = None,
) -> dict:
    """Deployment manifest as a plain dict; see emit_manifest for the file."""
    names = {t.name for t in registry.types}
    unknown = sorted(set(allocation.assignment.values()) - names)
    if unknown:
        raise ValidationError(f"allocation references unregistered types: {unknown}")
    if passthrough_quant is None:
        passthrough_quant = registry.types[0].name  # least aggressive
    elif passthrough_quant not in names:
        raise ValidationError(f"passthrough type {passthrough_quant!r} is not registered")

    layers = []
    for layer_id in sorted(allocation.assignment):
        block, kind = sublayer_of(layer_id)
        layers.append(
            {
                "block": block,
                "kind": kind,
                "tensor_pattern": naming(block, kind),
                "quant": allocation.assignment[layer_id],
            }
        )
    return {
        "model": model_name,
        "weights": list(allocation.source_weights.weights) if allocation.source_weights else None,
        "composition": list(allocation.source_composition.counts),
        "avg_effective_bits": average_effective_bits(allocation, registry),
        "layers": layers,
        "passthrough": [
            {"tensor_pattern": pattern, "quant": passthrough_quant}
            for pattern in DEFAULT_PASSTHROUGH_PATTERNS
        ],
    }


def emit_manifest(
    allocation: Allocation,
    registry: Registry,
    model_name: str,
    path: str | Path,
    naming: NamingScheme = default_tensor_pattern,
    passthrough_quant: str | None = None,
) -> dict:
    manifest = build_manifest(allocation, registry, model_name, naming, passthrough_quant)
    atomic_write_text(path, json.dumps(manifest, indent=2) + "\n")
    return manifest


def parse_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"manifest {path}: invalid JSON: {e}") from e
    for key in ("model", "composition", "layers", "passthrough"):
        if key not in manifest:
            raise ValidationError(f"manifest {path}: missing field {key!r}")
    return manifest


def manifest_type_counts(manifest: dict, types: Sequence[QuantType]) -> tuple[int, ...]:
    """Per-type layer counts recovered from a manifest, in `types` order."""
    by_name = {t.name: 0 for t in types}
    for entry in manifest["layers"]:
        q = entry["quant"]
        if q not in by_name:
            raise ValidationError(f"manifest references unregistered type {q!r}")
        by_name[q] += 1
    return tuple(by_name[t.name] for t in types)
