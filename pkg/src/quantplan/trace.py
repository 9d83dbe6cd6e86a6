"""Layer-boundary similarity traces: data model, parsing, cosine similarity.

A trace records, per (prompt, token, sublayer boundary), the cosine
similarity between the residual stream entering and leaving that sublayer.
Attention and feed-forward sublayers are indexed separately, so a model with
N decoder blocks has L = 2N layers.

Trace format: JSON Lines. Line 1 is a header ``{"model": str,
"num_layers": int}``; each following line is one observation
``{"prompt": int, "token": int, "layer": int, "kind": "attention"|"ffn",
"sim": float}``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ._util import atomic_write_text
from .errors import TraceParseError, ValidationError

logger = logging.getLogger(__name__)

ATTENTION = "attention"
FFN = "ffn"
SUBLAYER_KINDS = (ATTENTION, FFN)


@dataclass(frozen=True)
class SimilarityObservation:
    prompt_id: int
    token_index: int
    layer_id: int
    kind: str
    similarity: float


@dataclass(frozen=True)
class TraceFile:
    model_name: str
    num_layers: int
    observations: tuple[SimilarityObservation, ...]


@dataclass(frozen=True)
class BoundaryState:
    """Residual-stream vectors immediately before and after one sublayer."""

    prompt_id: int
    token_index: int
    layer_id: int
    kind: str
    before: Sequence[float]
    after: Sequence[float]


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """cos(u, v) = u.v / (|u| |v|), clamped to [-1, 1] against rounding.

    Sums are accumulated with math.fsum, so the result does not depend on
    element order beyond the final rounding.
    """
    if len(u) != len(v):
        raise ValidationError(f"vector length mismatch: {len(u)} vs {len(v)}")
    if len(u) == 0:
        raise ValidationError("cosine similarity of empty vectors is undefined")
    dot = math.fsum(x * y for x, y in zip(u, v))
    norm_u = math.sqrt(math.fsum(x * x for x in u))
    norm_v = math.sqrt(math.fsum(y * y for y in v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValidationError("cosine similarity undefined for a zero vector")
    return max(-1.0, min(1.0, dot / (norm_u * norm_v)))


def boundary_similarities(states: Iterable[BoundaryState]) -> list[SimilarityObservation]:
    """One observation per boundary state, in input order."""
    out = []
    for s in states:
        try:
            sim = cosine_similarity(s.before, s.after)
        except ValidationError as e:
            raise ValidationError(
                f"prompt={s.prompt_id} token={s.token_index} layer={s.layer_id}: {e}"
            ) from e
        out.append(
            SimilarityObservation(
                prompt_id=s.prompt_id,
                token_index=s.token_index,
                layer_id=s.layer_id,
                kind=s.kind,
                similarity=sim,
            )
        )
    return out


def parse_trace(path: str | Path) -> TraceFile:
    """Parse and validate a JSONL trace file.

    Raises TraceParseError with the offending line number on malformed
    lines, out-of-range similarities, or bad layer ids. Layers that never
    appear in any observation are only warned about; downstream scoring
    treats them as zero-observation layers.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"trace file not found: {path}")

    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise TraceParseError("missing header", line=1)
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise TraceParseError(f"invalid JSON: {e}", line=1) from e
        if not isinstance(header, dict) or "model" not in header or "num_layers" not in header:
            raise TraceParseError('header must be {"model": ..., "num_layers": ...}', line=1)
        model = str(header["model"])
        num_layers = header["num_layers"]
        if not isinstance(num_layers, int) or num_layers <= 0:
            raise TraceParseError(f"num_layers must be a positive integer, got {num_layers!r}", line=1)

        observations = []
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise TraceParseError(f"invalid JSON: {e}", line=lineno) from e
            try:
                obs = _validate_observation(rec, num_layers)
            except ValidationError as e:
                raise TraceParseError(str(e), line=lineno) from e
            observations.append(obs)

    covered = {o.layer_id for o in observations}
    missing = sorted(set(range(num_layers)) - covered)
    if missing and observations:
        logger.warning(
            "trace %s covers %d/%d layers; no observations for layers %s",
            path.name,
            num_layers - len(missing),
            num_layers,
            missing[:16] + (["..."] if len(missing) > 16 else []),
        )

    return TraceFile(model_name=model, num_layers=num_layers, observations=tuple(observations))


def _validate_observation(rec: dict, num_layers: int) -> SimilarityObservation:
    if not isinstance(rec, dict):
        raise ValidationError("observation must be a JSON object")
    for key in ("prompt", "token", "layer", "kind", "sim"):
        if key not in rec:
            raise ValidationError(f"missing field {key!r}")
    token = int(rec["token"])
    if token < 0:
        raise ValidationError(f"token index must be >= 0, got {token}")
    layer = int(rec["layer"])
    if not 0 <= layer < num_layers:
        raise ValidationError(f"layer {layer} outside 0..{num_layers - 1}")
    kind = rec["kind"]
    if kind not in SUBLAYER_KINDS:
        raise ValidationError(f"kind must be one of {SUBLAYER_KINDS}, got {kind!r}")
    sim = float(rec["sim"])
    if not math.isfinite(sim) or not -1.0 <= sim <= 1.0:
        raise ValidationError(f"similarity {sim} outside [-1, 1]")
    return SimilarityObservation(
        prompt_id=int(rec["prompt"]),
        token_index=token,
        layer_id=layer,
        kind=kind,
        similarity=sim,
    )


def write_trace(trace: TraceFile, path: str | Path) -> None:
    """Serialize a trace back to the JSONL format accepted by parse_trace."""
    lines = [json.dumps({"model": trace.model_name, "num_layers": trace.num_layers})]
    for o in trace.observations:
        lines.append(
            json.dumps(
                {
                    "prompt": o.prompt_id,
                    "token": o.token_index,
                    "layer": o.layer_id,
                    "kind": o.kind,
                    "sim": o.similarity,
                }
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")
