"""Per-layer contribution scores from a similarity trace.

Each observation either rewards or penalizes its layer: similarities below
the threshold gamma indicate the sublayer changed the residual stream enough
to matter (reward), similarities at or above gamma indicate it barely did
(penalty). A layer's score is reward minus penalty; higher means more
important, so it should keep more precision.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

from ._util import atomic_write_text
from .errors import ValidationError
from .trace import ATTENTION, FFN, TraceFile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoreConfig:
    gamma: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class ContributionScore:
    layer_id: int
    kind: str
    reward: int
    penalty: int

    @property
    def score(self) -> int:
        return self.reward - self.penalty


def _default_kind(layer_id: int) -> str:
    # Sublayer convention: even ids are attention, odd ids are FFN.
    return ATTENTION if layer_id % 2 == 0 else FFN


def score_layers(trace: TraceFile, cfg: ScoreConfig | None = None) -> list[ContributionScore]:
    """Count rewards/penalties per layer; returns one score per layer id.

    The comparison is strict: similarity < gamma rewards, equality penalizes.
    Counting is order-independent, so shuffling the trace never changes a
    score. Layers without observations score 0 and are reported in a single
    warning.
    """
    cfg = cfg or ScoreConfig()
    L = trace.num_layers
    rewards = [0] * L
    penalties = [0] * L
    kinds: list[set[str]] = [set() for _ in range(L)]

    for obs in trace.observations:
        if obs.similarity < cfg.gamma:
            rewards[obs.layer_id] += 1
        else:
            penalties[obs.layer_id] += 1
        kinds[obs.layer_id].add(obs.kind)

    empty = [i for i in range(L) if rewards[i] == 0 and penalties[i] == 0]
    if empty:
        logger.warning("no observations for %d layer(s): %s", len(empty), empty[:16])
    conflicting = [i for i in range(L) if len(kinds[i]) > 1]
    if conflicting:
        logger.warning("layers with mixed sublayer kinds in trace: %s", conflicting[:16])

    scores = []
    for i in range(L):
        kind = kinds[i].pop() if len(kinds[i]) == 1 else _default_kind(i)
        scores.append(ContributionScore(layer_id=i, kind=kind, reward=rewards[i], penalty=penalties[i]))
    return scores


def rank_layers(scores: list[ContributionScore]) -> list[int]:
    """Layer ids by score descending, ties broken by layer id ascending."""
    ids = sorted(s.layer_id for s in scores)
    if ids != list(range(len(scores))):
        raise ValidationError("scores must cover layer ids 0..L-1 exactly once")
    return [s.layer_id for s in sorted(scores, key=lambda s: (-s.score, s.layer_id))]


def write_scores_csv(scores: list[ContributionScore], path) -> None:
    lines = ["layer,kind,reward,penalty,score"]
    for s in sorted(scores, key=lambda s: s.layer_id):
        lines.append(f"{s.layer_id},{s.kind},{s.reward},{s.penalty},{s.score}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_scores_csv(path) -> list[ContributionScore]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    scores = []
    for r in rows:
        s = ContributionScore(
            layer_id=int(r["layer"]),
            kind=r["kind"],
            reward=int(r["reward"]),
            penalty=int(r["penalty"]),
        )
        if s.score != int(r["score"]):
            raise ValidationError(f"layer {s.layer_id}: score column disagrees with reward-penalty")
        scores.append(s)
    return scores
