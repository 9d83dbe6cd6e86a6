"""Capture residual-stream similarity traces from a causal LM.

For every decoder block three residual-stream states are hooked: the block
input (before the attention sublayer), the input of the post-attention
normalization (after the attention residual add), and the block output
(after the FFN residual add). Per token position this yields one cosine
similarity for the attention sublayer and one for the FFN sublayer, so a
model with N blocks produces 2N trace layers: attention of block b is layer
2b, FFN is layer 2b+1.

If a block exposes no recognizable post-attention normalization, extraction
falls back to block-level states: one similarity per block between its
input and output, layer id = block index, kind alternating by the usual
even=attention / odd=ffn convention.

Output is JSON Lines: a header ``{"model", "num_layers"}`` followed by one
``{"prompt", "token", "layer", "kind", "sim"}`` object per observation.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn

logger = logging.getLogger(__name__)

# attribute names used by common architectures for the norm that sits
# between the attention residual add and the FFN
_POST_ATTENTION_NORM_NAMES = (
    "post_attention_layernorm",
    "post_attention_norm",
    "ln_2",
    "ln2",
)


@dataclass(frozen=True)
class ExtractionConfig:
    model: str
    prompts_path: str
    output_path: str
    max_tokens: int = 64
    generate: int = 0
    block_level: bool = False
    dump_vectors: str | None = None
    device: str = "cpu"


def read_prompts(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"prompt file not found: {path}")
    prompts = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    prompts = [p for p in prompts if p]
    if not prompts:
        raise ValueError(f"prompt file {path} contains no prompts")
    return prompts


def find_decoder_blocks(model: nn.Module) -> list[nn.Module]:
    """The model's stack of decoder blocks.

    Heuristic: the longest ModuleList whose entries all share one class.
    """
    best: list[nn.Module] = []
    for module in model.modules():
        if isinstance(module, nn.ModuleList) and len(module) > len(best):
            classes = {type(m).__name__ for m in module}
            if len(classes) == 1:
                best = list(module)
    if not best:
        raise ValueError("could not locate a decoder block stack in the model")
    return best


def find_post_attention_norm(block: nn.Module) -> nn.Module | None:
    for name in _POST_ATTENTION_NORM_NAMES:
        sub = getattr(block, name, None)
        if isinstance(sub, nn.Module):
            return sub
    return None


class _Recorder:
    """Forward hooks collecting per-block residual-stream states."""

    def __init__(self, blocks: Sequence[nn.Module], block_level: bool):
        self.num_blocks = len(blocks)
        self.block_level = block_level
        self.states: dict[tuple[int, str], torch.Tensor] = {}
        self.handles = []
        self.sublayer_mode = not block_level
        for b, block in enumerate(blocks):
            self.handles.append(block.register_forward_pre_hook(self._pre(b)))
            self.handles.append(block.register_forward_hook(self._post(b)))
            if not block_level:
                norm = find_post_attention_norm(block)
                if norm is None:
                    self.sublayer_mode = False
                else:
                    self.handles.append(norm.register_forward_pre_hook(self._mid(b)))
        if not block_level and not self.sublayer_mode:
            logger.warning(
                "no post-attention normalization found on every block; "
                "falling back to block-level states"
            )

    def _keep(self, key, tensor):
        self.states[key] = tensor.detach().to(torch.float32).cpu()

    def _pre(self, b):
        def hook(module, args):
            self._keep((b, "before"), args[0])

        return hook

    def _mid(self, b):
        def hook(module, args):
            self._keep((b, "mid"), args[0])

        return hook

    def _post(self, b):
        def hook(module, args, out):
            self._keep((b, "after"), out[0] if isinstance(out, tuple) else out)

        return hook

    def remove(self):
        for h in self.handles:
            h.remove()

    def stacked(self) -> dict[str, np.ndarray]:
        """(num_blocks, seq, hidden) float32 arrays for each capture point."""
        out = {}
        keys = ("before", "mid", "after") if self.sublayer_mode else ("before", "after")
        for part in keys:
            out[part] = np.stack(
                [self.states[(b, part)][0].numpy() for b in range(self.num_blocks)]
            )
        return out


def _cosine(u: np.ndarray, v: np.ndarray) -> float | None:
    norm_u = math.sqrt(float(np.dot(u, u)))
    norm_v = math.sqrt(float(np.dot(v, v)))
    if norm_u == 0.0 or norm_v == 0.0:
        return None
    sim = float(np.dot(u, v)) / (norm_u * norm_v)
    return max(-1.0, min(1.0, sim))


def similarities_from_states(states: dict[str, np.ndarray], sublayer_mode: bool):
    """(layer_id, kind, token_index, similarity) tuples; zero-norm states skipped."""
    observations = []
    skipped = 0
    num_blocks, seq_len = states["before"].shape[0], states["before"].shape[1]
    for b in range(num_blocks):
        if sublayer_mode:
            boundaries = [
                (2 * b, "attention", states["before"][b], states["mid"][b]),
                (2 * b + 1, "ffn", states["mid"][b], states["after"][b]),
            ]
        else:
            kind = "attention" if b % 2 == 0 else "ffn"
            boundaries = [(b, kind, states["before"][b], states["after"][b])]
        for layer_id, kind, u_rows, v_rows in boundaries:
            for t in range(seq_len):
                sim = _cosine(u_rows[t].astype(np.float64), v_rows[t].astype(np.float64))
                if sim is None:
                    skipped += 1
                    continue
                observations.append((layer_id, kind, t, sim))
    return observations, skipped


def _greedy_extend(model, ids: torch.Tensor, steps: int) -> torch.Tensor:
    for _ in range(steps):
        with torch.no_grad():
            logits = model(ids).logits
        next_id = int(torch.argmax(logits[0, -1]))
        ids = torch.cat([ids, torch.tensor([[next_id]], device=ids.device)], dim=1)
    return ids


def extract_trace_from_model(
    model: nn.Module,
    encode: Callable[[str], list[int]],
    prompts: Sequence[str],
    *,
    model_name: str = "model",
    max_tokens: int = 64,
    generate: int = 0,
    block_level: bool = False,
    device: str = "cpu",
) -> tuple[list[str], dict[str, np.ndarray], int]:
    """Run the model over the prompts and build trace lines.

    Returns (jsonl lines, raw state dumps keyed by prompt, skipped count).
    """
    model = model.to(device).eval()
    blocks = find_decoder_blocks(model)
    recorder = _Recorder(blocks, block_level=block_level)
    sublayer_mode = recorder.sublayer_mode
    num_layers = 2 * len(blocks) if sublayer_mode else len(blocks)

    lines = [json.dumps({"model": model_name, "num_layers": num_layers})]
    dumps: dict[str, np.ndarray] = {}
    total_skipped = 0
    try:
        for pid, prompt in enumerate(prompts):
            token_ids = encode(prompt)[:max_tokens]
            if not token_ids:
                logger.warning("prompt %d produced no tokens; skipping", pid)
                continue
            ids = torch.tensor([token_ids], dtype=torch.long, device=device)
            if generate > 0:
                ids = _greedy_extend(model, ids, generate)
            # hooks fired during generation too; only the final pass counts
            recorder.states.clear()
            with torch.no_grad():
                model(ids)
            states = recorder.stacked()
            for part, arr in states.items():
                dumps[f"p{pid}_{part}"] = arr
            observations, skipped = similarities_from_states(states, sublayer_mode)
            total_skipped += skipped
            for layer_id, kind, t, sim in observations:
                lines.append(
                    json.dumps(
                        {"prompt": pid, "token": t, "layer": layer_id, "kind": kind, "sim": sim}
                    )
                )
    finally:
        recorder.remove()
    if total_skipped:
        logger.warning("skipped %d zero-vector boundaries", total_skipped)
    return lines, dumps, total_skipped


def _atomic_write(path: str | Path, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, target)


def extract_trace(cfg: ExtractionConfig) -> Path:
    """Load the model and tokenizer, run extraction, write the JSONL trace."""
    from transformers import AutoModelForCausalLM, AutoTokenizer

    prompts = read_prompts(cfg.prompts_path)
    try:
        tokenizer = AutoTokenizer.from_pretrained(cfg.model)
        model = AutoModelForCausalLM.from_pretrained(cfg.model, dtype=torch.float32)
    except Exception as e:
        raise ValueError(f"could not load model {cfg.model!r}: {e}") from e

    def encode(text: str) -> list[int]:
        return tokenizer(text, add_special_tokens=True)["input_ids"]

    lines, dumps, _ = extract_trace_from_model(
        model,
        encode,
        prompts,
        model_name=cfg.model,
        max_tokens=cfg.max_tokens,
        generate=cfg.generate,
        block_level=cfg.block_level,
        device=cfg.device,
    )
    _atomic_write(cfg.output_path, "\n".join(lines) + "\n")
    if cfg.dump_vectors:
        Path(cfg.dump_vectors).parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(cfg.dump_vectors, **dumps)
    return Path(cfg.output_path)
