"""Residual-stream similarity trace extraction for causal LMs."""

from .extract import (
    ExtractionConfig,
    extract_trace,
    extract_trace_from_model,
    find_decoder_blocks,
    find_post_attention_norm,
    read_prompts,
    similarities_from_states,
)

__version__ = "0.1.0"
