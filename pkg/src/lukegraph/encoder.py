"""Transformer encoder over a joint word + entity sequence.

Attention logits use one of four query projections depending on whether the
attending and the attended token are words or entities; keys and values are
shared across types.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.encoding import ENTITY, WORD, ModelInput
from .errors import BoundsError, ConfigError, DomainError
from .numerics import (
    Embedding,
    LayerNorm,
    Linear,
    Module,
    Tensor,
    concat,
    softmax,
    swapaxes,
    uniform_param,
)
from .numerics.tensor import ACTIVATIONS, dropout

MASK_VALUE = -1e30
QUERY_KINDS = ("w2w", "w2e", "e2w", "e2e")


@dataclass
class EncoderConfig:
    vocab_size: int
    hidden: int = 64
    entity_dim: int = 16
    layers: int = 2
    heads: int = 4
    head_dim: int = 16
    max_positions: int = 512
    ffn_mult: int = 4
    activation: str = "gelu"
    dropout: float = 0.0

    def validate(self) -> None:
        if self.hidden != self.heads * self.head_dim:
            raise ConfigError(
                f"hidden ({self.hidden}) must equal heads x head_dim ({self.heads} x {self.head_dim})"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")


@dataclass
class EncoderOutput:
    word_states: Tensor
    entity_states: Tensor
    question_states: Tensor


def type_pair_masks(token_types: np.ndarray) -> dict[str, np.ndarray]:
    is_word = np.asarray(token_types) == WORD
    is_ent = np.asarray(token_types) == ENTITY
    return {
        "w2w": np.outer(is_word, is_word).astype(np.float64),
        "w2e": np.outer(is_word, is_ent).astype(np.float64),
        "e2w": np.outer(is_ent, is_word).astype(np.float64),
        "e2e": np.outer(is_ent, is_ent).astype(np.float64),
    }


class EntityAwareAttention(Module):
    def __init__(self, rng: np.random.Generator, hidden: int, heads: int, head_dim: int):
        inner = heads * head_dim
        self.query_w2w = uniform_param(rng, (hidden, inner), hidden)
        self.query_w2e = uniform_param(rng, (hidden, inner), hidden)
        self.query_e2w = uniform_param(rng, (hidden, inner), hidden)
        self.query_e2e = uniform_param(rng, (hidden, inner), hidden)
        self.key = uniform_param(rng, (hidden, inner), hidden)
        self.value = uniform_param(rng, (hidden, inner), hidden)
        self.output = Linear(rng, inner, hidden)
        self.heads = heads
        self.head_dim = head_dim

    def query(self, kind: str) -> Tensor:
        return getattr(self, f"query_{kind}")

    def __call__(self, x: Tensor, token_types, mask=None, return_weights: bool = False):
        return entity_aware_attention(x, token_types, self, mask, return_weights)


def entity_aware_attention(
    x: Tensor,
    token_types,
    params: EntityAwareAttention,
    mask=None,
    return_weights: bool = False,
):
    """Multi-head attention whose query projection is chosen by the (row, column) token types.

    ``mask`` marks valid (non-padding) key positions; masked keys get a large
    negative additive logit.
    """
    p = x.shape[0]
    h, d = params.heads, params.head_dim
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise DomainError("attention row has every position masked")

    def split(t: Tensor) -> Tensor:
        return t.reshape(p, h, d).transpose((1, 0, 2))

    keys_t = swapaxes(split(x @ params.key), -1, -2)
    values = split(x @ params.value)
    pair_masks = type_pair_masks(token_types)
    scores = None
    for kind in QUERY_KINDS:
        sel = pair_masks[kind]
        if not sel.any():
            continue
        part = (split(x @ params.query(kind)) @ keys_t) * sel
        scores = part if scores is None else scores + part
    scores = scores * (1.0 / np.sqrt(d))
    if mask is not None and not mask.all():
        scores = scores + np.where(mask, 0.0, MASK_VALUE)
    weights = softmax(scores, axis=-1)
    mixed = (weights @ values).transpose((1, 0, 2)).reshape(p, h * d)
    out = params.output(mixed)
    return (out, weights) if return_weights else out


class FeedForward(Module):
    def __init__(self, rng, hidden: int, mult: int, activation: str):
        self.up = Linear(rng, hidden, hidden * mult)
        self.down = Linear(rng, hidden * mult, hidden)
        self.activation = activation

    def __call__(self, x: Tensor) -> Tensor:
        return self.down(ACTIVATIONS[self.activation](self.up(x)))


class EncoderLayer(Module):
    """Pre-norm residual block: attention sublayer then feed-forward sublayer."""

    def __init__(self, rng, cfg: EncoderConfig):
        self.attn_norm = LayerNorm(cfg.hidden)
        self.attention = EntityAwareAttention(rng, cfg.hidden, cfg.heads, cfg.head_dim)
        self.ffn_norm = LayerNorm(cfg.hidden)
        self.ffn = FeedForward(rng, cfg.hidden, cfg.ffn_mult, cfg.activation)
        self.dropout = cfg.dropout

    def __call__(self, x, token_types, mask=None, rng=None):
        x = x + dropout(self.attention(self.attn_norm(x), token_types, mask), self.dropout, rng)
        return x + dropout(self.ffn(self.ffn_norm(x)), self.dropout, rng)


class Embeddings(Module):
    def __init__(self, rng, cfg: EncoderConfig, num_entities: int = 2):
        self.word = Embedding(rng, cfg.vocab_size, cfg.hidden)
        self.entity = Embedding(rng, num_entities, cfg.entity_dim)
        self.entity_dense = Linear(rng, cfg.entity_dim, cfg.hidden, bias=False)
        self.position = Embedding(rng, cfg.max_positions, cfg.hidden)
        self.segment = Embedding(rng, 2, cfg.hidden)

    def __call__(self, inp: ModelInput) -> Tensor:
        return embed(inp, self)


def span_average_matrix(inp: ModelInput) -> np.ndarray:
    """Row e averages the word positions of entity item e."""
    avg = np.zeros((inp.num_entities, inp.num_words))
    for e, item in enumerate(inp.entity_items):
        for pos in item.positions:
            if not 0 <= pos < inp.num_words:
                raise BoundsError(f"entity item {e} points at word position {pos}")
            avg[e, pos] += 1.0 / len(item.positions)
    return avg


def embed(inp: ModelInput, params: Embeddings) -> Tensor:
    """Token + position + segment embeddings for words, then entities.

    An entity's position embedding is the mean over its span's word positions.
    """
    n_pos = params.position.weight.shape[0]
    if inp.num_words and int(inp.word_positions.max()) >= n_pos:
        raise BoundsError(f"word position {int(inp.word_positions.max())} beyond table of {n_pos}")
    vocab = params.word.weight.shape[0]
    if inp.num_words and int(inp.word_ids.max()) >= vocab:
        raise BoundsError(f"word id {int(inp.word_ids.max())} beyond vocabulary of {vocab}")

    word_pos = params.position(inp.word_positions)
    words = params.word(inp.word_ids) + word_pos + params.segment.weight[WORD]
    entity_ids = [it.entity_id for it in inp.entity_items]
    ents = (
        params.entity_dense(params.entity(entity_ids))
        + Tensor(span_average_matrix(inp)) @ word_pos
        + params.segment.weight[ENTITY]
    )
    return concat([words, ents], axis=0)


class Encoder(Module):
    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        cfg.validate()
        self.embeddings = Embeddings(rng, cfg)
        self.layers = [EncoderLayer(rng, cfg) for _ in range(cfg.layers)]
        self.cfg = cfg

    def __call__(self, inp: ModelInput, rng=None) -> EncoderOutput:
        return encoder_forward(inp, self, rng)


def encoder_forward(inp: ModelInput, encoder: Encoder, rng=None) -> EncoderOutput:
    x = embed(inp, encoder.embeddings)
    types = inp.token_types
    mask = inp.attention_mask
    for layer in encoder.layers:
        x = layer(x, types, mask, rng)
    n_w = inp.num_words
    q0, q1 = inp.question_range
    return EncoderOutput(word_states=x[:n_w], entity_states=x[n_w:], question_states=x[q0:q1])
