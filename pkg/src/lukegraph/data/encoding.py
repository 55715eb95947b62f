"""Example → model input in the ``[CLS] question [SEP] [SEP] document [SEP] entities`` layout."""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .schema import PLACEHOLDER, Example
from .text import tokenize
from .vocab import CLS, MASK_E, PLC, SEP, Vocab

log = logging.getLogger(__name__)

PLACEHOLDER_ITEM = -1
WORD, ENTITY = 0, 1


@dataclass(frozen=True)
class EntityItem:
    entity_id: int
    positions: tuple[int, ...]
    mention_index: int  # PLACEHOLDER_ITEM for the question placeholder


@dataclass
class ModelInput:
    example_id: str
    word_ids: np.ndarray
    word_positions: np.ndarray
    entity_items: list[EntityItem]
    question_range: tuple[int, int]
    candidate_map: dict[int, str]
    warnings: list[str] = field(default_factory=list)

    @property
    def num_words(self) -> int:
        return len(self.word_ids)

    @property
    def num_entities(self) -> int:
        return len(self.entity_items)

    @property
    def segment_ids(self) -> np.ndarray:
        return np.array([WORD] * self.num_words + [ENTITY] * self.num_entities, dtype=np.int64)

    @property
    def token_types(self) -> np.ndarray:
        return self.segment_ids

    @property
    def attention_mask(self) -> np.ndarray:
        return np.ones(self.num_words + self.num_entities, dtype=bool)

    @property
    def mention_indices(self) -> list[int]:
        return [it.mention_index for it in self.entity_items if it.mention_index != PLACEHOLDER_ITEM]

    @property
    def placeholder_position(self) -> int:
        return self.entity_items[-1].positions[0]


def _question_tokens(query: str, max_len: int) -> tuple[list[str], int]:
    left, right = query.split(PLACEHOLDER)
    tokens = [t.text for t in tokenize(left)]
    plc = len(tokens)
    tokens.append(PLC)
    tokens.extend(t.text for t in tokenize(right))
    if len(tokens) > max_len:
        # cut the tail first; shift the window only if the placeholder would fall out
        start = max(0, plc - max_len + 1)
        tokens = tokens[start : start + max_len]
        plc -= start
    return tokens, plc


def encode_example(
    example: Example,
    vocab: Vocab,
    max_seq_length: int = 512,
    max_question_length: int = 90,
) -> ModelInput:
    """Encode one example.

    Entity items are one per document mention (document order) followed by the
    placeholder item; every item uses the ``[MASK_E]`` embedding. Mentions that
    fall outside a truncated document window are dropped with a warning.
    """
    q_tokens, plc_offset = _question_tokens(example.query_text, max_question_length)
    budget = max_seq_length - len(q_tokens) - 4
    if budget < 1:
        raise ConfigError(
            f"max_seq_length={max_seq_length} leaves no room for the document "
            f"after a {len(q_tokens)}-token question"
        )
    all_tokens = tokenize(example.document_text)
    doc_tokens = all_tokens[:budget]
    warnings = []
    if len(all_tokens) > budget:
        warnings.append(f"{example.id}: document truncated from {len(all_tokens)} to {budget} tokens")

    words = [CLS] + q_tokens + [SEP, SEP] + [t.text for t in doc_tokens] + [SEP]
    doc_offset = len(q_tokens) + 3
    word_ids = np.array([vocab.word_id(w) for w in words], dtype=np.int64)

    starts = [t.start for t in all_tokens]
    mask_e = vocab.entity_id(MASK_E)
    items = []
    candidate_map = {}
    dropped = []
    for k, m in enumerate(example.mentions):
        lo = bisect.bisect_right(starts, m.start) - 1
        if lo < 0 or all_tokens[lo].end <= m.start:
            lo += 1
        hi = bisect.bisect_left(starts, m.end)
        # tokens [lo, hi) overlap the mention's character span
        if hi <= lo or hi > len(doc_tokens):
            dropped.append(k)
            continue
        items.append(EntityItem(mask_e, tuple(range(doc_offset + lo, doc_offset + hi)), k))
        candidate_map[k] = m.text
    if dropped:
        warnings.append(f"{example.id}: dropped {len(dropped)} mention(s) outside the document window")
    items.append(EntityItem(mask_e, (1 + plc_offset,), PLACEHOLDER_ITEM))
    for w in warnings:
        log.warning(w)

    return ModelInput(
        example_id=example.id,
        word_ids=word_ids,
        word_positions=np.arange(len(words), dtype=np.int64),
        entity_items=items,
        question_range=(1, 1 + len(q_tokens)),
        candidate_map=candidate_map,
        warnings=warnings,
    )
