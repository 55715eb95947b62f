from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from ..errors import DomainError
from .schema import PLACEHOLDER, Example
from .text import tokenize

PAD, CLS, SEP, PLC, UNK = "[PAD]", "[CLS]", "[SEP]", "[PLC]", "[UNK]"
WORD_SPECIALS = (PAD, CLS, SEP, PLC, UNK)
MASK_E, UNK_E = "[MASK_E]", "[UNK_E]"
ENTITY_SPECIALS = (MASK_E, UNK_E)


@dataclass
class Vocab:
    words: list[str]
    entities: list[str] = field(default_factory=lambda: list(ENTITY_SPECIALS))

    def __post_init__(self):
        self._word_index = {w: i for i, w in enumerate(self.words)}
        self._entity_index = {e: i for i, e in enumerate(self.entities)}

    def word_id(self, token: str) -> int:
        return self._word_index.get(token, self._word_index[UNK])

    def entity_id(self, name: str) -> int:
        return self._entity_index.get(name, self._entity_index[UNK_E])

    def to_json(self) -> dict:
        return {"words": list(self.words), "entities": list(self.entities)}

    @classmethod
    def from_json(cls, obj) -> Vocab:
        return cls(list(obj["words"]), list(obj["entities"]))


def _example_tokens(ex: Example) -> Iterable[str]:
    for tok in tokenize(ex.document_text):
        yield tok.text
    for part in ex.query_text.split(PLACEHOLDER):
        for tok in tokenize(part):
            yield tok.text


def build_vocab(examples: Iterable[Example], min_freq: int = 1) -> Vocab:
    """Specials first, then observed tokens by descending frequency (ties alphabetical)."""
    counts: Counter[str] = Counter()
    n = 0
    for ex in examples:
        n += 1
        counts.update(_example_tokens(ex))
    if n == 0:
        raise DomainError("cannot build a vocabulary from an empty corpus")
    observed = sorted(
        (tok for tok, c in counts.items() if c >= min_freq and tok not in WORD_SPECIALS),
        key=lambda t: (-counts[t], t),
    )
    return Vocab(list(WORD_SPECIALS) + observed)
