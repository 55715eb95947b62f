"""Cloze examples and the JSONL dataset format.

One object per line::

    {"id": str,
     "passage": {"text": str, "sentences": [[start, end], ...], "entities": [[start, end], ...]},
     "qas": [{"query": str, "answers": [str, ...]}]}

Offsets are 0-based character indices, end-exclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from ..errors import ParseError, ValidationError

PLACEHOLDER = "@placeholder"


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class Example:
    id: str
    document_text: str
    sentence_spans: tuple[tuple[int, int], ...]
    mentions: tuple[Mention, ...]
    query_text: str
    gold_answers: tuple[str, ...]

    def sentence_of(self, mention_index: int) -> int:
        m = self.mentions[mention_index]
        for si, (s, e) in enumerate(self.sentence_spans):
            if s <= m.start and m.end <= e:
                return si
        raise ValidationError(f"{self.id}: mention {mention_index} is outside every sentence")

    def with_mentions(self, indices: Iterable[int]) -> Example:
        return replace(self, mentions=tuple(self.mentions[i] for i in indices))


def make_example(
    id: str,
    text: str,
    sentences,
    entities,
    query: str,
    answers,
) -> Example:
    """Build and validate an Example from raw offsets.

    Mentions are stored in document order, so mention index order is offset order.
    """
    ex = Example(
        id=str(id),
        document_text=text,
        sentence_spans=tuple((int(s), int(e)) for s, e in sentences),
        mentions=tuple(
            Mention(int(s), int(e), text[int(s) : int(e)])
            for s, e in sorted((int(s), int(e)) for s, e in entities)
        ),
        query_text=query,
        gold_answers=tuple(answers),
    )
    validate_example(ex)
    return ex


def validate_example(ex: Example) -> None:
    n = len(ex.document_text)
    prev_end = 0
    for s, e in ex.sentence_spans:
        if e < s:
            raise ValidationError(f"{ex.id}: sentence span ({s}, {e}) has end before start")
        if s < prev_end:
            raise ValidationError(f"{ex.id}: sentence spans overlap or are out of order at ({s}, {e})")
        if e > n:
            raise ValidationError(f"{ex.id}: sentence span ({s}, {e}) exceeds text length {n}")
        prev_end = e

    spans = []
    for k, m in enumerate(ex.mentions):
        if m.end < m.start:
            raise ValidationError(f"{ex.id}: mention span ({m.start}, {m.end}) has end before start")
        if m.start < 0 or m.end > n:
            raise ValidationError(f"{ex.id}: mention span ({m.start}, {m.end}) outside text of length {n}")
        if m.end == m.start or not m.text.strip():
            raise ValidationError(f"{ex.id}: mention span ({m.start}, {m.end}) is empty")
        if ex.document_text[m.start : m.end] != m.text:
            raise ValidationError(f"{ex.id}: mention {k} text does not match the document")
        ex.sentence_of(k)
        spans.append((m.start, m.end))
    spans.sort()
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        if s2 < e1:
            raise ValidationError(f"{ex.id}: overlapping mentions ({s1}, {e1}) and ({s2}, {e2})")

    count = ex.query_text.count(PLACEHOLDER)
    if count != 1:
        raise ValidationError(f"{ex.id}: query must contain {PLACEHOLDER} exactly once, found {count}")


def example_to_json(ex: Example) -> dict:
    return {
        "id": ex.id,
        "passage": {
            "text": ex.document_text,
            "sentences": [[s, e] for s, e in ex.sentence_spans],
            "entities": [[m.start, m.end] for m in ex.mentions],
        },
        "qas": [{"query": ex.query_text, "answers": list(ex.gold_answers)}],
    }


def example_from_json(obj) -> Example:
    try:
        passage = obj["passage"]
        qas = obj["qas"]
        if not isinstance(qas, list) or len(qas) != 1:
            raise ValidationError("exactly one qa per line is supported")
        qa = qas[0]
        return make_example(
            obj["id"],
            passage["text"],
            passage["sentences"],
            passage["entities"],
            qa["query"],
            qa["answers"],
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"missing or malformed field: {exc}") from exc


def parse_dataset(path) -> list[Example]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", lineno) from exc
            try:
                examples.append(example_from_json(obj))
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
    return examples


def serialize_dataset(examples: Iterable[Example]) -> str:
    return "".join(
        json.dumps(example_to_json(ex), ensure_ascii=False, sort_keys=True) + "\n" for ex in examples
    )


def write_dataset(examples: Iterable[Example], path) -> None:
    Path(path).write_text(serialize_dataset(examples), encoding="utf-8")
