import re
import string
from typing import NamedTuple

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_SENTENCE_END_RE = re.compile(r"[.!?](?=\s)")
_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


class Token(NamedTuple):
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Lowercased word/punctuation tokens with their source character spans."""
    return [Token(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def answer_normalize(s: str) -> str:
    """Lower text and remove punctuation, articles and extra whitespace."""
    s = s.lower()
    s = "".join(ch for ch in s if ch not in _PUNCT)
    s = _ARTICLES_RE.sub(" ", s)
    return " ".join(s.split())


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Rule-based splitter for raw-text import: break after . ! ? followed by whitespace.

    Returned spans are stripped of surrounding whitespace and never empty.
    """
    spans = []
    start = 0
    cuts = [m.end() for m in _SENTENCE_END_RE.finditer(text)] + [len(text)]
    for cut in cuts:
        seg = text[start:cut]
        lead = len(seg) - len(seg.lstrip())
        s, e = start + lead, start + len(seg.rstrip())
        if e > s:
            spans.append((s, e))
        start = cut
    return spans
