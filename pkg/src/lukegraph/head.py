from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data.text import answer_normalize
from .errors import DomainError
from .graph import EntityGraph
from .numerics import Linear, Module, Tensor, bce_with_logits, concat


class CandidateScorer(Module):
    """Linear classifier over ``[z_placeholder; z_candidate]``."""

    def __init__(self, rng: np.random.Generator, node_dim: int):
        self.classifier = Linear(rng, 2 * node_dim, 1)


def score_candidates(z: Tensor, graph: EntityGraph, scorer: CandidateScorer) -> Tensor:
    """One logit per mention node."""
    m = graph.num_mentions
    if m == 0:
        raise DomainError("no candidate mentions to score")
    if z.shape[0] != graph.num_nodes:
        raise DomainError(f"{z.shape[0]} node states for a graph with {graph.num_nodes} nodes")
    plc = z[graph.placeholder : graph.placeholder + 1]
    w = scorer.classifier.weight
    d = z.shape[1]
    # the placeholder half of the dot product is shared by every candidate
    logits = z[:m] @ w[d:] + plc @ w[:d] + scorer.classifier.bias
    return logits.reshape(m)


def mention_labels(candidates: Sequence[str], golds: Sequence[str]) -> np.ndarray:
    gold_keys = {answer_normalize(g) for g in golds}
    return np.array([1.0 if answer_normalize(c) in gold_keys else 0.0 for c in candidates])


def training_loss(logits: Tensor, labels) -> Tensor:
    return bce_with_logits(logits, labels)


def candidate_scores(logits, candidate_map: Mapping[int, str]) -> dict[str, float]:
    """Max-pool mention logits per normalized candidate string, in first-mention order.

    ``candidate_map`` is ordered like ``logits`` (document order), so the first
    key that produces a string is its earliest mention.
    """
    values = np.asarray(logits.data if isinstance(logits, Tensor) else logits, dtype=np.float64)
    if len(values) != len(candidate_map):
        raise DomainError(f"{len(values)} logits for {len(candidate_map)} mentions")
    scores: dict[str, float] = {}
    surface: dict[str, str] = {}
    for value, text in zip(values, candidate_map.values()):
        key = answer_normalize(text)
        if key not in scores:
            scores[key] = float(value)
            surface[key] = text
        else:
            scores[key] = max(scores[key], float(value))
    return {surface[k]: v for k, v in scores.items()}


def select_answer(logits, candidate_map: Mapping[int, str]) -> str:
    """Highest-scoring candidate string; ties go to the earliest first mention."""
    if len(candidate_map) == 0:
        raise DomainError("cannot select an answer without candidates")
    scores = candidate_scores(logits, candidate_map)
    best, best_score = None, -np.inf
    for text, score in scores.items():
        if best is None or score > best_score:
            best, best_score = text, score
    return best


def _f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    same = sum(common.values())
    if same == 0:
        return 0.0
    precision = same / len(pred_tokens)
    recall = same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def em_f1(predicted: str, golds: Sequence[str]) -> tuple[float, float]:
    if not golds:
        raise DomainError("em_f1 needs at least one gold answer")
    pred = answer_normalize(predicted)
    em = max(float(pred == answer_normalize(g)) for g in golds)
    f1 = max(_f1(pred.split(), answer_normalize(g).split()) for g in golds)
    return em, f1


@dataclass
class Prediction:
    id: str
    logits: list[float]
    scores: dict[str, float]
    predicted: str
    golds: list[str]
    em: float
    f1: float

    def to_json(self) -> dict:
        return {"id": self.id, "predicted": self.predicted, "em": self.em, "f1": self.f1}


def evaluation_report(predictions: Sequence[Prediction]) -> dict:
    """Dataset-level means plus per-example rows sorted by id."""
    rows = sorted(predictions, key=lambda p: p.id)
    n = len(rows)
    return {
        "n": n,
        "em": sum(p.em for p in rows) / n if n else 0.0,
        "f1": sum(p.f1 for p in rows) / n if n else 0.0,
        "per_example": [p.to_json() for p in rows],
    }
