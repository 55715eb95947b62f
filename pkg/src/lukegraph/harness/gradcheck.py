"""Finite-difference check of the whole pipeline on a hand-sized example."""

from __future__ import annotations

import numpy as np

from ..data import Example, build_vocab, make_example
from ..numerics import GradCheckResult, grad_check
from .config import RunConfig
from .model import LukeGraphModel, prepare


def tiny_example() -> Example:
    """Twelve word tokens, four mentions, every edge type present."""
    text = "Ana Bo; Bo Cy"
    return make_example(
        "tiny",
        text,
        [(0, 6), (8, 13)],
        [(0, 3), (4, 6), (8, 10), (11, 13)],
        "@placeholder met Ana",
        ["Cy"],
    )


def pipeline_gradcheck(
    cfg: RunConfig,
    example: Example | None = None,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
    step: float = 1e-4,
) -> GradCheckResult:
    # With an O(1) loss, a 1e-5 step leaves ~1e-11 of roundoff in each difference,
    # which swamps the relative error of the smallest (~1e-9) gradient entries.
    # dropout would make the loss a different function on every call
    cfg = cfg.replace(dropout=0.0)
    example = example or tiny_example()
    vocab = build_vocab([example])
    model = LukeGraphModel(cfg, vocab)
    item = prepare(example, vocab, cfg)
    params = model.parameters()
    return grad_check(lambda: model.loss(item), params, step=step, max_entries=max_entries, rng=rng)
