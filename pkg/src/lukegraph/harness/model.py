"""The assembled model: encoder, gated RGAT, candidate scorer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Example, ModelInput, Vocab, encode_example
from ..encoder import Encoder, EncoderConfig
from ..errors import CheckpointError
from ..gated_rgat import GatedRGAT, gated_rgat_forward
from ..graph import EntityGraph, build_graph
from ..head import CandidateScorer, mention_labels, score_candidates, training_loss
from ..numerics import Module, Tensor
from .config import RunConfig


@dataclass
class Prepared:
    example: Example
    inputs: ModelInput
    graph: EntityGraph
    labels: np.ndarray


def prepare(example: Example, vocab: Vocab, cfg: RunConfig) -> Prepared:
    inputs = encode_example(example, vocab, cfg.max_seq_length, cfg.max_question_length)
    kept = inputs.mention_indices
    graph_source = example if len(kept) == len(example.mentions) else example.with_mentions(kept)
    graph = build_graph(graph_source)
    labels = mention_labels(list(inputs.candidate_map.values()), example.gold_answers)
    return Prepared(example, inputs, graph, labels)


class LukeGraphModel(Module):
    def __init__(self, cfg: RunConfig, vocab: Vocab):
        cfg.validate()
        rng = np.random.default_rng(cfg.seed)
        self.encoder = Encoder(
            EncoderConfig(
                vocab_size=len(vocab.words),
                hidden=cfg.hidden,
                entity_dim=cfg.entity_dim,
                layers=cfg.encoder_layers,
                heads=cfg.heads,
                head_dim=cfg.head_dim,
                max_positions=cfg.max_seq_length,
                ffn_mult=cfg.ffn_mult,
                activation=cfg.activation,
                dropout=cfg.dropout,
            ),
            rng,
        )
        if not cfg.ablation.no_graph:
            self.graph = GatedRGAT(
                rng,
                in_dim=cfg.hidden,
                hidden=cfg.rgat_hidden,
                question_dim=cfg.hidden,
                head_counts=tuple(cfg.rgat_heads),
                slope=cfg.leaky_slope,
                untyped_relations=cfg.ablation.untyped_relations,
            )
        self.scorer = CandidateScorer(rng, cfg.node_dim)
        self.cfg = cfg
        self.vocab = vocab

    def logits(self, item: Prepared, rng: np.random.Generator | None = None) -> Tensor:
        enc = self.encoder(item.inputs, rng)
        z = enc.entity_states
        if not self.cfg.ablation.no_graph:
            z = gated_rgat_forward(z, item.graph, enc.question_states, self.graph, self.cfg.ablation)
        return score_candidates(z, item.graph, self.scorer)

    def loss(self, item: Prepared, rng: np.random.Generator | None = None) -> Tensor:
        return training_loss(self.logits(item, rng), item.labels)

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        extra = sorted(set(state) - set(params))
        if missing or extra:
            raise CheckpointError(f"parameter names differ: missing {missing}, unexpected {extra}")
        for name, p in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise CheckpointError(f"{name}: checkpoint shape {value.shape} != model shape {p.shape}")
            p.data = value.copy()
