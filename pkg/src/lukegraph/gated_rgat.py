"""Relational graph attention with a question-aware gate.

For every relation ``r`` and head ``k`` a node feature ``y_i`` is projected to
``h_i = y_i W[r, k]``. Edge logits are ``LeakyReLU(h_i . q[r, k] + h_j . k[r, k])``
and are normalized per node *jointly* over all relations and their neighbors.
The weighted neighbor sum goes through ELU; heads are concatenated, except in a
layer configured to average (then ELU follows the average).

After each layer a gate mixes in the question: every question token gets a
sigmoid weight from ``[z_i; y_qj]``, the weighted sum ``q_i`` (not normalized)
feeds a vector gate ``alpha_i = sigmoid(W_s [z_i; q_i] + b_s)`` and the node becomes
``alpha_i * tanh(q_i) + (1 - alpha_i) * z_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .graph import NUM_RELATIONS, EntityGraph, Relation
from .numerics import (
    Linear,
    Module,
    Tensor,
    elu,
    leaky_relu,
    sigmoid,
    softmax,
    swapaxes,
    tanh,
    uniform_param,
)
from .numerics.tensor import concat

MASK_VALUE = -1e30


@dataclass
class Ablation:
    """Runtime switches mirroring the ablation rows of the graph module study."""

    no_graph: bool = False
    uniform_attention: bool = False
    no_gate: bool = False
    untyped_relations: bool = False
    drop_edges: list[str] = field(default_factory=list)

    def dropped_relations(self) -> list[Relation]:
        out = []
        for name in self.drop_edges:
            try:
                out.append(Relation[name.upper()])
            except KeyError:
                raise ConfigError(f"unknown edge type {name!r} (expected sent, match or plc)") from None
        return out

    def to_json(self) -> dict:
        return {
            "no_graph": self.no_graph,
            "uniform_attention": self.uniform_attention,
            "no_gate": self.no_gate,
            "untyped_relations": self.untyped_relations,
            "drop_edges": sorted(set(e.lower() for e in self.drop_edges)),
        }

    @classmethod
    def from_json(cls, obj) -> Ablation:
        ab = cls(**obj)
        ab.dropped_relations()
        return ab


class RgatLayer(Module):
    def __init__(
        self,
        rng: np.random.Generator,
        in_dim: int,
        out_dim: int,
        heads: int,
        combine: str,
        relations: int = NUM_RELATIONS,
        slope: float = 0.2,
    ):
        if combine not in ("concat", "average"):
            raise ConfigError(f"combine must be concat or average, got {combine!r}")
        if combine == "concat" and out_dim % heads:
            raise ConfigError(f"concat layer width {out_dim} not divisible by {heads} heads")
        head_dim = out_dim // heads if combine == "concat" else out_dim
        self.transform = uniform_param(rng, (relations, heads, in_dim, head_dim), in_dim)
        self.query = uniform_param(rng, (relations, heads, head_dim, 1), head_dim)
        self.key = uniform_param(rng, (relations, heads, head_dim, 1), head_dim)
        self.heads = heads
        self.combine = combine
        self.relations = relations
        self.slope = slope
        self.out_dim = out_dim


def rgat_transform(feats: Tensor, layer: RgatLayer) -> Tensor:
    """``h[r, k, i] = feats[i] W[r, k]``, shape ``(R, K, N, d)``."""
    return feats @ layer.transform


def rgat_scores(h: Tensor, adjacency: np.ndarray, layer: RgatLayer, uniform: bool = False) -> Tensor:
    """Attention weights ``a[r, k, i, j]`` normalized over all (r, j) for each (k, i)."""
    r, k, n, _ = h.shape
    if adjacency.shape != (r, n, n):
        raise ConfigError(f"adjacency {adjacency.shape} does not match transformed features {h.shape}")
    support = adjacency.transpose(1, 0, 2).reshape(n, r * n)
    counts = support.sum(axis=1, keepdims=True)
    assert (counts > 0).all(), "every node needs at least one neighbor (self-loops guarantee it)"
    if uniform:
        weights = np.broadcast_to(support / counts, (k, n, r * n))
        return Tensor(weights.reshape(k, n, r, n).transpose(2, 0, 1, 3))

    src = h @ layer.query  # (R, K, N, 1)
    dst = swapaxes(h @ layer.key, -1, -2)  # (R, K, 1, N)
    logits = leaky_relu(src + dst, layer.slope)  # (R, K, N, N)
    flat = logits.transpose((1, 2, 0, 3)).reshape(k, n, r * n)
    flat = flat + np.where(support > 0, 0.0, MASK_VALUE)
    weights = softmax(flat, axis=-1)
    return weights.reshape(k, n, r, n).transpose((2, 0, 1, 3))


def rgat_aggregate(weights: Tensor, h: Tensor, combine: str) -> Tensor:
    """ELU of the attention-weighted neighbor sum, heads concatenated or averaged."""
    summed = (weights @ h).sum(axis=0)  # (K, N, d)
    k, n, d = summed.shape
    if combine == "concat":
        return elu(summed).transpose((1, 0, 2)).reshape(n, k * d)
    if combine == "average":
        return elu(summed.mean(axis=0))
    raise ConfigError(f"combine must be concat or average, got {combine!r}")


def rgat_layer_forward(
    feats: Tensor, adjacency: np.ndarray, layer: RgatLayer, uniform: bool = False
) -> Tensor:
    h = rgat_transform(feats, layer)
    weights = rgat_scores(h, adjacency, layer, uniform)
    return rgat_aggregate(weights, h, layer.combine)


class QuestionGate(Module):
    def __init__(self, rng: np.random.Generator, node_dim: int, question_dim: int):
        if node_dim != question_dim:
            raise ConfigError(
                f"question gate needs node width {node_dim} == question width {question_dim}"
            )
        self.token_score = Linear(rng, node_dim + question_dim, 1)
        self.gate = Linear(rng, node_dim + question_dim, node_dim)
        self.node_dim = node_dim


def question_gate(z: Tensor, question: Tensor, gate: QuestionGate, return_parts: bool = False):
    if question.shape[0] == 0:
        raise DomainError("question gate needs at least one question token")
    d = gate.node_dim
    w = gate.token_score.weight
    # token score of [z_i; y_j] for every (i, j) pair, split across the two halves of its weight
    pair_logits = z @ w[:d] + swapaxes(question @ w[d:], 0, 1) + gate.token_score.bias
    token_weights = sigmoid(pair_logits)  # (N, n)
    q = token_weights @ question  # (N, L)
    alpha = sigmoid(gate.gate(concat([z, q], axis=1)))
    out = alpha * tanh(q) + (1.0 - alpha) * z
    if return_parts:
        return out, {"token_weights": token_weights, "q": q, "alpha": alpha}
    return out


class GatedRGAT(Module):
    """Stack of RGAT layers, each followed by its own question gate.

    ``head_counts`` gives the heads per layer; every layer but the last
    concatenates (per-head width ``hidden // heads``), the last averages.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        in_dim: int,
        hidden: int,
        question_dim: int,
        head_counts=(8, 1),
        slope: float = 0.2,
        untyped_relations: bool = False,
    ):
        relations = 1 if untyped_relations else NUM_RELATIONS
        self.layers = []
        self.gates = []
        width = in_dim
        for i, heads in enumerate(head_counts):
            combine = "average" if i == len(head_counts) - 1 else "concat"
            self.layers.append(RgatLayer(rng, width, hidden, heads, combine, relations, slope))
            self.gates.append(QuestionGate(rng, hidden, question_dim))
            width = hidden
        self.untyped_relations = untyped_relations
        self.out_dim = hidden if head_counts else in_dim


def gated_rgat_forward(
    entity_states: Tensor,
    graph: EntityGraph,
    question_states: Tensor,
    model: GatedRGAT,
    ablation: Ablation | None = None,
) -> Tensor:
    """Final node states; rows follow graph node order (mentions, then placeholder).

    ``no_graph`` returns the encoder states unchanged and overrides every other switch.
    """
    ablation = ablation or Ablation()
    if ablation.no_graph:
        return entity_states
    if entity_states.shape[0] != graph.num_nodes:
        raise ConfigError(
            f"{entity_states.shape[0]} entity states for a graph with {graph.num_nodes} nodes"
        )
    if ablation.untyped_relations != model.untyped_relations:
        raise ConfigError("untyped_relations ablation does not match the parameter layout")
    adjacency = graph.adjacency(ablation.dropped_relations(), untyped=ablation.untyped_relations)
    z = entity_states
    for layer, gate in zip(model.layers, model.gates):
        z = rgat_layer_forward(z, adjacency, layer, ablation.uniform_attention)
        if not ablation.no_gate:
            z = question_gate(z, question_states, gate)
    return z
