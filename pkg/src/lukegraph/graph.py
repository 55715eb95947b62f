"""Heterogeneous entity graph over document mentions plus the question placeholder.

Node ``k < M`` is mention ``k`` and node ``M`` is the placeholder. Edges are
undirected and typed:

* SENT  -- two mentions inside the same sentence,
* MATCH -- two mentions in different sentences with equal normalized strings,
* PLC   -- the placeholder and any mention.

Each mention additionally carries a SENT self-loop and the placeholder a PLC
self-loop, so every node has a non-empty neighborhood under every softmax.
"""

from __future__ import annotations

import enum
import itertools
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .data.schema import Example
from .data.text import answer_normalize
from .errors import BoundsError, UsageError


class Relation(enum.IntEnum):
    SENT = 0
    MATCH = 1
    PLC = 2


NUM_RELATIONS = len(Relation)


@dataclass(frozen=True)
class EntityGraph:
    num_mentions: int
    edges: frozenset[tuple[int, int, Relation]]
    labels: tuple[str, ...] = ()

    @property
    def placeholder(self) -> int:
        return self.num_mentions

    @property
    def num_nodes(self) -> int:
        return self.num_mentions + 1

    def self_loop(self, node: int) -> Relation:
        return Relation.PLC if node == self.placeholder else Relation.SENT

    def sorted_edges(self) -> list[tuple[int, int, Relation]]:
        return sorted(self.edges, key=lambda e: (e[0], e[1], int(e[2])))

    def edge_set(self) -> set[tuple[int, int, int]]:
        return {(u, v, int(r)) for u, v, r in self.edges}

    def adjacency(
        self,
        drop: Iterable[Relation] = (),
        untyped: bool = False,
    ) -> np.ndarray:
        """0/1 array ``(R, N, N)`` with self-loops; ``drop`` removes non-loop edges only.

        ``untyped`` collapses everything into a single relation slot.
        """
        n = self.num_nodes
        adj = np.zeros((NUM_RELATIONS, n, n))
        dropped = set(drop)
        for u, v, r in self.edges:
            if r not in dropped:
                adj[r, u, v] = adj[r, v, u] = 1.0
        for node in range(n):
            adj[self.self_loop(node), node, node] = 1.0
        if untyped:
            adj = np.minimum(adj.sum(axis=0, keepdims=True), 1.0)
        return adj


def _check_mentions(example: Example) -> list[tuple[int, str]]:
    return [(example.sentence_of(k), answer_normalize(m.text)) for k, m in enumerate(example.mentions)]


def build_graph(example: Example) -> EntityGraph:
    info = _check_mentions(example)
    m = len(info)
    edges: set[tuple[int, int, Relation]] = set()

    by_sentence: dict[int, list[int]] = defaultdict(list)
    by_string: dict[str, list[int]] = defaultdict(list)
    for k, (sent, key) in enumerate(info):
        by_sentence[sent].append(k)
        by_string[key].append(k)

    for members in by_sentence.values():
        for u, v in itertools.combinations(members, 2):
            edges.add((u, v, Relation.SENT))
    for members in by_string.values():
        for u, v in itertools.combinations(members, 2):
            if info[u][0] != info[v][0]:
                edges.add((u, v, Relation.MATCH))
    for k in range(m):
        edges.add((k, m, Relation.PLC))

    labels = tuple(mn.text for mn in example.mentions) + ("[PLC]",)
    return EntityGraph(m, frozenset(edges), labels)


def brute_force_graph(example: Example) -> EntityGraph:
    """Pairwise evaluation of the three edge rules straight from spans; test oracle."""
    mentions = example.mentions
    m = len(mentions)

    def sentence(k):
        hits = [
            i
            for i, (s, e) in enumerate(example.sentence_spans)
            if s <= mentions[k].start and mentions[k].end <= e
        ]
        assert len(hits) == 1
        return hits[0]

    edges = set()
    for u in range(m):
        for v in range(u + 1, m):
            same_sentence = sentence(u) == sentence(v)
            if same_sentence:
                edges.add((u, v, Relation.SENT))
            elif answer_normalize(mentions[u].text) == answer_normalize(mentions[v].text):
                edges.add((u, v, Relation.MATCH))
        edges.add((u, m, Relation.PLC))
    labels = tuple(mn.text for mn in mentions) + ("[PLC]",)
    return EntityGraph(m, frozenset(edges), labels)


def neighbors(graph: EntityGraph, node: int, relation: Relation) -> list[int]:
    if not 0 <= node < graph.num_nodes:
        raise BoundsError(f"node {node} not in graph with {graph.num_nodes} nodes")
    out = {v if u == node else u for u, v, r in graph.edges if r == relation and node in (u, v)}
    if graph.self_loop(node) == relation:
        out.add(node)
    return sorted(out)


# ---------------------------------------------------------------------------
# export

_DOT_STYLE = {
    Relation.SENT: 'style=solid, color="black"',
    Relation.MATCH: 'style=dashed, color="blue"',
    Relation.PLC: 'style="dashdotted", color="orange"',
}


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_graph(graph: EntityGraph, format: str = "dot", name: str = "entity_graph") -> str:
    if format == "json":
        return json.dumps(graph_to_json(graph), sort_keys=True) + "\n"
    if format != "dot":
        raise UsageError(f"unknown graph format {format!r} (expected dot or json)")
    lines = [f'graph "{_dot_escape(name)}" {{']
    lines.append("  // solid=SENT, dashed=MATCH, dash-dot=PLC")
    for node in range(graph.num_nodes):
        label = graph.labels[node] if node < len(graph.labels) else str(node)
        extra = ', style=filled, fillcolor="yellow"' if node == graph.placeholder else ""
        lines.append(f'  n{node} [label="{_dot_escape(label)}"{extra}];')
    for u, v, r in graph.sorted_edges():
        lines.append(f'  n{u} -- n{v} [label="{r.name}", {_DOT_STYLE[r]}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(graph: EntityGraph) -> dict:
    return {
        "num_mentions": graph.num_mentions,
        "placeholder": graph.placeholder,
        "labels": list(graph.labels),
        "edges": [[u, v, r.name] for u, v, r in graph.sorted_edges()],
    }


def graph_from_json(obj) -> EntityGraph:
    edges = frozenset((int(u), int(v), Relation[r]) for u, v, r in obj["edges"])
    return EntityGraph(int(obj["num_mentions"]), edges, tuple(obj.get("labels", ())))
