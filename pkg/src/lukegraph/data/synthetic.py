"""Synthetic two-hop cloze tasks.

Each document is a handful of sentences that list entities meeting each other.
The query names a *cue* entity; the answer is the unique entity that shares a
sentence with some *bridge* entity which, in a different sentence, appears with
the cue. The cue's own sentence-mates (the bridge and optional extra
distractors) are candidates too, so picking anything next to the cue is wrong,
and the answer never shares a sentence with the cue.

Optional decoy chains repeat an unrelated entity across two sentences, which
mimics the bridge pattern without touching the cue.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import GenerationError
from .schema import PLACEHOLDER, Example, make_example

NAMES = (
    "Aldor", "Brenna", "Cato", "Dorrin", "Elsa", "Fenwick", "Galen", "Hestia",
    "Ivo", "Jorah", "Kesta", "Lorin", "Maren", "Nadia", "Orrin", "Perrin",
    "Quill", "Rhosyn", "Soren", "Talia", "Ulric", "Vessa", "Wendel", "Xara",
    "Yorick", "Zelda", "Port Vela", "Lake Orin", "Mount Kael", "Fort Dunmore",
    "Amsel", "Bexley", "Corwin", "Delphine", "Emrys", "Fiora", "Gideon", "Halden",
    "Isolde", "Jasper", "Kaelen", "Lysander", "Mirela", "Nestor", "Oriel", "Pavla",
)

ACTIVITIES = (
    "met at the harbor",
    "shared a long dinner",
    "signed a trade accord",
    "were photographed together",
    "argued about the budget",
    "toured the old mill",
    "spoke at the summit",
    "trained at the academy",
)

QUERY_TEMPLATES = (
    "{p} and {c} share a mutual acquaintance.",
    "Friends of {c} later introduced {p} to the council.",
    "A common contact links {c} with {p}.",
)


@dataclass
class SyntheticConfig:
    n_train: int = 1000
    n_dev: int = 200
    pool_size: int = 40
    sentences_per_doc: int = 5
    max_cue_distractors: int = 1
    decoy_chains: int = 0

    def entities_needed(self) -> int:
        noise_sentences = self.sentences_per_doc - 2 - 2 * self.decoy_chains
        return 3 + self.max_cue_distractors + 3 * self.decoy_chains + 2 * noise_sentences


def two_hop_answers(sentences: list[list[str]], cue: str) -> set[str]:
    """Brute-force answer set: entities sharing a sentence with a bridge that meets the cue elsewhere."""
    answers = set()
    for si, s1 in enumerate(sentences):
        if cue not in s1:
            continue
        for bridge in s1:
            if bridge == cue:
                continue
            for sj, s2 in enumerate(sentences):
                if sj == si or bridge not in s2 or cue in s2:
                    continue
                answers.update(e for e in s2 if e not in (bridge, cue))
    return answers


def _join(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def _plan_sentences(cfg: SyntheticConfig, rng: random.Random) -> tuple[list[list[str]], str, str]:
    pool = list(NAMES[: cfg.pool_size])
    rng.shuffle(pool)
    take = iter(pool)
    cue, bridge, answer = next(take), next(take), next(take)
    cue_sentence = [cue, bridge] + [next(take) for _ in range(rng.randint(0, cfg.max_cue_distractors))]
    sentences = [cue_sentence, [bridge, answer]]
    for _ in range(cfg.decoy_chains):
        hub = next(take)
        sentences.append([hub, next(take)])
        sentences.append([hub, next(take)])
    while len(sentences) < cfg.sentences_per_doc:
        sentences.append([next(take) for _ in range(rng.randint(1, 2))])
    for s in sentences:
        rng.shuffle(s)
    rng.shuffle(sentences)
    return sentences, cue, answer


def _render(ex_id: str, sentences, cue: str, answer: str, rng: random.Random) -> Example:
    text = ""
    sent_spans = []
    mentions = []
    for names in sentences:
        if text:
            text += " "
        start = len(text)
        for i, name in enumerate(names):
            if i:
                text += " and " if i == len(names) - 1 else ", "
            mentions.append((len(text), len(text) + len(name)))
            text += name
        verb = rng.choice(ACTIVITIES)
        if len(names) == 1:
            verb = "visited the archive" if verb.startswith("were") else verb
        text += f" {verb}."
        sent_spans.append((start, len(text)))
    query = rng.choice(QUERY_TEMPLATES).format(p=PLACEHOLDER, c=cue)
    return make_example(ex_id, text, sent_spans, mentions, query, [answer])


def generate_example(ex_id: str, cfg: SyntheticConfig, rng: random.Random) -> Example:
    sentences, cue, answer = _plan_sentences(cfg, rng)
    found = two_hop_answers(sentences, cue)
    if found != {answer}:
        raise GenerationError(f"{ex_id}: two-hop rule yields {sorted(found)}, expected {answer!r}")
    return _render(ex_id, sentences, cue, answer, rng)


def gen_synthetic(cfg: SyntheticConfig, seed: int) -> tuple[list[Example], list[Example]]:
    """Deterministic train/dev splits for ``seed``."""
    if cfg.pool_size < 6:
        raise GenerationError(f"entity pool of {cfg.pool_size} is below the minimum of 6")
    if cfg.pool_size > len(NAMES):
        raise GenerationError(f"entity pool of {cfg.pool_size} exceeds the {len(NAMES)} built-in names")
    if cfg.sentences_per_doc < 3:
        raise GenerationError("need at least 3 sentences per document")
    if cfg.sentences_per_doc < 2 + 2 * cfg.decoy_chains:
        raise GenerationError(f"{cfg.decoy_chains} decoy chains do not fit in {cfg.sentences_per_doc} sentences")
    if cfg.entities_needed() > cfg.pool_size:
        raise GenerationError(
            f"configuration needs up to {cfg.entities_needed()} distinct entities, pool has {cfg.pool_size}"
        )
    rng = random.Random(seed)
    train = [generate_example(f"syn-train-{i:05d}", cfg, rng) for i in range(cfg.n_train)]
    dev = [generate_example(f"syn-dev-{i:05d}", cfg, rng) for i in range(cfg.n_dev)]
    return train, dev
