"""Single-document JSON checkpoints.

Floats are written with Python's shortest round-trip repr, so save -> load ->
save reproduces the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data import Vocab
from ..errors import CheckpointError, ConfigError
from .config import RunConfig
from .model import LukeGraphModel

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: RunConfig
    vocab: Vocab
    params: dict[str, np.ndarray]

    @classmethod
    def from_model(cls, model: LukeGraphModel) -> Checkpoint:
        return cls(model.cfg, model.vocab, {n: p.data.copy() for n, p in model.named_parameters()})

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "config": self.config.to_json(),
            "vocab": self.vocab.to_json(),
            "parameters": {
                name: {"shape": list(value.shape), "data": value.tolist()}
                for name, value in self.params.items()
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> Checkpoint:
        version = obj.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {version!r}")
        try:
            config = RunConfig.from_json(obj["config"])
        except ConfigError as exc:
            raise CheckpointError(f"bad config in checkpoint: {exc}") from exc
        vocab = Vocab.from_json(obj["vocab"])
        params = {}
        for name, entry in obj["parameters"].items():
            value = np.asarray(entry["data"], dtype=np.float64)
            shape = tuple(entry["shape"])
            if value.shape != shape:
                raise CheckpointError(f"{name}: data shape {value.shape} does not match declared {shape}")
            params[name] = value
        return cls(config, vocab, params)

    @classmethod
    def load(cls, path) -> Checkpoint:
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: not a JSON checkpoint ({exc.msg})") from exc
        return cls.from_json(obj)

    def build_model(self) -> LukeGraphModel:
        words = self.params.get("encoder.embeddings.word.weight")
        if words is not None and words.shape[0] != len(self.vocab.words):
            raise CheckpointError(
                f"vocabulary has {len(self.vocab.words)} words but the embedding table has {words.shape[0]} rows"
            )
        model = LukeGraphModel(self.config, self.vocab)
        model.load_state(self.params)
        return model
