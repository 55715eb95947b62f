from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..gated_rgat import Ablation


@dataclass
class RunConfig:
    # encoder
    hidden: int = 64
    entity_dim: int = 16
    encoder_layers: int = 2
    heads: int = 4
    head_dim: int = 16
    ffn_mult: int = 4
    activation: str = "gelu"
    dropout: float = 0.0
    # graph module
    rgat_hidden: int = 64
    rgat_heads: list[int] = field(default_factory=lambda: [8, 1])
    leaky_slope: float = 0.2
    # input limits
    max_seq_length: int = 512
    max_question_length: int = 90
    min_freq: int = 1
    # optimizer
    lr: float = 1e-3
    warmup_ratio: float = 0.06
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-6
    # schedule
    batch_size: int = 2
    epochs: int = 2
    max_steps: int | None = None
    seed: int = 0
    ablation: Ablation = field(default_factory=Ablation)

    def validate(self) -> None:
        if self.hidden != self.heads * self.head_dim:
            raise ConfigError(
                f"hidden ({self.hidden}) must equal heads x head_dim ({self.heads} x {self.head_dim})"
            )
        if not 0.0 <= self.warmup_ratio < 1.0:
            raise ConfigError(f"warmup_ratio must lie in [0, 1), got {self.warmup_ratio}")
        ab = self.ablation
        ab.dropped_relations()
        if not ab.no_graph:
            if not ab.no_gate and self.rgat_hidden != self.hidden:
                raise ConfigError(
                    f"the question gate needs rgat_hidden == hidden ({self.rgat_hidden} vs {self.hidden})"
                )
            if not self.rgat_heads or any(h < 1 for h in self.rgat_heads):
                raise ConfigError(f"rgat_heads must be a non-empty list of positive counts: {self.rgat_heads}")
            for h in self.rgat_heads[:-1]:
                if self.rgat_hidden % h:
                    raise ConfigError(f"rgat_hidden {self.rgat_hidden} is not divisible by {h} heads")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be positive")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("max_steps must be positive when set")
        if self.max_seq_length < 8:
            raise ConfigError("max_seq_length is too small")

    @property
    def node_dim(self) -> int:
        return self.hidden if self.ablation.no_graph else self.rgat_hidden

    def to_json(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "ablation"}
        out["rgat_heads"] = list(self.rgat_heads)
        out["ablation"] = self.ablation.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> RunConfig:
        obj = dict(obj)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        ablation = Ablation.from_json(obj.pop("ablation", {}))
        cfg = cls(**obj, ablation=ablation)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
        return cls.from_json(obj)

    def replace(self, **changes) -> RunConfig:
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg
