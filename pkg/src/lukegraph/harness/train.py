"""Training, evaluation and prediction loops.

Training is single-threaded and fully determined by (config, data): the seed
drives parameter initialization, example order and dropout.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..data import Example, Vocab, build_vocab
from ..errors import ConfigError, TrainingError
from ..head import Prediction, candidate_scores, em_f1, evaluation_report, select_answer
from ..numerics import OptimizerState, adamw_step, backward, no_grad
from .checkpoint import Checkpoint
from .config import RunConfig
from .model import LukeGraphModel, Prepared, prepare

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    log: list[dict] = field(default_factory=list)
    best_epoch: int = 0

    def log_jsonl(self) -> str:
        return "".join(json.dumps(row, sort_keys=True) + "\n" for row in self.log)


def no_decay_names(model: LukeGraphModel) -> frozenset[str]:
    """Biases and layer-norm parameters are exempt from weight decay."""
    return frozenset(
        name
        for name, _ in model.named_parameters()
        if name.endswith(".bias") or "_norm." in name
    )


def predict_prepared(model: LukeGraphModel, items: Sequence[Prepared]) -> list[Prediction]:
    preds = []
    with no_grad():
        for item in items:
            cmap = item.inputs.candidate_map
            if not cmap:
                predicted, logits, scores = "", [], {}
            else:
                out = model.logits(item)
                logits = [float(v) for v in out.data]
                scores = candidate_scores(out, cmap)
                predicted = select_answer(out, cmap)
            em, f1 = em_f1(predicted, item.example.gold_answers)
            preds.append(
                Prediction(item.example.id, logits, scores, predicted, list(item.example.gold_answers), em, f1)
            )
    return preds


def evaluate_model(model: LukeGraphModel, dataset: Sequence[Example]) -> dict:
    items = [prepare(ex, model.vocab, model.cfg) for ex in dataset]
    return evaluation_report(predict_prepared(model, items))


def evaluate(checkpoint: Checkpoint, dataset: Sequence[Example]) -> dict:
    return evaluate_model(checkpoint.build_model(), dataset)


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def train(
    config: RunConfig,
    train_set: Sequence[Example],
    dev_set: Sequence[Example] = (),
    vocab: Vocab | None = None,
) -> TrainResult:
    config.validate()
    if not train_set:
        raise ConfigError("training set is empty")
    vocab = vocab or build_vocab(train_set, config.min_freq)
    model = LukeGraphModel(config, vocab)
    params = dict(model.named_parameters())
    no_decay = no_decay_names(model)

    train_items = [prepare(ex, vocab, config) for ex in train_set]
    train_items = [it for it in train_items if it.graph.num_mentions > 0]
    if not train_items:
        raise ConfigError("no training example has a candidate mention")
    dev_items = [prepare(ex, vocab, config) for ex in dev_set]

    steps_per_epoch = math.ceil(len(train_items) / config.batch_size)
    total_steps = config.max_steps or steps_per_epoch * config.epochs
    epochs = math.ceil(total_steps / steps_per_epoch)
    state = OptimizerState(
        lr=config.lr,
        total_steps=total_steps,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
        weight_decay=config.weight_decay,
        warmup_ratio=config.warmup_ratio,
    )
    order_rng = random.Random(config.seed)
    dropout_rng = np.random.default_rng(config.seed + 1) if config.dropout > 0 else None

    rows: list[dict] = []
    best = None
    best_key = None
    best_epoch = 0
    step = 0
    for epoch in range(1, epochs + 1):
        order = list(range(len(train_items)))
        order_rng.shuffle(order)
        epoch_losses = []
        for b in range(0, len(order), config.batch_size):
            if step >= total_steps:
                break
            batch = [train_items[i] for i in order[b : b + config.batch_size]]
            for p in params.values():
                p.grad = None
            batch_loss = 0.0
            for item in batch:
                loss = model.loss(item, dropout_rng) * (1.0 / len(batch))
                batch_loss += float(loss.data)
                backward(loss)
            if not math.isfinite(batch_loss):
                raise TrainingError(f"non-finite loss at step {step}")
            lr = adamw_step(
                {n: p.data for n, p in params.items()},
                {n: p.grad for n, p in params.items() if p.grad is not None},
                state,
                no_decay,
            )
            rows.append({"kind": "step", "step": step, "epoch": epoch, "loss": batch_loss, "lr": lr})
            epoch_losses.append(batch_loss)
            step += 1

        row = {"kind": "epoch", "epoch": epoch, "step": step, "train_loss": float(np.mean(epoch_losses))}
        if dev_items:
            report = evaluation_report(predict_prepared(model, dev_items))
            row.update(dev_em=report["em"], dev_f1=report["f1"])
            key = (report["f1"], report["em"])
        else:
            key = None  # without a dev set the latest epoch wins
        rows.append(row)
        log.info("epoch %d: %s", epoch, row)
        if key is None or best_key is None or key > best_key:
            best_key = key
            best = Checkpoint.from_model(model)
            best_epoch = epoch
    return TrainResult(best, rows, best_epoch)
