"""Command-line entry point: ``lukegraph <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..data import SyntheticConfig, gen_synthetic, parse_dataset, write_dataset
from ..errors import LukeGraphError
from ..gated_rgat import Ablation
from ..graph import build_graph, export_graph, graph_to_json
from .checkpoint import Checkpoint
from .config import RunConfig
from .train import evaluate, predict_prepared, report_json, train
from .model import prepare

log = logging.getLogger("lukegraph")

GRADCHECK_TOLERANCE = 1e-4


def _add_ablation_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("ablations")
    g.add_argument("--no-graph", action="store_true", help="bypass the graph module")
    g.add_argument("--uniform-attention", action="store_true", help="equal weights over each neighborhood")
    g.add_argument("--no-gate", action="store_true", help="skip the question-aware gate")
    g.add_argument("--untyped-relations", action="store_true", help="treat every edge as one relation")
    g.add_argument(
        "--drop-edges",
        action="append",
        choices=["sent", "match", "plc"],
        default=[],
        help="remove one edge type (repeatable)",
    )


def _apply_ablation(cfg: RunConfig, args) -> RunConfig:
    ab = cfg.ablation
    merged = Ablation(
        no_graph=ab.no_graph or args.no_graph,
        uniform_attention=ab.uniform_attention or args.uniform_attention,
        no_gate=ab.no_gate or args.no_gate,
        untyped_relations=ab.untyped_relations or args.untyped_relations,
        drop_edges=sorted(set(ab.drop_edges) | set(args.drop_edges)),
    )
    return cfg.replace(ablation=merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lukegraph", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write the best-dev checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="training log (JSONL); defaults to <out>.log.jsonl")
    p.add_argument("--seed", type=int)
    _add_ablation_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint and write an EM/F1 report")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)

    p = sub.add_parser("predict", help="print one JSON prediction per example")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("build-graph", help="dump the entity graph of every example")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["dot", "json"], default="dot")

    p = sub.add_parser("gradcheck", help="finite-difference check of the full pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-entries", type=int, help="probe at most this many entries per parameter")

    p = sub.add_parser("gen-synthetic", help="write synthetic two-hop train/dev splits")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-train", type=int, default=1000)
    p.add_argument("--n-dev", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--pool-size", type=int, default=SyntheticConfig.pool_size)
    p.add_argument("--sentences", type=int, default=SyntheticConfig.sentences_per_doc)
    p.add_argument("--decoy-chains", type=int, default=SyntheticConfig.decoy_chains)
    return parser


def cmd_train(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    cfg = _apply_ablation(cfg, args)
    result = train(cfg, parse_dataset(args.train), parse_dataset(args.dev))
    result.checkpoint.save(args.out)
    log_path = Path(args.log or f"{args.out}.log.jsonl")
    log_path.write_text(result.log_jsonl(), encoding="utf-8")
    last = [r for r in result.log if r["kind"] == "epoch"]
    best = last[result.best_epoch - 1]
    print(f"best epoch {result.best_epoch}: dev_em={best.get('dev_em')} dev_f1={best.get('dev_f1')}")
    return 0


def cmd_eval(args) -> int:
    report = evaluate(Checkpoint.load(args.ckpt), parse_dataset(args.data))
    Path(args.report).write_text(report_json(report), encoding="utf-8")
    print(f"n={report['n']} em={report['em']:.4f} f1={report['f1']:.4f}")
    return 0


def cmd_predict(args) -> int:
    model = Checkpoint.load(args.ckpt).build_model()
    items = [prepare(ex, model.vocab, model.cfg) for ex in parse_dataset(args.data)]
    for pred in predict_prepared(model, items):
        print(json.dumps({"id": pred.id, "predicted": pred.predicted, "scores": pred.scores}, sort_keys=True))
    return 0


def cmd_build_graph(args) -> int:
    for ex in parse_dataset(args.input):
        graph = build_graph(ex)
        if args.format == "dot":
            sys.stdout.write(export_graph(graph, "dot", name=ex.id))
        else:
            print(json.dumps({"id": ex.id, "graph": graph_to_json(graph)}, sort_keys=True))
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import pipeline_gradcheck

    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    rng = np.random.default_rng(cfg.seed)
    result = pipeline_gradcheck(cfg, max_entries=args.max_entries, rng=rng)
    print(f"max relative error: {result.max_rel_error:.3e} over {result.checked} entries")
    if result.nonfinite:
        print(f"non-finite loss at (parameter, entry) {result.nonfinite[0]}", file=sys.stderr)
    return 0 if result.passes(GRADCHECK_TOLERANCE) else 1


def cmd_gen_synthetic(args) -> int:
    cfg = SyntheticConfig(
        n_train=args.n_train,
        n_dev=args.n_dev,
        pool_size=args.pool_size,
        sentences_per_doc=args.sentences,
        decoy_chains=args.decoy_chains,
    )
    train_set, dev_set = gen_synthetic(cfg, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(train_set, out / "train.jsonl")
    write_dataset(dev_set, out / "dev.jsonl")
    print(f"wrote {len(train_set)} train and {len(dev_set)} dev examples to {out}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "build-graph": cmd_build_graph,
    "gradcheck": cmd_gradcheck,
    "gen-synthetic": cmd_gen_synthetic,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (LukeGraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
