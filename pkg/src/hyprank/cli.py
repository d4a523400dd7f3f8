"""Command-line interface: ``hyprank {train,eval,analyze}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .analysis import (
    export_embeddings,
    qa_norm_histogram,
    word_hierarchy_levels,
    word_norm_histogram,
    write_hierarchy,
    write_histograms,
)
from .checkpoint import load_model, save_checkpoint
from .data import (
    DEFAULT_MAX_A_LEN,
    DEFAULT_MAX_Q_LEN,
    IndexedCorpus,
    Vocab,
    load_qa_tsv,
    load_word_vectors,
)
from .evaluation import evaluate
from .model import HyperQA
from .training import RunConfig, make_rngs, train

log = logging.getLogger("hyprank")

HISTOGRAM_FILE = "norm_histograms.tsv"
HIERARCHY_FILE = "word_levels.tsv"
EMBEDDING_FILE = "embeddings.tsv"
TRAIN_LOG_FILE = "train_log.jsonl"


def _abs(path):
    return str(Path(path).resolve()) if path else None


def cmd_train(config: RunConfig, out_dir=None) -> list:
    """Train, saving a checkpoint whenever the dev metric strictly improves."""
    if not (config.train and config.vectors and config.checkpoint):
        raise ValueError("train needs --train, --vectors and --checkpoint")
    splits = {"train": load_qa_tsv(config.train, "train")}
    for name in ("dev", "test"):
        path = getattr(config, name)
        if path:
            splits[name] = load_qa_tsv(path, name)
    vocab = Vocab.build(*splits.values())
    table = load_word_vectors(config.vectors, vocab)
    train_corpus = splits["train"].with_positives()
    dropped = len(splits["train"]) - len(train_corpus)
    if dropped:
        log.info("dropped %d training questions without a positive answer", dropped)
    if len(train_corpus) == 0:
        raise ValueError(f"{config.train}: no training question has a positive answer")

    def index(corpus):
        return IndexedCorpus(corpus, vocab, config.max_q_len, config.max_a_len)

    train_data = index(train_corpus)
    dev_data = index(splits["dev"]) if "dev" in splits else None
    rngs = make_rngs(config.seed)
    model = HyperQA.init(table, config.proj_dim, rngs["init"], config.similarity)

    snapshot = config.to_dict()
    for key in ("train", "dev", "test", "vectors", "checkpoint"):
        snapshot[key] = _abs(snapshot[key])
    out_dir = Path(out_dir) if out_dir else Path(config.checkpoint).resolve().parent
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / TRAIN_LOG_FILE

    with open(log_path, "w", encoding="utf-8") as log_fh:
        def on_improve(m, entry, report):
            save_checkpoint(config.checkpoint, m, snapshot)
            log.info("epoch %d: checkpoint saved to %s", entry.epoch, config.checkpoint)

        def on_epoch(entry):
            log_fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
            log_fh.flush()

        history = train(model, train_data, config, dev_data, rngs, on_improve=on_improve,
                        on_epoch=on_epoch)
    return history


def cmd_eval(checkpoint, test_path, vectors=None, max_q_len=None, max_a_len=None):
    """Score ``test_path`` with a saved model; returns an :class:`EvalReport`."""
    model, ckpt = load_model(checkpoint, vectors)
    cfg = ckpt.config
    corpus = load_qa_tsv(test_path, "test")
    indexed = IndexedCorpus(corpus, model.vocab, max_q_len or cfg.get("max_q_len", DEFAULT_MAX_Q_LEN),
                            max_a_len or cfg.get("max_a_len", DEFAULT_MAX_A_LEN))
    return evaluate(indexed, model)


def cmd_analyze(checkpoint, corpus_path, out_dir, vectors=None, bin_width=1.0) -> dict:
    """Write the histogram, hierarchy and embedding TSV files; returns their paths."""
    model, ckpt = load_model(checkpoint, vectors)
    corpus = load_qa_tsv(corpus_path, "test")
    indexed = IndexedCorpus(corpus, model.vocab, ckpt.config.get("max_q_len", DEFAULT_MAX_Q_LEN),
                            ckpt.config.get("max_a_len", DEFAULT_MAX_A_LEN))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "histograms": out_dir / HISTOGRAM_FILE,
        "hierarchy": out_dir / HIERARCHY_FILE,
        "embeddings": out_dir / EMBEDDING_FILE,
    }
    q_hist, a_hist = qa_norm_histogram(indexed, model, bin_width)
    write_histograms([q_hist, a_hist, word_norm_histogram(model, bin_width)], paths["histograms"])
    write_hierarchy(word_hierarchy_levels(model.vocab, model, bin_width), paths["hierarchy"])
    export_embeddings(indexed, model, paths["embeddings"])
    return paths


def build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig(seed=0)
    parser = argparse.ArgumentParser(prog="hyprank", description="Hyperbolic QA answer ranking.")
    sub = parser.add_subparsers(dest="command", required=True)

    def paths(p):
        p.add_argument("--train")
        p.add_argument("--dev")
        p.add_argument("--test")
        p.add_argument("--vectors")
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--out-dir")

    tr = sub.add_parser("train", help="train a model")
    paths(tr)
    tr.add_argument("--seed", type=int, required=True)
    tr.add_argument("--lr", type=float, default=defaults.lr)
    tr.add_argument("--batch-size", type=int, default=defaults.batch_size)
    tr.add_argument("--epochs", type=int, default=defaults.epochs)
    tr.add_argument("--proj-dim", type=int, default=defaults.proj_dim)
    tr.add_argument("--margin", type=float, default=defaults.margin)
    tr.add_argument("--l2", type=float, default=defaults.l2)
    tr.add_argument("--neg-samples", type=int, default=defaults.neg_samples)
    tr.add_argument("--max-q-len", type=int, default=defaults.max_q_len)
    tr.add_argument("--max-a-len", type=int, default=defaults.max_a_len)
    tr.add_argument("--similarity", choices=("hyperbolic", "cosine"), default=defaults.similarity)
    tr.add_argument("--select-metric", choices=("map", "mrr", "p@1"), default=defaults.select_metric)
    tr.add_argument("--riemannian", action="store_true",
                    help="scale gradients at ball points by the inverse metric")

    ev = sub.add_parser("eval", help="evaluate a checkpoint on --test")
    paths(ev)

    an = sub.add_parser("analyze", help="write norm histograms, word levels and embeddings")
    paths(an)
    an.add_argument("--bin-width", type=float, default=1.0)
    return parser


def _setup_logging():
    level = os.environ.get("HYPRANK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            config = RunConfig(
                seed=args.seed, train=args.train, dev=args.dev, test=args.test,
                vectors=args.vectors, checkpoint=args.checkpoint, lr=args.lr,
                batch_size=args.batch_size, epochs=args.epochs, proj_dim=args.proj_dim,
                margin=args.margin, l2=args.l2, neg_samples=args.neg_samples,
                max_q_len=args.max_q_len, max_a_len=args.max_a_len, similarity=args.similarity,
                select_metric=args.select_metric, riemannian=args.riemannian,
            )
            history = cmd_train(config, args.out_dir)
            print(json.dumps(history[-1].to_dict(), sort_keys=True))
        elif args.command == "eval":
            if not args.test:
                raise ValueError("eval needs --test")
            print(cmd_eval(args.checkpoint, args.test, args.vectors).to_json())
        else:
            corpus = args.test or args.dev or args.train
            if not (corpus and args.out_dir):
                raise ValueError("analyze needs a corpus (--test, --dev or --train) and --out-dir")
            for path in cmd_analyze(args.checkpoint, corpus, args.out_dir, args.vectors,
                                    args.bin_width).values():
                print(path)
    except (OSError, ValueError, FloatingPointError, RuntimeError) as exc:
        print(f"hyprank: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
