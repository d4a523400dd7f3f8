"""Training configuration and the epoch loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

import numpy as np

from .data import (
    DEFAULT_MAX_A_LEN,
    DEFAULT_MAX_Q_LEN,
    IndexedCorpus,
    epoch_triples,
    iter_batches,
)
from .evaluation import EvalReport, evaluate
from .geometry import in_ball
from .objective import SIMILARITIES, LossConfig, triple_backward, triple_forward
from .optim import AdaGrad, DivergenceError

log = logging.getLogger(__name__)

SELECT_METRICS = ("map", "mrr", "p@1")


@dataclass
class RunConfig:
    """Paths and hyperparameters for one training run."""

    seed: int
    train: Optional[str] = None
    dev: Optional[str] = None
    test: Optional[str] = None
    vectors: Optional[str] = None
    checkpoint: Optional[str] = None
    lr: float = 0.05
    batch_size: int = 100
    epochs: int = 25
    proj_dim: int = 300
    margin: float = 5.0
    l2: float = 1e-5
    neg_samples: int = 4
    max_q_len: int = DEFAULT_MAX_Q_LEN
    max_a_len: int = DEFAULT_MAX_A_LEN
    similarity: str = "hyperbolic"
    select_metric: str = "map"
    riemannian: bool = False

    def __post_init__(self):
        checks = [
            (isinstance(self.seed, (int, np.integer)), "seed must be an integer"),
            (self.lr > 0, "lr must be positive"),
            (self.batch_size >= 1, "batch size must be at least 1"),
            (self.epochs >= 1, "epochs must be at least 1"),
            (self.proj_dim >= 1, "projection dimension must be at least 1"),
            (self.margin > 0, "margin must be positive"),
            (self.l2 >= 0, "l2 must be non-negative"),
            (2 <= self.neg_samples <= 8, "negative samples must be between 2 and 8"),
            (self.max_q_len >= 1 and self.max_a_len >= 1, "sequence caps must be at least 1"),
            (self.similarity in SIMILARITIES, f"similarity must be one of {SIMILARITIES}"),
            (self.select_metric in SELECT_METRICS, f"select metric must be one of {SELECT_METRICS}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def loss_config(self) -> LossConfig:
        return LossConfig(self.margin, self.similarity, self.riemannian)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})


def make_rngs(seed: int) -> dict:
    """Independent generators for initialisation, negative sampling and batch order."""
    init, sample, shuffle = np.random.SeedSequence(seed).spawn(3)
    return {
        "init": np.random.default_rng(init),
        "sample": np.random.default_rng(sample),
        "shuffle": np.random.default_rng(shuffle),
    }


@dataclass
class EpochLog:
    epoch: int
    loss: float
    seconds: float
    dev: Optional[dict] = None
    improved: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _check_params(model) -> None:
    for name, arr in model.parameters().items():
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"parameter {name!r} became non-finite")


def train(
    model,
    train_data: IndexedCorpus,
    config: RunConfig,
    dev_data: Optional[IndexedCorpus] = None,
    rngs: Optional[dict] = None,
    on_improve: Optional[Callable] = None,
    on_batch: Optional[Callable] = None,
    on_epoch: Optional[Callable] = None,
    debug: bool = False,
) -> list[EpochLog]:
    """Train ``model`` in place.

    After every epoch the dev split (when given) is evaluated and
    ``on_improve(model, epoch_log, report)`` fires whenever the selection
    metric strictly improves. Without a dev split every epoch counts as an
    improvement. ``on_epoch(epoch_log)`` fires after every epoch. With
    ``debug`` every encoded point is checked against the ball bound and
    every parameter for finiteness.
    """
    rngs = rngs or make_rngs(config.seed)
    if len(train_data) == 0:
        raise ValueError("training split has no questions with a positive answer")
    loss_cfg = config.loss_config()
    optimizer = AdaGrad(model.parameters(), lr=config.lr, l2=config.l2, decay=("weight",))
    best = -math.inf
    history = []
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        triples = epoch_triples(train_data, config.neg_samples, rngs["sample"])
        total, count = 0.0, 0
        for step, batch in enumerate(iter_batches(triples, config.batch_size, rngs["shuffle"])):
            fwd = triple_forward(batch, model, loss_cfg, check=debug)
            if not math.isfinite(fwd.loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {step}: "
                    f"|W|={np.linalg.norm(model.projection.weight):.4g}, "
                    f"w_f={float(model.scorer.weight):.4g}"
                )
            if on_batch is not None:
                on_batch(fwd)
            grads = triple_backward(fwd, model, loss_cfg)
            optimizer.step(grads.as_dict())
            if debug:
                _check_params(model)
            total += fwd.loss * len(batch)
            count += len(batch)
        entry = EpochLog(epoch, total / max(count, 1), 0.0)
        report: Optional[EvalReport] = None
        if dev_data is not None:
            report = evaluate(dev_data, model)
            entry.dev = report.summary()
            metric = report.metric(config.select_metric)
        else:
            metric = float(epoch)
        entry.improved = metric > best
        if entry.improved:
            best = metric
        entry.seconds = time.perf_counter() - start
        if entry.improved and on_improve is not None:
            on_improve(model, entry, report)
        log.info(
            "epoch %d loss %.5f dev %s %.2fs%s", epoch, entry.loss,
            entry.dev, entry.seconds, " *" if entry.improved else "",
        )
        history.append(entry)
        if on_epoch is not None:
            on_epoch(entry)
    return history


def assert_ball_points(fwd) -> None:
    """Raise ``AssertionError`` if any encoded point of ``fwd`` leaves the ball."""
    for role, pts in fwd.points.items():
        assert in_ball(pts), f"{role} point outside the ball"
