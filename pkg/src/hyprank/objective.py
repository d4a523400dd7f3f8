"""Scoring layer, pairwise hinge loss and the manual backward pass.

With hyperbolic similarity a *lower* score means a better match: the loss
``max(0, s(q, a) + margin - s(q, a'))`` pushes positive pairs below negative
ones. Cosine similarity flips that orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import encode_backward, encode_batch
from .geometry import distance_grad, metric_scale, poincare_distance

HYPERBOLIC = "hyperbolic"
COSINE = "cosine"
SIMILARITIES = (HYPERBOLIC, COSINE)

#: Rank direction per similarity: +1 means ascending scores rank first.
RANK_DIRECTION = {HYPERBOLIC: 1, COSINE: -1}


@dataclass
class ScoreLayer:
    weight: np.ndarray = field(default_factory=lambda: np.array(1.0))
    bias: np.ndarray = field(default_factory=lambda: np.array(0.0))

    def __post_init__(self):
        self.weight = np.array(self.weight, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64)


@dataclass
class LossConfig:
    margin: float = 5.0
    similarity: str = HYPERBOLIC
    riemannian: bool = False

    def __post_init__(self):
        if not self.margin > 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if self.similarity not in SIMILARITIES:
            raise ValueError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")


def cosine_score(q, a):
    """Cosine similarity over the last axis; zero vectors score 0."""
    q = np.asarray(q, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    nq = np.sqrt(np.sum(q * q, axis=-1))
    na = np.sqrt(np.sum(a * a, axis=-1))
    denom = nq * na
    zero = denom == 0.0
    out = np.where(zero, 0.0, np.sum(q * a, axis=-1) / np.where(zero, 1.0, denom))
    return out if np.ndim(out) else float(out)


def cosine_grad(q, a):
    """Gradient of ``cosine_score(q, a)`` w.r.t. ``q``; zero where either vector is zero."""
    q = np.asarray(q, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    nq = np.sqrt(np.sum(q * q, axis=-1, keepdims=True))
    na = np.sqrt(np.sum(a * a, axis=-1, keepdims=True))
    zero = (nq * na) == 0.0
    nq_safe = np.where(zero, 1.0, nq)
    na_safe = np.where(zero, 1.0, na)
    cos = np.sum(q * a, axis=-1, keepdims=True) / (nq_safe * na_safe)
    grad = a / (nq_safe * na_safe) - cos * q / nq_safe**2
    return np.where(zero, 0.0, grad)


def similarity(q, a, kind: str = HYPERBOLIC):
    if kind == HYPERBOLIC:
        return poincare_distance(q, a)
    if kind == COSINE:
        return cosine_score(q, a)
    raise ValueError(f"unknown similarity {kind!r}")


def similarity_grads(q, a, kind: str = HYPERBOLIC):
    """Gradients of the raw similarity w.r.t. both arguments."""
    if kind == HYPERBOLIC:
        return distance_grad(q, a), distance_grad(a, q)
    return cosine_grad(q, a), cosine_grad(a, q)


def score(q, a, layer: ScoreLayer, kind: str = HYPERBOLIC):
    """``w_f * sim(q, a) + b_f``."""
    return layer.weight * similarity(q, a, kind) + layer.bias


def hinge_loss(s_pos, s_neg, margin, kind: str = HYPERBOLIC):
    """Pairwise hinge loss.

    Hyperbolic: ``max(0, s_pos + margin - s_neg)``. Cosine (higher is
    better): ``max(0, margin - s_pos + s_neg)``.
    """
    if kind == HYPERBOLIC:
        return np.maximum(0.0, s_pos + margin - s_neg)
    return np.maximum(0.0, margin - s_pos + s_neg)


@dataclass
class GradientSet:
    """Gradients of the mean batch loss w.r.t. every trainable parameter."""

    weight: np.ndarray
    bias: np.ndarray
    score_weight: np.ndarray
    score_bias: np.ndarray
    #: upstream gradient at each ball point after optional metric scaling,
    #: keyed by ``question``, ``positive``, ``negative``
    point_grads: dict = field(default_factory=dict, repr=False)

    def as_dict(self) -> dict:
        return {
            "weight": self.weight,
            "bias": self.bias,
            "score_weight": self.score_weight,
            "score_bias": self.score_bias,
        }


@dataclass
class TripleForward:
    loss: float
    losses: np.ndarray
    points: dict
    caches: dict
    sim_pos: np.ndarray
    sim_neg: np.ndarray


def triple_forward(batch, model, config: LossConfig, check: bool = False) -> TripleForward:
    """Encode a :class:`~hyprank.data.TripleBatch` and evaluate the mean hinge loss."""
    points, caches = {}, {}
    for role, ids in (("question", batch.question), ("positive", batch.positive), ("negative", batch.negative)):
        points[role], caches[role] = encode_batch(ids, model.table, model.projection, check=check)
    kind = config.similarity
    sim_pos = np.atleast_1d(similarity(points["question"], points["positive"], kind))
    sim_neg = np.atleast_1d(similarity(points["question"], points["negative"], kind))
    w, b = model.scorer.weight, model.scorer.bias
    losses = hinge_loss(w * sim_pos + b, w * sim_neg + b, config.margin, kind)
    loss = float(losses.mean()) if losses.size else 0.0
    return TripleForward(loss, losses, points, caches, sim_pos, sim_neg)


def triple_backward(fwd: TripleForward, model, config: LossConfig) -> GradientSet:
    """Gradients of the mean hinge loss from a cached forward pass.

    With ``config.riemannian`` the Euclidean gradient accumulated at each
    hyperbolic ball point is multiplied by :func:`metric_scale` at that point
    before it flows back into the projection layer.
    """
    if fwd is None:
        raise ValueError("triple_backward needs a cached forward pass")
    kind = config.similarity
    n = fwd.losses.shape[0]
    active = (fwd.losses > 0.0).astype(np.float64)
    if n == 0 or not active.any():
        proj = model.projection
        return GradientSet(np.zeros_like(proj.weight), np.zeros_like(proj.bias),
                           np.array(0.0), np.array(0.0),
                           {r: np.zeros_like(p) for r, p in fwd.points.items()})
    # dL/ds for the positive and negative scores of each triple
    sign = 1.0 if kind == "hyperbolic" else -1.0
    coef = active / n
    d_spos = sign * coef
    d_sneg = -sign * coef

    w = float(model.scorer.weight)
    d_score_weight = np.sum(d_spos * fwd.sim_pos + d_sneg * fwd.sim_neg)
    d_score_bias = np.sum(d_spos + d_sneg)

    q, a, a_neg = fwd.points["question"], fwd.points["positive"], fwd.points["negative"]
    gq_pos, ga_pos = similarity_grads(q, a, kind)
    gq_neg, ga_neg = similarity_grads(q, a_neg, kind)
    point_grads = {
        "question": w * (d_spos[:, None] * gq_pos + d_sneg[:, None] * gq_neg),
        "positive": w * d_spos[:, None] * ga_pos,
        "negative": w * d_sneg[:, None] * ga_neg,
    }
    if config.riemannian and kind == "hyperbolic":
        for role, grad in point_grads.items():
            point_grads[role] = grad * metric_scale(fwd.points[role])[:, None]

    d_weight = np.zeros_like(model.projection.weight)
    d_bias = np.zeros_like(model.projection.bias)
    for role, grad in point_grads.items():
        dw, db = encode_backward(grad, fwd.caches[role])
        d_weight += dw
        d_bias += db
    return GradientSet(d_weight, d_bias, np.array(d_score_weight), np.array(d_score_bias), point_grads)


def batch_loss(batch, model, config: LossConfig) -> float:
    return triple_forward(batch, model, config).loss
