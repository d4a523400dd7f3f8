"""Neural bag-of-words encoder mapping token ids to points of the Poincare ball.

Each word vector goes through a shared ``relu(W z + b)`` projection, the
projected words of a sequence are summed, and the sum is clipped into the
ball. Forward passes return a cache that :func:`encode_backward` consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PAD_ID, WordVectorTable
from .geometry import BALL_EPS, GeometryError, in_ball


@dataclass
class ProjectionLayer:
    weight: np.ndarray  # (d, n)
    bias: np.ndarray  # (d,)

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @classmethod
    def init(cls, n: int, d: int, rng: np.random.Generator) -> "ProjectionLayer":
        """Uniform Glorot weights in ``[-s, s]``, ``s = sqrt(6 / (n + d))``; zero bias."""
        s = np.sqrt(6.0 / (n + d))
        return cls(rng.uniform(-s, s, size=(d, n)), np.zeros(d))


def project_word(z, layer: ProjectionLayer) -> np.ndarray:
    """``relu(W z + b)`` for one word vector (or a stack of them)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != layer.in_dim:
        raise ValueError(f"word vector has dimension {z.shape[-1]}, projection expects {layer.in_dim}")
    return np.maximum(z @ layer.weight.T + layer.bias, 0.0)


@dataclass
class EncodeCache:
    words: np.ndarray  # (B, M, n) looked-up word vectors
    mask: np.ndarray  # (B, M) True where a token contributes
    pre: np.ndarray  # (B, M, d) pre-activations
    summed: np.ndarray  # (B, d) sum before the ball constraint
    norms: np.ndarray  # (B,) norms of ``summed``
    clipped: np.ndarray  # (B,) True where the ball constraint rescaled the sum


def encode_batch(ids, table: WordVectorTable, layer: ProjectionLayer,
                 eps: float = BALL_EPS, check: bool = False):
    """Encode a ``(B, M)`` array of padded token ids.

    Returns
    -------
    points : numpy.ndarray
        ``(B, d)`` ball points.
    cache : EncodeCache
        Forward intermediates for the backward pass.
    """
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ValueError(f"expected a (batch, length) id array, got shape {ids.shape}")
    if table.dim != layer.in_dim:
        raise ValueError(f"word vectors have dimension {table.dim}, projection expects {layer.in_dim}")
    # trailing all-PAD columns contribute nothing; drop them before the lookup
    used = np.flatnonzero(np.any(ids != PAD_ID, axis=0))
    ids = ids[:, : used[-1] + 1] if used.size else ids[:, :0]
    words = table.matrix[ids]
    mask = table.known[ids]
    pre = words @ layer.weight.T + layer.bias
    act = np.maximum(pre, 0.0) * mask[..., None]
    summed = act.sum(axis=1)
    norms = np.sqrt(np.sum(summed * summed, axis=-1))
    limit = 1.0 - eps
    clipped = norms > limit
    scale = np.where(clipped, limit / np.where(clipped, norms, 1.0), 1.0)
    points = summed * scale[:, None]
    over = np.sqrt(np.sum(points * points, axis=-1)) > limit
    if np.any(over):
        points[over] *= 1.0 - 4 * np.finfo(float).eps
    if check and not in_ball(points, eps):
        raise GeometryError("encoded point left the ball")
    return points, EncodeCache(words, mask, pre, summed, norms, clipped)


def encode_sequence(ids, table: WordVectorTable, layer: ProjectionLayer, eps: float = BALL_EPS) -> np.ndarray:
    """Encode one padded id sequence into a single ball point."""
    points, _ = encode_batch(np.asarray(ids)[None, :], table, layer, eps)
    return points[0]


def pre_constraint_sums(ids, table: WordVectorTable, layer: ProjectionLayer) -> np.ndarray:
    """``(B, d)`` NBoW sums before clipping into the ball."""
    _, cache = encode_batch(ids, table, layer)
    return cache.summed


def encode_backward(upstream, cache: EncodeCache, eps: float = BALL_EPS):
    """Backpropagate ``(B, d)`` gradients at the ball points into ``(dW, db)``.

    On clipped rows the constraint ``v -> v (1 - eps) / |v|`` contributes its
    Jacobian ``(1 - eps) / |v| * (I - v v^T / |v|^2)``; unclipped rows pass
    the gradient through unchanged.
    """
    if cache is None:
        raise ValueError("encode_backward needs the cache from a forward pass")
    g = np.array(upstream, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if np.any(cache.clipped):
        rows = cache.clipped
        unit = cache.summed[rows] / cache.norms[rows, None]
        radial = np.sum(g[rows] * unit, axis=-1, keepdims=True)
        g[rows] = (1.0 - eps) / cache.norms[rows, None] * (g[rows] - radial * unit)
    # relu passes gradient where the pre-activation is non-negative
    g_pre = g[:, None, :] * ((cache.pre >= 0.0) & cache.mask[..., None])
    d_weight = np.tensordot(g_pre, cache.words, axes=([0, 1], [0, 1]))
    d_bias = g_pre.sum(axis=(0, 1))
    return d_weight, d_bias
