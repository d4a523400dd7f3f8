"""Poincare-ball geometry: distance, its gradient, metric scaling and retraction.

All functions accept a single point of shape ``(d,)`` or a batch of points of
shape ``(..., d)``; reductions run over the last axis.
"""

import numpy as np

#: Points are kept at Euclidean norm <= 1 - BALL_EPS.
BALL_EPS = 1e-5

#: arcosh arguments within this distance below 1 are treated as 1, and
#: distance arguments with ``gamma - 1`` below it count as coincident points.
GAMMA_TOL = 1e-12


class GeometryError(ValueError):
    """Raised for inputs outside the domain of a ball operation."""


def _sqnorm(x):
    return np.sum(x * x, axis=-1)


def arcosh(x):
    """Inverse hyperbolic cosine, ``ln(x + sqrt(x^2 - 1))``.

    Inputs in ``[1 - GAMMA_TOL, 1)`` are clamped to 1; anything smaller raises
    :class:`GeometryError`.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 1.0 - GAMMA_TOL) or np.any(np.isnan(x)):
        raise GeometryError(f"arcosh undefined below 1: min input {np.min(x)!r}")
    x = np.maximum(x, 1.0)
    out = np.log(x + np.sqrt(x * x - 1.0))
    return out if out.ndim else float(out)


def _arcosh_1p(t):
    # arcosh(1 + t) without cancellation for small t >= 0
    return np.log1p(t + np.sqrt(t * (t + 2.0)))


def _distance_excess(q, a):
    """Return ``gamma - 1 = 2|q-a|^2 / ((1-|q|^2)(1-|a|^2))``.

    Written so that swapping ``q`` and ``a`` yields bit-identical results.
    """
    diff = q - a
    denom = (1.0 - _sqnorm(q)) * (1.0 - _sqnorm(a))
    return 2.0 * _sqnorm(diff) / denom


def poincare_distance(q, a):
    """Hyperbolic distance between points of the unit ball.

    Parameters
    ----------
    q, a : numpy.ndarray
        Points (or broadcastable batches of points) with norm < 1.

    Returns
    -------
    float or numpy.ndarray
        ``arcosh(1 + 2|q-a|^2 / ((1-|q|^2)(1-|a|^2)))``, one value per pair.
    """
    q = np.asarray(q, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    t = np.maximum(_distance_excess(q, a), 0.0)
    out = _arcosh_1p(t)
    return out if np.ndim(out) else float(out)


def distance_grad(theta, x):
    """Partial derivative of ``poincare_distance(theta, x)`` w.r.t. ``theta``.

    The gradient w.r.t. the second argument is ``distance_grad(x, theta)``.
    Coincident points (``gamma - 1 < GAMMA_TOL``) get a zero gradient.
    """
    theta = np.asarray(theta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    theta, x = np.broadcast_arrays(theta, x)
    alpha = 1.0 - _sqnorm(theta)
    beta = 1.0 - _sqnorm(x)
    t = 2.0 * _sqnorm(theta - x) / (alpha * beta)
    coincident = t < GAMMA_TOL
    # sqrt(gamma^2 - 1) == sqrt(t (t + 2)); guard the coincident rows before dividing
    root = np.sqrt(np.where(coincident, 1.0, t * (t + 2.0)))
    coef = 4.0 / (beta * root)
    theta_coef = (_sqnorm(x) - 2.0 * np.sum(theta * x, axis=-1) + 1.0) / alpha**2
    grad = coef[..., None] * (theta_coef[..., None] * theta - x / alpha[..., None])
    return np.where(coincident[..., None], 0.0, grad)


def metric_scale(theta):
    """Inverse conformal factor ``(1 - |theta|^2)^2 / 4``.

    Multiplying a Euclidean gradient at ``theta`` by this value gives the
    Riemannian gradient of the Poincare ball.
    """
    theta = np.asarray(theta, dtype=np.float64)
    out = (1.0 - _sqnorm(theta)) ** 2 / 4.0
    return out if np.ndim(out) else float(out)


def conformal_factor(theta):
    """Squared conformal coefficient ``(2 / (1 - |theta|^2))^2`` of the ball metric."""
    theta = np.asarray(theta, dtype=np.float64)
    out = (2.0 / (1.0 - _sqnorm(theta))) ** 2
    return out if np.ndim(out) else float(out)


def project_into_ball(v, eps=BALL_EPS):
    """Clip ``v`` to norm ``1 - eps``, keeping its direction.

    Vectors already inside the clipped ball are returned unchanged.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise GeometryError("cannot project a non-finite vector into the ball")
    if v.ndim == 0:
        raise GeometryError("expected a vector, got a scalar")
    limit = 1.0 - eps
    norm = np.sqrt(_sqnorm(v))
    over = norm > limit
    scale = np.where(over, limit / np.where(over, norm, 1.0), 1.0)
    out = v * scale[..., None]
    # rounding can leave a clipped row one ulp outside the limit
    still_over = np.sqrt(_sqnorm(out)) > limit
    if np.any(still_over):
        out = np.where(still_over[..., None], out * (1.0 - 4 * np.finfo(float).eps), out)
    return out


def in_ball(v, eps=BALL_EPS):
    """True when every point in ``v`` satisfies ``|v| <= 1 - eps`` and is finite."""
    v = np.asarray(v, dtype=np.float64)
    return bool(np.all(np.isfinite(v)) and np.all(np.sqrt(_sqnorm(v)) <= 1.0 - eps))
