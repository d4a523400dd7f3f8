"""AdaGrad with optional L2 weight decay on selected parameters."""

from __future__ import annotations

import numpy as np

ADAGRAD_EPS = 1e-8


class DivergenceError(FloatingPointError):
    """A non-finite gradient or loss appeared during training."""


def adagrad_step(param, grad, acc, lr, eps=ADAGRAD_EPS, l2=0.0):
    """One AdaGrad update; returns the new ``(param, acc)``.

    ``g = grad + l2 * param``, ``acc += g**2``, ``param -= lr * g / sqrt(acc + eps)``.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite gradient passed to AdaGrad")
    g = grad + l2 * param if l2 else grad
    acc = acc + g * g
    return param - lr * g / np.sqrt(acc + eps), acc


class AdaGrad:
    """AdaGrad over a dict of named numpy parameters, updated in place.

    Parameters
    ----------
    params : dict of str -> numpy.ndarray
        Arrays to optimise; they are modified in place by :meth:`step`.
    lr : float
        Learning rate.
    l2 : float
        Weight-decay coefficient, applied only to names in ``decay``.
    decay : iterable of str
        Parameter names that receive weight decay.
    """

    def __init__(self, params, lr=0.05, l2=0.0, decay=("weight",), eps=ADAGRAD_EPS):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        if l2 < 0:
            raise ValueError(f"l2 must be non-negative, got {l2}")
        self.params = params
        self.lr = lr
        self.l2 = l2
        self.eps = eps
        self.decay = frozenset(decay)
        self.state = {name: np.zeros_like(p, dtype=np.float64) for name, p in params.items()}

    def step(self, grads) -> None:
        for name, grad in grads.items():
            if not np.all(np.isfinite(grad)):
                raise DivergenceError(f"non-finite gradient for parameter {name!r}")
        for name, grad in grads.items():
            param = self.params[name]
            l2 = self.l2 if name in self.decay else 0.0
            new, self.state[name] = adagrad_step(param, grad, self.state[name], self.lr, self.eps, l2)
            param[...] = new
