"""Independent reference implementations shared by the unit and acceptance tests."""

from fractions import Fraction

import numpy as np

from hyprank.data import TripleBatch, Vocab, WordVectorTable
from hyprank.encoder import ProjectionLayer
from hyprank.model import HyperQA
from hyprank.objective import ScoreLayer, triple_forward


def tiny_model(seed, n=5, d=4, vocab_words=8, scale=0.2, w_scale=0.3, similarity="hyperbolic"):
    rng = np.random.default_rng(seed)
    matrix = np.zeros((vocab_words + 2, n))
    matrix[2:] = rng.normal(scale=scale, size=(vocab_words, n))
    table = WordVectorTable(Vocab([f"w{i}" for i in range(vocab_words)]), matrix)
    projection = ProjectionLayer(rng.normal(scale=w_scale, size=(d, n)), rng.normal(scale=0.05, size=d))
    scorer = ScoreLayer(rng.uniform(0.5, 1.5), rng.normal())
    return rng, HyperQA(table, projection, scorer, similarity)


def random_triples(rng, model, count, length=3):
    """Triples of ``length`` in-vocabulary tokens (no padding)."""
    high = len(model.vocab)

    def ids():
        return rng.integers(2, high, size=(count, length))

    return TripleBatch(ids(), ids(), ids())


def fd_gradients(model, batch, config, h=1e-6):
    """Central differences of the mean batch loss w.r.t. every trainable entry."""
    out = {}
    for name, arr in model.parameters().items():
        flat = arr.reshape(-1)
        grad = np.zeros(flat.size)
        for i in range(flat.size):
            old = float(flat[i])
            flat[i] = old + h
            up = triple_forward(batch, model, config).loss
            flat[i] = old - h
            down = triple_forward(batch, model, config).loss
            flat[i] = old
            grad[i] = (up - down) / (2 * h)
        out[name] = grad.reshape(arr.shape)
    return out


def entrywise_relative_error(analytic, numeric, floor=1e-8):
    """Max over entries of ``|a - n| / max(|a|, |n|)``; pairs both below ``floor`` count as equal."""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = np.maximum(np.abs(a), np.abs(n))
    err = np.where(scale < floor, 0.0, np.abs(a - n) / np.where(scale < floor, 1.0, scale))
    return float(err.max()) if err.size else 0.0


def brute_force_metrics(labels):
    """Exact AP, RR and P@1 from their textbook definitions for a best-first label list."""
    labels = list(labels)
    relevant = sum(labels)
    precisions = []
    for k in range(1, len(labels) + 1):
        if labels[k - 1] == 1:
            precisions.append(Fraction(sum(labels[:k]), k))
    ap = sum(precisions, Fraction(0)) / relevant
    rr = Fraction(0)
    for k, lab in enumerate(labels, start=1):
        if lab == 1:
            rr = Fraction(1, k)
            break
    return ap, rr, Fraction(int(labels[0] == 1))


def brute_force_report(scores_per_question, labels_per_question, direction):
    """MAP, MRR and P@1 by sorting each question's candidates with a plain comparison sort.

    Ties keep input order; questions without a positive are skipped.
    """
    totals = [Fraction(0)] * 3
    count = 0
    for scores, labels in zip(scores_per_question, labels_per_question):
        if 1 not in list(labels):
            continue
        order = sorted(range(len(scores)), key=lambda i: (direction * scores[i], i))
        for k, value in enumerate(brute_force_metrics([labels[i] for i in order])):
            totals[k] += value
        count += 1
    if count == 0:
        return 0.0, 0.0, 0.0, 0
    return tuple(float(t / count) for t in totals) + (count,)
