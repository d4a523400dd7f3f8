"""Norm histograms, word hierarchy levels and embedding export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import PAD_ID, UNK_ID, IndexedCorpus, tokenize
from .encoder import encode_batch, project_word

POPULATIONS = ("question", "answer", "word")


@dataclass
class NormHistogram:
    """Counts of norms in bins ``[k * bin_width, (k + 1) * bin_width)``.

    Bins are contiguous from 0 up to the bin holding the largest norm; an
    empty population has no bins.
    """

    bin_width: float
    population: str
    bins: list = field(default_factory=list)  # [(lower, count)]

    @classmethod
    def from_norms(cls, norms, bin_width: float, population: str) -> "NormHistogram":
        if not bin_width > 0:
            raise ValueError(f"bin width must be positive, got {bin_width}")
        if population not in POPULATIONS:
            raise ValueError(f"population must be one of {POPULATIONS}, got {population!r}")
        norms = np.asarray(norms, dtype=np.float64).ravel()
        if norms.size == 0:
            return cls(bin_width, population, [])
        idx = np.floor(norms / bin_width).astype(np.int64)
        counts = np.bincount(idx)
        return cls(bin_width, population, [(k * bin_width, int(c)) for k, c in enumerate(counts)])

    @property
    def total(self) -> int:
        return sum(c for _, c in self.bins)

    def as_dict(self) -> dict:
        return {lower: count for lower, count in self.bins}


def _all_answer_ids(indexed: IndexedCorpus) -> np.ndarray:
    if not indexed.answer_ids:
        return np.zeros((0, indexed.max_a_len), dtype=np.int64)
    return np.concatenate(indexed.answer_ids, axis=0)


def _pre_norms(ids, model) -> np.ndarray:
    if ids.shape[0] == 0:
        return np.zeros(0)
    _, cache = encode_batch(ids, model.table, model.projection)
    return cache.norms


def qa_norm_histogram(indexed: IndexedCorpus, model, bin_width: float = 1.0):
    """Histograms of pre-constraint NBoW norms for all questions and all answers.

    Returns
    -------
    (NormHistogram, NormHistogram)
        Question and answer histograms.
    """
    q_norms = _pre_norms(indexed.question_ids, model)
    a_norms = _pre_norms(_all_answer_ids(indexed), model)
    return (
        NormHistogram.from_norms(q_norms, bin_width, "question"),
        NormHistogram.from_norms(a_norms, bin_width, "answer"),
    )


def level_of(norm: float, bin_width: float = 1.0) -> int:
    """Hierarchy level ``floor(norm / bin_width) + 1``; level 1 is nearest the origin."""
    return int(math.floor(norm / bin_width)) + 1


@dataclass
class WordLevel:
    word: str
    norm: float
    level: int


def word_norms(model, words: Sequence[str]) -> np.ndarray:
    """Norms of ``relu(W z + b)`` for each word; words without a vector use ``z = 0``."""
    vocab = model.vocab
    ids = np.array([vocab.stoi.get(w, UNK_ID) for w in words], dtype=np.int64)
    z = model.table.matrix[ids] if ids.size else np.zeros((0, model.table.dim))
    return np.linalg.norm(project_word(z, model.projection), axis=-1)


def word_hierarchy_levels(vocab, model, bin_width: float = 1.0, words=None) -> list[WordLevel]:
    """Level of every vocabulary word (PAD and UNK excluded), or of ``words`` if given."""
    if words is None:
        words = [w for i, w in enumerate(vocab.itos) if i not in (PAD_ID, UNK_ID)]
    norms = word_norms(model, words)
    return [WordLevel(w, float(n), level_of(n, bin_width)) for w, n in zip(words, norms)]


@dataclass
class PairAnnotation:
    question: list[WordLevel]
    answer: list[WordLevel]

    def render(self) -> str:
        def line(items):
            return " ".join(f"{w.word}/H{w.level}" for w in items)

        return f"Q: {line(self.question)}\nA: {line(self.answer)}"


def annotate_pair(question: str, answer: str, model, bin_width: float = 1.0) -> PairAnnotation:
    """Tag each token of a question/answer pair with its hierarchy level."""
    q, a = tokenize(question), tokenize(answer)
    return PairAnnotation(
        word_hierarchy_levels(model.vocab, model, bin_width, q),
        word_hierarchy_levels(model.vocab, model, bin_width, a),
    )


def word_norm_histogram(model, bin_width: float = 1.0) -> NormHistogram:
    """Histogram of projected norms over unique vocabulary words that have a vector."""
    vocab = model.vocab
    words = [vocab.itos[i] for i in np.flatnonzero(model.table.known)]
    return NormHistogram.from_norms(word_norms(model, words), bin_width, "word")


def export_embeddings(indexed: IndexedCorpus, model, path) -> int:
    """Write ``qid, role, coordinates`` rows of the ball points; returns the row count.

    Questions are followed by their answers; coordinates use ``repr`` so the
    file is byte-identical across runs and round-trips exactly.
    """
    rows = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for qi, q in enumerate(indexed.corpus.questions):
            q_point = model.encode(indexed.question_ids[qi])[0]
            fh.write(_row(q.qid, "question", q_point))
            rows += 1
            if indexed.answer_ids[qi].shape[0]:
                for point in model.encode(indexed.answer_ids[qi]):
                    fh.write(_row(q.qid, "answer", point))
                    rows += 1
    return rows


def _row(qid: str, role: str, point) -> str:
    return "\t".join([qid, role] + [repr(float(x)) for x in point]) + "\n"


def write_histograms(histograms: Sequence[NormHistogram], path) -> None:
    """``population TAB bin_lower TAB count`` rows for each histogram."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("population\tbin_lower\tcount\n")
        for hist in histograms:
            for lower, count in hist.bins:
                fh.write(f"{hist.population}\t{lower!r}\t{count}\n")


def write_hierarchy(levels: Sequence[WordLevel], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word\tnorm\tlevel\n")
        for item in levels:
            fh.write(f"{item.word}\t{item.norm!r}\t{item.level}\n")
