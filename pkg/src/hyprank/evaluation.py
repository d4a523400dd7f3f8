"""Candidate ranking and MAP / MRR / P@1."""

from __future__ import annotations

import json
from fractions import Fraction
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import IndexedCorpus


def rank_order(scores, direction: int = 1) -> np.ndarray:
    """Indices that sort ``scores`` (ascending for ``direction=1``).

    The sort is stable, so tied candidates keep their input order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    return np.argsort(direction * scores, kind="stable")


def rank_candidates(question_ids, candidate_ids, model) -> np.ndarray:
    """Candidate indices ordered best-first under ``model``."""
    return rank_order(model.score_candidates(question_ids, candidate_ids), model.rank_direction)


# Metrics are accumulated as exact rationals and rounded once, so results do
# not depend on summation order.

def _exact_ap(labels) -> Fraction:
    hits = np.flatnonzero(np.asarray(labels) == 1)
    if hits.size == 0:
        return Fraction(0)
    # the j-th positive (0-based) sits at 1-based rank hits[j] + 1
    return sum((Fraction(j + 1, int(r) + 1) for j, r in enumerate(hits)), Fraction(0)) / hits.size


def _exact_rr(labels) -> Fraction:
    hits = np.flatnonzero(np.asarray(labels) == 1)
    return Fraction(1, int(hits[0]) + 1) if hits.size else Fraction(0)


def average_precision(labels) -> float:
    return float(_exact_ap(labels))


def reciprocal_rank(labels) -> float:
    return float(_exact_rr(labels))


def precision_at_1(labels) -> float:
    labels = np.asarray(labels)
    return float(labels[0] == 1) if labels.size else 0.0


@dataclass
class QuestionResult:
    qid: str
    ranked_labels: list
    ap: float
    rr: float


@dataclass
class EvalReport:
    map: float
    mrr: float
    p_at_1: float
    num_questions: int
    per_question: list = field(default_factory=list)

    def metric(self, name: str) -> float:
        key = {"map": "map", "mrr": "mrr", "p@1": "p_at_1", "p_at_1": "p_at_1"}[name]
        return getattr(self, key)

    def summary(self) -> dict:
        return {"map": self.map, "mrr": self.mrr, "p_at_1": self.p_at_1,
                "num_questions": self.num_questions}

    def to_json(self, per_question: bool = False) -> str:
        doc = self.summary()
        if per_question:
            doc["per_question"] = [asdict(r) for r in self.per_question]
        return json.dumps(doc, indent=2)


def report_from_rankings(rankings) -> EvalReport:
    """Aggregate ``(qid, ranked_labels)`` pairs; all-negative questions are skipped."""
    results = []
    ap_sum = rr_sum = Fraction(0)
    p1_sum = 0
    for qid, labels in rankings:
        labels = np.asarray(labels, dtype=np.int64)
        if not np.any(labels == 1):
            continue
        ap, rr = _exact_ap(labels), _exact_rr(labels)
        ap_sum += ap
        rr_sum += rr
        p1_sum += int(labels[0] == 1)
        results.append(QuestionResult(qid, labels.tolist(), float(ap), float(rr)))
    count = len(results)
    if not count:
        return EvalReport(0.0, 0.0, 0.0, 0, [])
    return EvalReport(
        map=float(ap_sum / count),
        mrr=float(rr_sum / count),
        p_at_1=float(Fraction(p1_sum, count)),
        num_questions=count,
        per_question=results,
    )


def evaluate(indexed: IndexedCorpus, model) -> EvalReport:
    """Rank every question's candidates with ``model`` and score the rankings."""
    rankings = []
    for qi, q in enumerate(indexed.corpus.questions):
        labels = indexed.labels[qi]
        if labels.size == 0:
            continue
        order = rank_candidates(indexed.question_ids[qi], indexed.answer_ids[qi], model)
        rankings.append((q.qid, labels[order]))
    return report_from_rankings(rankings)
