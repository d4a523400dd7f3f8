"""Synthetic tree-structured QA task used as a capacity check.

A random recursive tree is grown over ``num_nodes`` nodes, each named by its
own token. Every internal non-root node becomes a question naming it; its
children are the positive answers and a sample of non-descendants are the
negatives. The remaining vocabulary tokens are filler words mixed into the
question and answer texts. Word vectors are random Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Candidate, QaCorpus, Question, Vocab, WordVectorTable


@dataclass
class TreeTask:
    parents: np.ndarray  # parents[i] of node i; -1 for the root
    corpus: QaCorpus
    table: WordVectorTable

    @property
    def vocab(self) -> Vocab:
        return self.table.vocab

    def descendants(self, node: int) -> set:
        children = _children(self.parents)
        out, stack = set(), [node]
        while stack:
            for c in children[stack.pop()]:
                out.add(c)
                stack.append(c)
        return out


def _children(parents) -> list:
    kids = [[] for _ in parents]
    for node, parent in enumerate(parents):
        if parent >= 0:
            kids[parent].append(node)
    return kids


def _pick(words, k, rng) -> list:
    return [words[i] for i in rng.integers(len(words), size=k)]


def make_tree_task(
    num_nodes: int = 200,
    vocab_size: int = 500,
    vector_dim: int = 300,
    vector_scale: float = 0.3,
    negatives_per_question: int = 5,
    question_fillers: int = 2,
    answer_fillers: int = 1,
    seed: int = 0,
) -> TreeTask:
    """Build the tree task.

    Parameters
    ----------
    num_nodes : int
        Tree size; node ``i > 0`` attaches to a uniform earlier node.
    vocab_size : int
        Total distinct tokens: one per node plus ``vocab_size - num_nodes`` fillers.
    vector_dim, vector_scale : int, float
        Word vectors are ``N(0, vector_scale**2 / vector_dim)`` per component,
        so each has norm close to ``vector_scale``.
    negatives_per_question : int
        Non-descendant candidates per question (fewer if not enough exist).
    question_fillers, answer_fillers : int
        Filler tokens added to each question / answer text.
    """
    if vocab_size <= num_nodes:
        raise ValueError("vocabulary must leave room for filler tokens")
    rng = np.random.default_rng(seed)
    parents = np.full(num_nodes, -1, dtype=np.int64)
    for node in range(1, num_nodes):
        parents[node] = rng.integers(node)
    children = _children(parents)

    names = [f"node{i:03d}" for i in range(num_nodes)]
    fillers = [f"word{i:03d}" for i in range(vocab_size - num_nodes)]
    task = TreeTask(parents, QaCorpus(), None)

    questions = []
    for node in range(1, num_nodes):
        if not children[node]:
            continue
        excluded = task.descendants(node) | {node}
        pool = np.array([i for i in range(num_nodes) if i not in excluded])
        take = min(negatives_per_question, pool.size)
        negatives = [int(c) for c in rng.choice(pool, size=take, replace=False)] if take else []

        qtokens = _pick(fillers, question_fillers, rng) + [names[node]]
        cands = [Candidate([names[c]] + _pick(fillers, answer_fillers, rng), 1) for c in children[node]]
        cands += [Candidate([names[c]] + _pick(fillers, answer_fillers, rng), 0) for c in negatives]
        # positives must not sit first: tied scores keep input order when ranked
        cands = [cands[i] for i in rng.permutation(len(cands))]
        questions.append(Question(f"t{node:03d}", qtokens, cands))
    corpus = QaCorpus(questions, "train")

    vocab = Vocab(names + fillers)
    matrix = np.zeros((len(vocab), vector_dim))
    matrix[2:] = rng.normal(0.0, vector_scale / np.sqrt(vector_dim), size=(len(vocab) - 2, vector_dim))
    table = WordVectorTable(vocab, matrix)
    return TreeTask(parents, corpus, table)
