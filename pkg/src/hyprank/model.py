"""The ranking model: frozen word vectors, shared projection and score layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Vocab, WordVectorTable
from .encoder import ProjectionLayer, encode_batch
from .objective import HYPERBOLIC, RANK_DIRECTION, SIMILARITIES, ScoreLayer, score


@dataclass
class HyperQA:
    table: WordVectorTable
    projection: ProjectionLayer
    scorer: ScoreLayer
    similarity: str = HYPERBOLIC

    def __post_init__(self):
        if self.similarity not in SIMILARITIES:
            raise ValueError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")
        if self.table.dim != self.projection.in_dim:
            raise ValueError(
                f"word vectors have dimension {self.table.dim}, projection expects {self.projection.in_dim}"
            )

    @classmethod
    def init(cls, table: WordVectorTable, proj_dim: int, rng: np.random.Generator,
             similarity: str = HYPERBOLIC) -> "HyperQA":
        return cls(table, ProjectionLayer.init(table.dim, proj_dim, rng), ScoreLayer(), similarity)

    @property
    def vocab(self) -> Vocab:
        return self.table.vocab

    @property
    def rank_direction(self) -> int:
        return RANK_DIRECTION[self.similarity]

    def parameters(self) -> dict:
        """Trainable arrays by name; the optimiser updates them in place."""
        return {
            "weight": self.projection.weight,
            "bias": self.projection.bias,
            "score_weight": self.scorer.weight,
            "score_bias": self.scorer.bias,
        }

    def encode(self, ids) -> np.ndarray:
        points, _ = encode_batch(np.atleast_2d(ids), self.table, self.projection)
        return points

    def score_pairs(self, q_ids, a_ids) -> np.ndarray:
        """Scores for row-aligned question and answer id arrays."""
        return np.atleast_1d(score(self.encode(q_ids), self.encode(a_ids), self.scorer, self.similarity))

    def score_candidates(self, q_ids, cand_ids) -> np.ndarray:
        """Scores of every candidate row in ``cand_ids`` against one question."""
        cand_ids = np.atleast_2d(cand_ids)
        if cand_ids.shape[0] == 0:
            return np.zeros(0)
        q = self.encode(q_ids)
        return np.atleast_1d(score(q, self.encode(cand_ids), self.scorer, self.similarity))

    def copy(self) -> "HyperQA":
        return HyperQA(
            self.table,
            ProjectionLayer(self.projection.weight.copy(), self.projection.bias.copy()),
            ScoreLayer(self.scorer.weight.copy(), self.scorer.bias.copy()),
            self.similarity,
        )

    def rounded(self) -> "HyperQA":
        """Copy with every trainable parameter rounded to 32-bit precision."""
        out = self.copy()
        for arr in out.parameters().values():
            arr[...] = arr.astype(np.float32).astype(np.float64)
        return out

