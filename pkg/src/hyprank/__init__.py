"""Answer ranking with neural bag-of-words encoders on the Poincare ball."""

from .analysis import NormHistogram, annotate_pair, export_embeddings, qa_norm_histogram, word_hierarchy_levels
from .checkpoint import CheckpointError, load_checkpoint, load_model, save_checkpoint
from .data import IndexedCorpus, QaCorpus, Vocab, WordVectorTable, load_qa_tsv, load_word_vectors
from .evaluation import EvalReport, evaluate
from .geometry import distance_grad, metric_scale, poincare_distance, project_into_ball
from .model import HyperQA
from .objective import LossConfig
from .optim import AdaGrad
from .training import RunConfig, train

__version__ = "0.1.0"

__all__ = [
    "AdaGrad",
    "CheckpointError",
    "EvalReport",
    "HyperQA",
    "IndexedCorpus",
    "LossConfig",
    "NormHistogram",
    "QaCorpus",
    "RunConfig",
    "Vocab",
    "WordVectorTable",
    "annotate_pair",
    "distance_grad",
    "evaluate",
    "export_embeddings",
    "load_checkpoint",
    "load_model",
    "load_qa_tsv",
    "load_word_vectors",
    "metric_scale",
    "poincare_distance",
    "project_into_ball",
    "qa_norm_histogram",
    "save_checkpoint",
    "train",
    "word_hierarchy_levels",
]
