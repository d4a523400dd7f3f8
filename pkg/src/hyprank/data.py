"""Corpus ingestion, vocabulary, pretrained vectors, negative sampling, batching."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

PAD = "<pad>"
UNK = "<unk>"
PAD_ID = 0
UNK_ID = 1

DEFAULT_MAX_Q_LEN = 25
DEFAULT_MAX_A_LEN = 50


class CorpusFormatError(ValueError):
    """A corpus or vector file does not match its expected layout."""


class SamplingError(RuntimeError):
    """Negative sampling cannot produce a valid draw."""


def tokenize(text: str) -> list[str]:
    return text.lower().split()


@dataclass
class Candidate:
    tokens: list[str]
    label: int


@dataclass
class Question:
    qid: str
    tokens: list[str]
    candidates: list[Candidate] = field(default_factory=list)

    @property
    def num_positive(self) -> int:
        return sum(c.label for c in self.candidates)


class QaCorpus:
    """Questions with labelled candidate answers for one split."""

    def __init__(self, questions: Sequence[Question] = (), split: str = "train"):
        if split not in ("train", "dev", "test"):
            raise ValueError(f"unknown split {split!r}")
        self.questions = list(questions)
        self.split = split
        seen = set()
        for q in self.questions:
            if q.qid in seen:
                raise CorpusFormatError(f"duplicate qid {q.qid!r} in {split} split")
            seen.add(q.qid)

    def __len__(self) -> int:
        return len(self.questions)

    def __iter__(self):
        return iter(self.questions)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QaCorpus)
            and self.split == other.split
            and self.questions == other.questions
        )

    def tokens(self) -> Iterable[str]:
        for q in self.questions:
            yield from q.tokens
            for c in q.candidates:
                yield from c.tokens

    def with_positives(self) -> "QaCorpus":
        """Copy of the corpus keeping only questions with at least one positive."""
        return QaCorpus([q for q in self.questions if q.num_positive > 0], self.split)

    @cached_property
    def sampler(self) -> "MixSampler":
        return MixSampler(self)


def load_qa_tsv(path, split: str = "train") -> QaCorpus:
    """Read ``qid<TAB>question<TAB>answer<TAB>label`` records.

    Rows sharing a qid are grouped into one question, in order of first
    appearance. Text is lowercased and split on whitespace.
    """
    by_qid: dict[str, Question] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            qid, qtext, atext, label = fields
            if label not in ("0", "1"):
                raise CorpusFormatError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            q = by_qid.get(qid)
            if q is None:
                q = by_qid[qid] = Question(qid, tokenize(qtext))
            elif q.tokens != tokenize(qtext):
                raise CorpusFormatError(f"{path}:{lineno}: qid {qid!r} reused for a different question")
            q.candidates.append(Candidate(tokenize(atext), int(label)))
    return QaCorpus(list(by_qid.values()), split)


def save_qa_tsv(corpus: QaCorpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in corpus.questions:
            qtext = " ".join(q.tokens)
            for c in q.candidates:
                fh.write(f"{q.qid}\t{qtext}\t{' '.join(c.tokens)}\t{c.label}\n")


class Vocab:
    """Token <-> id mapping with reserved PAD (0) and UNK (1) entries."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: list[str] = [PAD, UNK]
        self.stoi: dict[str, int] = {PAD: PAD_ID, UNK: UNK_ID}
        for tok in tokens:
            self.add(tok)

    @classmethod
    def build(cls, *corpora: QaCorpus) -> "Vocab":
        vocab = cls()
        for corpus in corpora:
            for tok in corpus.tokens():
                vocab.add(tok)
        return vocab

    @classmethod
    def from_list(cls, itos: Sequence[str]) -> "Vocab":
        if list(itos[:2]) != [PAD, UNK]:
            raise CorpusFormatError("vocabulary must start with the PAD and UNK entries")
        return cls(itos[2:])

    def add(self, token: str) -> int:
        idx = self.stoi.get(token)
        if idx is None:
            idx = self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return idx

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token) -> bool:
        return token in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def encode(self, tokens: Sequence[str], cap: int) -> np.ndarray:
        """Ids for ``tokens``, keeping the first ``cap`` and padding with PAD."""
        ids = np.full(cap, PAD_ID, dtype=np.int64)
        head = [self.stoi.get(t, UNK_ID) for t in tokens[:cap]]
        ids[: len(head)] = head
        return ids


class WordVectorTable:
    """Frozen pretrained vectors indexed by vocabulary id.

    Rows for PAD, UNK and tokens missing from the vector file are zero and
    flagged as unknown; unknown tokens contribute nothing to a sequence sum.
    """

    def __init__(self, vocab: Vocab, matrix: np.ndarray, known: np.ndarray | None = None):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(vocab):
            raise ValueError(
                f"vector matrix shape {matrix.shape} does not match vocabulary size {len(vocab)}"
            )
        if known is None:
            known = np.any(matrix != 0.0, axis=1)
        known = np.array(known, dtype=bool)
        known[PAD_ID] = known[UNK_ID] = False
        matrix[~known] = 0.0
        matrix.setflags(write=False)
        known.setflags(write=False)
        self.vocab = vocab
        self.matrix = matrix
        self.known = known

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.matrix).tobytes())
        h.update(self.known.tobytes())
        return h.hexdigest()


def load_word_vectors(path, vocab: Vocab) -> WordVectorTable:
    """Load ``word v1 ... vn`` lines for the words of ``vocab``.

    The dimension is taken from the first line and enforced on every later
    line, including lines for words outside the vocabulary.
    """
    dim = None
    rows: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            word, sep, rest = line.partition(" ")
            width = rest.count(" ") + 1 if sep else 0
            if dim is None:
                if width == 0:
                    raise CorpusFormatError(f"{path}:{lineno}: no vector components")
                dim = width
            elif width != dim:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected {dim} components, got {width}"
                )
            idx = vocab.stoi.get(word)
            if idx is None or idx in (PAD_ID, UNK_ID):
                continue
            try:
                rows[idx] = np.array(rest.split(" "), dtype=np.float64)
            except ValueError:
                raise CorpusFormatError(f"{path}:{lineno}: non-numeric vector component") from None
    if dim is None:
        raise CorpusFormatError(f"{path}: no vectors found")
    matrix = np.zeros((len(vocab), dim))
    known = np.zeros(len(vocab), dtype=bool)
    for idx, row in rows.items():
        matrix[idx] = row
        known[idx] = True
    log.info("loaded %d/%d vocabulary vectors (dim %d) from %s", len(rows), len(vocab) - 2, dim, path)
    return WordVectorTable(vocab, matrix, known)


def save_word_vectors(table: WordVectorTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for idx in np.flatnonzero(table.known):
            vec = " ".join(repr(float(x)) for x in table.matrix[idx])
            fh.write(f"{table.vocab.itos[idx]} {vec}\n")


class MixSampler:
    """Draws negative answers for a question as candidate references.

    A reference is ``(question_index, candidate_index)`` into the corpus.
    Global negatives come from a flat pool of every label-0 candidate, laid
    out in question order so each question's own block is contiguous.
    """

    def __init__(self, corpus: QaCorpus):
        self.corpus = corpus
        pool = []
        self._block = []
        self._local = []
        for qi, q in enumerate(corpus.questions):
            start = len(pool)
            local = [(qi, ci) for ci, c in enumerate(q.candidates) if c.label == 0]
            pool.extend(local)
            self._local.append(local)
            self._block.append((start, len(pool)))
        self.pool = pool

    def _draw_local(self, qi, rng):
        local = self._local[qi]
        return local[int(rng.integers(len(local)))]

    def _draw_global(self, qi, rng):
        start, end = self._block[qi]
        others = len(self.pool) - (end - start)
        if others == 0:
            return self._draw_local(qi, rng)
        r = int(rng.integers(others))
        return self.pool[r if r < start else r + (end - start)]

    def sample(self, qi: int, k: int, rng: np.random.Generator, positive=None) -> list[tuple[int, int]]:
        """``ceil(k/2)`` local then ``floor(k/2)`` global negative references.

        Local draws fall back to the global pool when question ``qi`` has no
        label-0 candidates. Draws whose tokens equal ``positive`` are redrawn.
        """
        if k < 1:
            raise ValueError(f"need at least one negative per positive, got k={k}")
        if not self.pool:
            raise SamplingError("corpus has no label-0 answers to sample negatives from")
        has_local = bool(self._local[qi])
        out = []
        for slot in range(k):
            want_local = slot < (k + 1) // 2 and has_local
            for _ in range(100):
                ref = self._draw_local(qi, rng) if want_local else self._draw_global(qi, rng)
                if positive is None or self.tokens(ref) != positive:
                    break
            else:
                raise SamplingError(
                    f"question {self.corpus.questions[qi].qid!r}: every negative draw matched the positive"
                )
            out.append(ref)
        return out

    def tokens(self, ref) -> list[str]:
        qi, ci = ref
        return self.corpus.questions[qi].candidates[ci].tokens


def mix_sample_negatives(q: Question, corpus: QaCorpus, k: int, rng: np.random.Generator,
                         positive: Sequence[str] | None = None) -> list[list[str]]:
    """Sample ``k`` negative answers for ``q``: hard ones from its own
    candidates first, then easy ones from other questions."""
    sampler = corpus.sampler
    try:
        qi = next(i for i, other in enumerate(corpus.questions) if other is q or other.qid == q.qid)
    except StopIteration:
        raise KeyError(f"question {q.qid!r} is not part of the corpus") from None
    positive = list(positive) if positive is not None else None
    return [sampler.tokens(ref) for ref in sampler.sample(qi, k, rng, positive)]


class IndexedCorpus:
    """A corpus with every question and candidate pre-encoded to padded ids."""

    def __init__(self, corpus: QaCorpus, vocab: Vocab,
                 max_q_len: int = DEFAULT_MAX_Q_LEN, max_a_len: int = DEFAULT_MAX_A_LEN):
        self.corpus = corpus
        self.vocab = vocab
        self.max_q_len = max_q_len
        self.max_a_len = max_a_len
        self.question_ids = np.stack(
            [vocab.encode(q.tokens, max_q_len) for q in corpus.questions]
        ) if len(corpus) else np.zeros((0, max_q_len), dtype=np.int64)
        self.answer_ids = []
        self.labels = []
        for q in corpus.questions:
            if q.candidates:
                self.answer_ids.append(np.stack([vocab.encode(c.tokens, max_a_len) for c in q.candidates]))
            else:
                self.answer_ids.append(np.zeros((0, max_a_len), dtype=np.int64))
            self.labels.append(np.array([c.label for c in q.candidates], dtype=np.int64))

    def __len__(self) -> int:
        return len(self.corpus)


@dataclass
class TripleBatch:
    """Padded id arrays for a batch of (question, positive, negative) triples."""

    question: np.ndarray
    positive: np.ndarray
    negative: np.ndarray

    def __len__(self) -> int:
        return self.question.shape[0]

    def __getitem__(self, idx) -> "TripleBatch":
        return TripleBatch(self.question[idx], self.positive[idx], self.negative[idx])


def epoch_triples(indexed: IndexedCorpus, k: int, rng: np.random.Generator) -> TripleBatch:
    """Expand every (question, positive) pair into ``k`` triples with fresh negatives."""
    corpus = indexed.corpus
    sampler = corpus.sampler
    qs, ps, ns = [], [], []
    for qi, q in enumerate(corpus.questions):
        for ci, cand in enumerate(q.candidates):
            if cand.label != 1:
                continue
            for nqi, nci in sampler.sample(qi, k, rng, positive=cand.tokens):
                qs.append(indexed.question_ids[qi])
                ps.append(indexed.answer_ids[qi][ci])
                ns.append(indexed.answer_ids[nqi][nci])
    if not qs:
        empty_q = np.zeros((0, indexed.max_q_len), dtype=np.int64)
        empty_a = np.zeros((0, indexed.max_a_len), dtype=np.int64)
        return TripleBatch(empty_q, empty_a, empty_a.copy())
    return TripleBatch(np.stack(qs), np.stack(ps), np.stack(ns))


def iter_batches(triples: TripleBatch, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(len(triples))
    for start in range(0, len(order), batch_size):
        yield triples[order[start:start + batch_size]]
