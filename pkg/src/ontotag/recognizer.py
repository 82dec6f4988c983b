"""Classifier-based tagging: enumerate sentence n-grams, filter by edge POS,
classify each, and keep confident non-NONE predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import NONE_LABEL
from .errors import TaggerError
from .matcher import Annotation, SOURCE_ML
from .model import Model, _softmax_rows
from .textproc import Sentence, Token, edge_tags_allowed


@dataclass
class RecognizerConfig:
    min_ngram: int = 2
    max_ngram: int = 10
    threshold: float = 0.95

    def __post_init__(self):
        if not 1 <= self.min_ngram <= self.max_ngram:
            raise TaggerError(
                f"invalid n-gram range [{self.min_ngram}, {self.max_ngram}]"
            )
        if not 0.0 < self.threshold < 1.0:
            raise TaggerError(f"threshold must be in (0, 1), got {self.threshold}")


@dataclass
class Candidate:
    tokens: list[Token]
    start: int
    end: int


def pos_filter(candidate: Candidate) -> bool:
    return edge_tags_allowed(candidate.tokens)


def generate_candidates(sentence: Sentence, config: RecognizerConfig) -> list[Candidate]:
    """All POS-admissible token windows of the configured sizes, in order."""
    toks = sentence.tokens
    out = []
    for i in range(len(toks)):
        for n in range(config.min_ngram, config.max_ngram + 1):
            j = i + n
            if j > len(toks):
                break
            cand = Candidate(tokens=toks[i:j], start=toks[i].start, end=toks[j - 1].end)
            if pos_filter(cand):
                out.append(cand)
    return out


def tag_ml(model: Model, sentence: Sentence, config: RecognizerConfig) -> list[Annotation]:
    """Annotations for candidates whose top label is not NONE and whose
    probability clears the threshold (strictly).

    Candidate encodings are built from per-token embedding sums so a sentence is
    classified in one batched pass.
    """
    candidates = generate_candidates(sentence, config)
    if not candidates:
        return []
    toks = sentence.tokens
    index_of = {id(t): i for i, t in enumerate(toks)}
    d = model.E.shape[1]
    sums = np.zeros((len(toks), d))
    counts = np.zeros(len(toks))
    for i, tok in enumerate(toks):
        idx = model.vocab.feature_indices([tok.lower])
        if idx.size:
            sums[i] = model.E[idx].sum(axis=0)
            counts[i] = idx.size
    C = np.zeros((len(candidates), d))
    for row, cand in enumerate(candidates):
        i = index_of[id(cand.tokens[0])]
        j = i + len(cand.tokens)
        k = counts[i:j].sum()
        if k:
            C[row] = sums[i:j].sum(axis=0) / k
    P = _softmax_rows(C @ model.W.T + model.b)
    rows = np.argmax(P, axis=1)
    base = sentence.start
    out = []
    for c, (cand, row) in enumerate(zip(candidates, rows)):
        label = model.labels[row]
        score = float(P[c, row])
        if label != NONE_LABEL and score > config.threshold:
            out.append(
                Annotation(
                    start=cand.start,
                    end=cand.end,
                    text=sentence.text[cand.start - base : cand.end - base],
                    label=label,
                    score=score,
                    source=SOURCE_ML,
                )
            )
    return out
