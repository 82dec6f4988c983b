"""Distantly supervised training data: dictionary entries as positives,
sampled non-entry n-grams as negatives.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .errors import TaggerError
from .ontology import Dictionary, lemmatize_tokens
from .textproc import analyze, edge_tags_allowed

log = logging.getLogger(__name__)

NONE_LABEL = "NONE"
MAX_NGRAM = 10


class SamplingError(TaggerError):
    pass


@dataclass(frozen=True)
class TrainingInstance:
    tokens: tuple[str, ...]
    label: str


@dataclass
class DatasetSpec:
    negative_count: int = 0
    max_ngram: int = MAX_NGRAM
    rng_seed: int = 0
    dev_fraction: float = 0.1


def generate_positives(dictionary: Dictionary, max_tokens: int = MAX_NGRAM) -> list[TrainingInstance]:
    """One instance per dictionary entry; entries longer than max_tokens are skipped."""
    instances = []
    skipped = 0
    for text in sorted(dictionary.entries):
        tokens = tuple(text.split(" "))
        if len(tokens) > max_tokens:
            skipped += 1
            continue
        instances.append(TrainingInstance(tokens=tokens, label=dictionary.entries[text]))
    if skipped:
        log.info("skipped %d dictionary entries longer than %d tokens", skipped, max_tokens)
    return instances


def sample_negatives(corpus, dictionary: Dictionary, spec: DatasetSpec) -> list[TrainingInstance]:
    """Draw sentence-internal n-grams that are not dictionary entries.

    An n-gram is rejected when its normalized or lemmatized form is an entry, or
    when its edge tokens fail the POS filter used at recognition time. Draws are
    capped at 100x the requested count.
    """
    if spec.negative_count <= 0:
        return []
    sentences = []
    for doc in corpus:
        doc_sentences = [s for s in analyze(doc) if s.tokens]
        if doc_sentences:
            sentences.append(doc_sentences)
    if not sentences:
        raise SamplingError("corpus contains no tokenizable sentences")
    rng = random.Random(spec.rng_seed)
    negatives = []
    attempts = 0
    limit = 100 * spec.negative_count
    while len(negatives) < spec.negative_count:
        if attempts >= limit:
            raise SamplingError(
                f"gave up after {attempts} draws for {spec.negative_count} negatives"
                f" ({len(negatives)} found); corpus may be saturated with entries"
            )
        attempts += 1
        doc_sentences = sentences[rng.randrange(len(sentences))]
        sentence = doc_sentences[rng.randrange(len(doc_sentences))]
        toks = sentence.tokens
        n = min(rng.randint(1, spec.max_ngram), len(toks))
        start = rng.randrange(len(toks) - n + 1)
        window = toks[start : start + n]
        if not edge_tags_allowed(window):
            continue
        lower = [t.lower for t in window]
        if " ".join(lower) in dictionary.entries:
            continue
        if " ".join(lemmatize_tokens(lower)) in dictionary.entries:
            continue
        negatives.append(TrainingInstance(tokens=tuple(lower), label=NONE_LABEL))
    return negatives


def assemble(positives, negatives, spec: DatasetSpec):
    """Shuffle and split into (train, dev) with a seeded RNG.

    When negatives exist and both splits are nonempty, each split is guaranteed
    at least one NONE instance (a deterministic swap fixes the rare shuffle that
    puts them all on one side).
    """
    combined = list(positives) + list(negatives)
    rng = random.Random(spec.rng_seed)
    rng.shuffle(combined)
    dev_size = int(len(combined) * spec.dev_fraction)
    dev = combined[:dev_size]
    train = combined[dev_size:]
    if negatives and dev and train:
        _ensure_none_in_both(train, dev)
    return train, dev


def _ensure_none_in_both(train, dev):
    train_has = any(i.label == NONE_LABEL for i in train)
    dev_has = any(i.label == NONE_LABEL for i in dev)
    if train_has and dev_has:
        return
    rich, poor = (train, dev) if train_has else (dev, train)
    give = next(i for i, inst in enumerate(rich) if inst.label == NONE_LABEL)
    take = next((i for i, inst in enumerate(poor) if inst.label != NONE_LABEL), None)
    if take is None:
        return
    rich[give], poor[take] = poor[take], rich[give]


def save_instances(instances, path) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for inst in instances:
            fp.write(f"{inst.label}\t{' '.join(inst.tokens)}\n")


def load_instances(path) -> list[TrainingInstance]:
    instances = []
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise TaggerError(f"{path}: malformed dataset line {lineno}")
            instances.append(
                TrainingInstance(tokens=tuple(parts[1].split(" ")), label=parts[0])
            )
    return instances
