"""Session fixtures: the synthetic world, trained models, and on-disk inputs."""

from __future__ import annotations

import io
import time

import pytest

import toyworld
from ontotag.dataset import DatasetSpec, assemble, generate_positives, sample_negatives
from ontotag.matcher import Annotation, SOURCE_DICT, trie_build
from ontotag.model import TrainConfig, train
from ontotag.ontology import build_dictionary, parse_obo, select_subontology
from ontotag.pipeline import Tagger
from ontotag.pubtator import write_pubtator
from ontotag.recognizer import RecognizerConfig
from ontotag.textproc import tokenize

# Calibrated for the tiny corpus: the shipped defaults (lr 1e-4, batch 128) are
# sized for web-scale training sets and barely move on ~500 instances.
TOY_TRAIN = TrainConfig(
    dim=64, learning_rate=0.05, batch_size=16, max_epochs=30, patience=30, rng_seed=7
)
# Deliberately undertrained so classifier scores spread across (0, 1); used by
# the threshold sweep tests, which need counts to actually change with T.
WEAK_TRAIN = TrainConfig(
    dim=64, learning_rate=0.02, batch_size=32, max_epochs=6, patience=6, rng_seed=7
)
TOY_DATA = DatasetSpec(negative_count=300, rng_seed=11, dev_fraction=0.0)


@pytest.fixture(scope="session")
def toy_graph():
    return parse_obo(io.StringIO(toyworld.obo_text()))


@pytest.fixture(scope="session")
def toy_scope(toy_graph):
    return select_subontology(toy_graph, toyworld.ROOT_ID)


@pytest.fixture(scope="session")
def toy_dictionary(toy_graph, toy_scope):
    return build_dictionary(toy_graph, toy_scope)


@pytest.fixture(scope="session")
def toy_trie(toy_dictionary):
    return trie_build(toy_dictionary)


@pytest.fixture(scope="session")
def toy_corpus():
    return toyworld.training_corpus()


@pytest.fixture(scope="session")
def toy_dataset(toy_dictionary, toy_corpus):
    positives = generate_positives(toy_dictionary)
    negatives = sample_negatives(toy_corpus, toy_dictionary, TOY_DATA)
    train_set, dev_set = assemble(positives, negatives, TOY_DATA)
    return {
        "positives": positives,
        "negatives": negatives,
        "train": train_set,
        "dev": dev_set,
    }


@pytest.fixture(scope="session")
def toy_model_info(toy_dataset):
    started = time.perf_counter()
    model = train(toy_dataset["train"], toy_dataset["dev"], TOY_TRAIN)
    return {"model": model, "seconds": time.perf_counter() - started}


@pytest.fixture(scope="session")
def toy_model(toy_model_info):
    return toy_model_info["model"]


@pytest.fixture(scope="session")
def weak_model(toy_dataset):
    return train(toy_dataset["train"], toy_dataset["dev"], WEAK_TRAIN)


@pytest.fixture(scope="session")
def toy_eval():
    docs, gold = toyworld.eval_documents()
    spans = {doc.doc_id: [(t.start, t.end) for t in tokenize(doc.text)] for doc in docs}
    return {"docs": docs, "gold": gold, "token_spans": spans}


@pytest.fixture(scope="session")
def toy_tagger(toy_trie, toy_model):
    return Tagger(trie=toy_trie, model=toy_model, config=RecognizerConfig())


@pytest.fixture(scope="session")
def toy_files(tmp_path_factory, toy_eval):
    """On-disk inputs for CLI runs: ontology, corpus directory, PubTator gold."""
    root = tmp_path_factory.mktemp("toy_files")
    obo = root / "ontology.obo"
    obo.write_text(toyworld.obo_text(), encoding="utf-8")

    corpus = root / "corpus"
    corpus.mkdir()
    for i, text in enumerate(toyworld.training_corpus()):
        (corpus / f"doc{i:03d}.txt").write_text(text + "\n", encoding="utf-8")

    gold = root / "gold.pubtator"
    with open(gold, "w", encoding="utf-8") as fp:
        for doc in toy_eval["docs"]:
            anns = [
                Annotation(
                    start=s, end=e, text=doc.text[s:e], label=label,
                    score=1.0, source=SOURCE_DICT,
                )
                for s, e, label in toy_eval["gold"][doc.doc_id]
            ]
            write_pubtator(fp, doc, anns)
    return {"root": root, "obo": obo, "corpus": corpus, "gold": gold}
