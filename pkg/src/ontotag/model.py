"""Bag-of-features softmax classifier over n-grams.

An n-gram is encoded as the mean embedding of its word unigrams and
boundary-padded character 3/4-grams; a single linear layer plus softmax
produces a distribution over concept labels and NONE. Training is plain
mini-batch Adam with early stopping on dev accuracy.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict, field

import numpy as np

from .dataset import NONE_LABEL, TrainingInstance
from .errors import TaggerError

MAGIC = b"OTAGMDL1"
FORMAT_VERSION = 1


class ModelFormatError(TaggerError):
    pass


class ConfigurationError(TaggerError):
    pass


class TrainingError(TaggerError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 128
    learning_rate: float = 0.0001
    batch_size: int = 128
    max_epochs: int = 50
    patience: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    rng_seed: int = 0


def char_ngrams(token: str) -> list[str]:
    padded = f"<{token}>"
    grams = []
    for n in (3, 4):
        for i in range(len(padded) - n + 1):
            grams.append(padded[i : i + n])
    return grams


def features_of(tokens) -> list[str]:
    """Feature strings of a token sequence; word and char-gram spaces are kept
    disjoint by prefix so "ear" the word never collides with "ear" the trigram."""
    feats = [f"w:{t}" for t in tokens]
    for t in tokens:
        feats.extend(f"c:{g}" for g in char_ngrams(t))
    return feats


@dataclass
class FeatureVocab:
    index: dict[str, int]

    @classmethod
    def build(cls, instances) -> "FeatureVocab":
        seen = set()
        for inst in instances:
            seen.update(features_of(inst.tokens))
        return cls(index={f: i for i, f in enumerate(sorted(seen))})

    def __len__(self):
        return len(self.index)

    def feature_indices(self, tokens) -> np.ndarray:
        idx = self.index
        present = [idx[f] for f in features_of(tokens) if f in idx]
        return np.asarray(present, dtype=np.int64)


def encode(tokens, vocab: FeatureVocab, E: np.ndarray) -> np.ndarray:
    """Mean embedding of in-vocabulary features; zero vector if none are known."""
    idx = vocab.feature_indices(tokens)
    if idx.size == 0:
        return np.zeros(E.shape[1])
    return E[idx].mean(axis=0)


@dataclass
class Model:
    vocab: FeatureVocab
    labels: tuple[str, ...]
    E: np.ndarray
    W: np.ndarray
    b: np.ndarray
    config: TrainConfig
    label_row: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.label_row = {lab: i for i, lab in enumerate(self.labels)}


def _softmax_rows(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    P = np.exp(Z)
    P /= P.sum(axis=1, keepdims=True)
    return P


def forward(model: Model, tokens) -> np.ndarray:
    C = encode(tokens, model.vocab, model.E)
    return _softmax_rows((model.W @ C + model.b)[None, :])[0]


def predict(model: Model, tokens) -> tuple[str, float]:
    """Most probable label and its probability; ties go to the lowest row."""
    P = forward(model, tokens)
    row = int(np.argmax(P))
    return model.labels[row], float(P[row])


def adam_step(param, grad, m, v, t, config: TrainConfig):
    """One Adam update, in place. t is the 1-based global step count."""
    m *= config.beta1
    m += (1.0 - config.beta1) * grad
    v *= config.beta2
    v += (1.0 - config.beta2) * grad * grad
    m_hat = m / (1.0 - config.beta1 ** t)
    v_hat = v / (1.0 - config.beta2 ** t)
    param -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return param, m, v


def loss_and_grads(E, W, b, feature_lists, label_rows):
    """Mean cross-entropy over a batch and gradients for E, W and b."""
    B = len(feature_lists)
    d = E.shape[1]
    C = np.zeros((B, d))
    for i, idx in enumerate(feature_lists):
        if idx.size:
            C[i] = E[idx].mean(axis=0)
    Z = C @ W.T + b
    P = _softmax_rows(Z)
    rows = np.arange(B)
    loss = float(-np.log(P[rows, label_rows]).mean())
    dZ = P
    dZ[rows, label_rows] -= 1.0
    dZ /= B
    dW = dZ.T @ C
    db = dZ.sum(axis=0)
    dC = dZ @ W
    dE = np.zeros_like(E)
    for i, idx in enumerate(feature_lists):
        if idx.size:
            np.add.at(dE, idx, dC[i] / idx.size)
    return loss, dE, dW, db


def train(train_set, dev_set, config: TrainConfig = TrainConfig()) -> Model:
    """Fit the classifier; returns the parameters of the best dev-accuracy epoch.

    With an empty dev set every epoch runs and the final parameters are kept.
    """
    if not train_set:
        raise ConfigurationError("training set is empty")
    train_labels = {inst.label for inst in train_set}
    missing = sorted({inst.label for inst in dev_set} - train_labels)
    if missing:
        raise ConfigurationError(
            "dev set labels missing from training set: " + ", ".join(missing)
        )
    labels = (NONE_LABEL, *sorted(train_labels - {NONE_LABEL}))
    label_row = {lab: i for i, lab in enumerate(labels)}
    vocab = FeatureVocab.build(train_set)

    rng = np.random.default_rng(config.rng_seed)
    bound = 1.0 / np.sqrt(config.dim)
    E = rng.uniform(-bound, bound, size=(len(vocab), config.dim))
    W = np.zeros((len(labels), config.dim))
    b = np.zeros(len(labels))

    feats = [vocab.feature_indices(inst.tokens) for inst in train_set]
    y = np.array([label_row[inst.label] for inst in train_set], dtype=np.int64)
    dev_feats = [vocab.feature_indices(inst.tokens) for inst in dev_set]
    dev_y = np.array([label_row[inst.label] for inst in dev_set], dtype=np.int64)

    mE, vE = np.zeros_like(E), np.zeros_like(E)
    mW, vW = np.zeros_like(W), np.zeros_like(W)
    mb, vb = np.zeros_like(b), np.zeros_like(b)
    t = 0
    best = None
    best_acc = -1.0
    stale = 0

    n = len(train_set)
    epochs_run = 0
    for epoch in range(config.max_epochs):
        epochs_run = epoch + 1
        order = rng.permutation(n)
        for batch_index, lo in enumerate(range(0, n, config.batch_size)):
            batch = order[lo : lo + config.batch_size]
            loss, dE, dW, db = loss_and_grads(
                E, W, b, [feats[i] for i in batch], y[batch]
            )
            if not (
                np.isfinite(loss)
                and np.isfinite(dW).all()
                and np.isfinite(db).all()
                and np.isfinite(dE).all()
            ):
                raise TrainingError(
                    f"non-finite gradient in epoch {epoch} batch {batch_index}"
                )
            t += 1
            adam_step(E, dE, mE, vE, t, config)
            adam_step(W, dW, mW, vW, t, config)
            adam_step(b, db, mb, vb, t, config)
        if dev_feats:
            acc = _accuracy(E, W, b, dev_feats, dev_y)
            if acc > best_acc:
                best_acc = acc
                best = (E.copy(), W.copy(), b.copy())
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    if best is not None:
        E, W, b = best
    model = Model(vocab=vocab, labels=labels, E=E, W=W, b=b, config=config)
    model.epochs_run = epochs_run
    return model


def _accuracy(E, W, b, feature_lists, y):
    C = np.zeros((len(feature_lists), E.shape[1]))
    for i, idx in enumerate(feature_lists):
        if idx.size:
            C[i] = E[idx].mean(axis=0)
    pred = np.argmax(C @ W.T + b, axis=1)
    return float((pred == y).mean())


def save_model(model: Model, path) -> None:
    header = {
        "version": FORMAT_VERSION,
        "features": sorted(model.vocab.index, key=model.vocab.index.get),
        "labels": list(model.labels),
        "config": asdict(model.config),
        "shapes": {
            "E": list(model.E.shape),
            "W": list(model.W.shape),
            "b": list(model.b.shape),
        },
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fp:
        fp.write(MAGIC)
        fp.write(struct.pack("<Q", len(blob)))
        fp.write(blob)
        for arr in (model.E, model.W, model.b):
            fp.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> Model:
    with open(path, "rb") as fp:
        magic = fp.read(len(MAGIC))
        if magic != MAGIC:
            raise ModelFormatError(f"{path}: not a model file (bad magic)")
        (header_len,) = struct.unpack("<Q", fp.read(8))
        try:
            header = json.loads(fp.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"{path}: corrupt model header") from exc
        if header.get("version") != FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported model version {header.get('version')!r}"
            )
        arrays = {}
        for name in ("E", "W", "b"):
            shape = tuple(header["shapes"][name])
            count = int(np.prod(shape)) if shape else 1
            data = fp.read(count * 8)
            if len(data) != count * 8:
                raise ModelFormatError(f"{path}: truncated array {name}")
            arrays[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
    vocab = FeatureVocab(index={f: i for i, f in enumerate(header["features"])})
    config = TrainConfig(**header["config"])
    return Model(
        vocab=vocab,
        labels=tuple(header["labels"]),
        E=arrays["E"],
        W=arrays["W"],
        b=arrays["b"],
        config=config,
    )