"""Pairwise quality scorers.

Rule baselines (length, seeded random) and L2-regularized logistic
regression over siamese bag-of-words, bag-of-words + length, frozen
embedding, or second-claim-only features. Training is seeded mini-batch
gradient descent and fully deterministic for a fixed seed.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractError, ParseError, ValidationError
from .features import (
    CSRMatrix,
    EmbeddingStore,
    LengthScaler,
    SparseVector,
    Vocabulary,
    bow_vector,
    build_vocabulary,
    csr_matvec,
    csr_rmatvec,
    length_feature,
    pair_features,
    sparse_dot,
    sparse_from_dense,
    stack_sparse,
)
from .pairs import ClaimPair, PairDataset


class ModelKind(Enum):
    LENGTH = "length"
    RANDOM = "random"
    SINGLE_CLAIM = "single"
    LOGREG_BOW = "sbow"
    LOGREG_BOW_LEN = "sbow-len"
    LOGREG_EMB = "emb"


LEARNED_KINDS = frozenset(
    {ModelKind.SINGLE_CLAIM, ModelKind.LOGREG_BOW, ModelKind.LOGREG_BOW_LEN, ModelKind.LOGREG_EMB}
)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 10
    l2: float = 1e-4
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if self.l2 < 0:
            raise ContractError("l2 must be >= 0")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")


def default_train_config(kind: ModelKind, seed: int = 0) -> TrainConfig:
    # Embedding features are dense and unit-normalized; they want a smaller step.
    lr = 0.01 if kind is ModelKind.LOGREG_EMB else 0.1
    return TrainConfig(learning_rate=lr, seed=seed)


@dataclass
class PairModel:
    """A trained (or rule-based) pairwise scorer. Immutable after training."""

    kind: ModelKind
    seed: int = 0
    weights: np.ndarray | None = None
    bias: float = 0.0
    vocab: Vocabulary | None = None
    embeddings: EmbeddingStore | None = None
    scaler: LengthScaler | None = None
    config: TrainConfig | None = None


def length_predict(pair: ClaimPair) -> tuple[bool, float]:
    """Longer second claim wins; exact ties predict False at probability 0.5."""
    first_len = len(pair.first.text)
    second_len = len(pair.second.text)
    if second_len > first_len:
        return True, 1.0
    if second_len < first_len:
        return False, 0.0
    return False, 0.5


def random_predict(pair: ClaimPair, seed: int) -> bool:
    """Fair coin, deterministic per (seed, pair identity).

    Keyed hashing rather than a shared stream keeps per-pair prediction
    order-independent and safe to parallelize.
    """
    key = f"{seed}|{pair.chain_id}|{pair.first.version_id}|{pair.second.version_id}"
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return bool(digest[0] & 1)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def single_claim_features(
    pair: ClaimPair,
    vocab: Vocabulary | None = None,
    embeddings: EmbeddingStore | None = None,
) -> SparseVector:
    """Features of the second claim only; no signal from the first."""
    if embeddings is not None:
        return sparse_from_dense(embeddings.lookup(pair.second.version_id))
    if vocab is None:
        raise ContractError("single_claim_features needs a vocabulary or embeddings")
    return bow_vector(pair.second.text, vocab)


def featurize_pair(model: PairModel, pair: ClaimPair) -> SparseVector:
    kind = model.kind
    if kind is ModelKind.SINGLE_CLAIM:
        return single_claim_features(pair, model.vocab, model.embeddings)
    if kind is ModelKind.LOGREG_EMB:
        if model.embeddings is None:
            raise ContractError("embedding model has no embedding store attached")
        a = sparse_from_dense(model.embeddings.lookup(pair.first.version_id))
        b = sparse_from_dense(model.embeddings.lookup(pair.second.version_id))
        return pair_features(a, b)
    if kind in (ModelKind.LOGREG_BOW, ModelKind.LOGREG_BOW_LEN):
        if model.vocab is None:
            raise ContractError("bag-of-words model has no vocabulary attached")
        a = bow_vector(pair.first.text, model.vocab)
        b = bow_vector(pair.second.text, model.vocab)
        return pair_features(
            a,
            b,
            with_length=kind is ModelKind.LOGREG_BOW_LEN,
            a_len=length_feature(pair.first.text),
            b_len=length_feature(pair.second.text),
            scaler=model.scaler,
        )
    raise ContractError(f"{kind.value} models have no feature vectors")


def logreg_objective(
    weights: np.ndarray, bias: float, X: CSRMatrix, y: np.ndarray, l2: float
) -> float:
    """Mean logistic loss plus (l2/2)*||w||^2; the bias is unregularized."""
    z = csr_matvec(X, weights) + bias
    margins = y * z
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    return loss + 0.5 * l2 * float(weights @ weights)


def logreg_gradient(
    weights: np.ndarray, bias: float, X: CSRMatrix, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    z = csr_matvec(X, weights) + bias
    # d/dz log(1+exp(-y z)) = -y * sigmoid(-y z)
    coeffs = -y * _sigmoid_vec(-y * z) / X.n_rows
    grad_w = csr_rmatvec(X, coeffs) + l2 * weights
    grad_b = float(np.sum(coeffs))
    return grad_w, grad_b


def _sigmoid_vec(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _unique_version_texts(pairs: Sequence[ClaimPair]) -> list[str]:
    seen: dict[str, str] = {}
    for p in pairs:
        for v in (p.first, p.second):
            if v.version_id not in seen:
                seen[v.version_id] = v.text
    return list(seen.values())


def train_logreg(
    train: PairDataset,
    kind: ModelKind,
    config: TrainConfig | None = None,
    vocab: Vocabulary | None = None,
    embeddings: EmbeddingStore | None = None,
    min_freq: int = 2,
) -> PairModel:
    """Fit an L2-regularized logistic regression on a balanced pair dataset.

    The vocabulary and length standardization constants are derived from the
    training texts unless supplied. Deterministic for a fixed seed.
    """
    if kind not in LEARNED_KINDS:
        raise ContractError(f"{kind.value} is not a trainable model kind")
    if not train.pairs:
        raise ContractError("training set is empty")
    n_true = sum(1 for p in train.pairs if p.label)
    if n_true * 2 != len(train.pairs):
        raise ContractError("training set must be balanced")
    config = config or default_train_config(kind)

    needs_vocab = kind is not ModelKind.LOGREG_EMB and embeddings is None
    if needs_vocab and vocab is None:
        vocab = build_vocabulary(_unique_version_texts(train.pairs), min_freq=min_freq)
    scaler = None
    if kind is ModelKind.LOGREG_BOW_LEN:
        scaler = LengthScaler.fit(
            [length_feature(t) for t in _unique_version_texts(train.pairs)]
        )

    model = PairModel(
        kind=kind,
        seed=config.seed,
        vocab=vocab,
        embeddings=embeddings,
        scaler=scaler,
        config=config,
    )
    X = stack_sparse([featurize_pair(model, p) for p in train.pairs])
    y = np.array([1.0 if p.label else -1.0 for p in train.pairs])

    dim = X.shape[1]
    weights = np.zeros(dim)
    bias = 0.0
    rng = random.Random(config.seed)
    order = list(range(X.n_rows))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            Xb = X.take_rows(batch)
            yb = y[batch]
            grad_w, grad_b = logreg_gradient(weights, bias, Xb, yb, config.l2)
            weights -= config.learning_rate * grad_w
            bias -= config.learning_rate * grad_b

    weights.setflags(write=False)
    model.weights = weights
    model.bias = bias
    return model


def predict_prob(model: PairModel, pair: ClaimPair) -> float:
    """Probability that the second claim is the better one."""
    if model.kind is ModelKind.LENGTH:
        return length_predict(pair)[1]
    if model.kind is ModelKind.RANDOM:
        return 1.0 if random_predict(pair, model.seed) else 0.0
    if model.weights is None:
        raise ContractError("model has not been trained")
    vec = featurize_pair(model, pair)
    return _sigmoid(sparse_dot(vec, model.weights) + model.bias)


def predict_label(model: PairModel, pair: ClaimPair) -> bool:
    return predict_prob(model, pair) > 0.5


def save_model(model: PairModel, path: str | Path) -> None:
    """Write a self-contained textual model dump."""
    vocab_tokens = None
    vocab_hash = None
    min_freq = None
    if model.vocab is not None:
        ordered = sorted(model.vocab.index.items(), key=lambda kv: kv[1])
        vocab_tokens = [tok for tok, _ in ordered]
        vocab_hash = model.vocab.content_hash()
        min_freq = model.vocab.min_freq
    payload = {
        "kind": model.kind.value,
        "seed": model.seed,
        "config": None
        if model.config is None
        else {
            "learning_rate": model.config.learning_rate,
            "epochs": model.config.epochs,
            "l2": model.config.l2,
            "batch_size": model.config.batch_size,
            "seed": model.config.seed,
        },
        "vocab_hash": vocab_hash,
        "vocab_min_freq": min_freq,
        "vocab_tokens": vocab_tokens,
        "weights": None if model.weights is None else [float(w) for w in model.weights],
        "bias": model.bias,
        "scaler": None
        if model.scaler is None
        else {"mean": model.scaler.mean, "std": model.scaler.std},
        "embedding_dim": None if model.embeddings is None else model.embeddings.dim,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_model(path: str | Path, embeddings: EmbeddingStore | None = None) -> PairModel:
    """Load a model dump; rejects files whose vocabulary hash does not match."""
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid model file: {exc.msg}") from exc
    try:
        kind = ModelKind(payload["kind"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"unknown model kind: {exc}") from exc

    vocab = None
    if payload.get("vocab_tokens") is not None:
        vocab = Vocabulary(
            {tok: i for i, tok in enumerate(payload["vocab_tokens"])},
            payload.get("vocab_min_freq") or 1,
        )
        if vocab.content_hash() != payload.get("vocab_hash"):
            raise ValidationError("vocabulary hash mismatch; model file is corrupt")
    scaler = None
    if payload.get("scaler") is not None:
        scaler = LengthScaler(payload["scaler"]["mean"], payload["scaler"]["std"])
    config = None
    if payload.get("config") is not None:
        config = TrainConfig(**payload["config"])
    weights = None
    if payload.get("weights") is not None:
        weights = np.array(payload["weights"])
        weights.setflags(write=False)
    expected_dim = payload.get("embedding_dim")
    if expected_dim is not None and embeddings is not None and embeddings.dim != expected_dim:
        raise ValidationError(
            f"embedding dimension mismatch: model expects {expected_dim}, store has {embeddings.dim}"
        )
    return PairModel(
        kind=kind,
        seed=payload.get("seed", 0),
        weights=weights,
        bias=payload.get("bias", 0.0),
        vocab=vocab,
        embeddings=embeddings,
        scaler=scaler,
        config=config,
    )
