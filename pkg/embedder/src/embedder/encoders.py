"""Sentence encoders.

Two backends: pretrained models from a public hub (via sentence-transformers,
loaded frozen, never fine-tuned) and a built-in deterministic hashing encoder
(`hash:<dim>`) that needs no downloads and keeps the export pipeline testable
offline.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import StartupError


@dataclass(frozen=True)
class EncoderSpec:
    """What to encode with. ``model`` is either ``hash:<dim>`` or a hub id."""

    model: str
    batch_size: int = 64
    normalize: bool = False


class HashingEncoder:
    """Signed feature hashing of word n-grams and character trigrams.

    Stateless and fully deterministic: every feature string is mapped to a
    bucket and sign by sha256, so identical texts (and re-runs) produce
    identical vectors.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise StartupError(f"hash encoder dimension must be >= 1, got {dim}")
        self.dim = dim

    def _features(self, text: str):
        tokens = text.lower().split()
        for tok in tokens:
            yield "w:" + tok
        for a, b in zip(tokens, tokens[1:]):
            yield f"b:{a} {b}"
        padded = f" {text.lower()} "
        for i in range(len(padded) - 2):
            yield "c:" + padded[i : i + 3]

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            for feature in self._features(text):
                digest = hashlib.sha256(feature.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:8], "big") % self.dim
                sign = 1.0 if digest[8] & 1 else -1.0
                out[row, bucket] += sign
        return out


class HubEncoder:
    """Frozen pretrained encoder from a public model hub."""

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise StartupError(
                "sentence-transformers is not installed; install the 'hub' extra"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:
            raise StartupError(f"cannot load model {model_id!r}: {exc}") from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(texts, convert_to_numpy=True, normalize_embeddings=False)
        )


def make_encoder(spec: EncoderSpec):
    if spec.model.startswith("hash:"):
        try:
            dim = int(spec.model.split(":", 1)[1])
        except ValueError as exc:
            raise StartupError(f"bad hash encoder spec {spec.model!r}") from exc
        return HashingEncoder(dim)
    model_id = spec.model.removeprefix("hub:")
    return HubEncoder(model_id)
