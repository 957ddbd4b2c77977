"""Feature extraction: bag-of-words, lengths, external embeddings, and the
pairwise concatenations fed to the classifiers and rankers."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import tokenize
from .errors import ContractError, NotFoundError, ParseError


@dataclass(frozen=True)
class Vocabulary:
    """Token -> index map built from training texts only.

    Indices are contiguous 0..size-1 in order of first occurrence among the
    tokens meeting the document-frequency cutoff.
    """

    index: dict[str, int]
    min_freq: int

    @property
    def size(self) -> int:
        return len(self.index)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for token, idx in sorted(self.index.items(), key=lambda kv: kv[1]):
            h.update(f"{token}\t{idx}\n".encode("utf-8"))
        return h.hexdigest()


def build_vocabulary(texts: Iterable[str], min_freq: int = 2) -> Vocabulary:
    """Build a vocabulary of tokens occurring in at least ``min_freq`` texts."""
    if min_freq < 1:
        raise ContractError("min_freq must be >= 1")
    texts = list(texts)
    df: dict[str, int] = {}
    for text in texts:
        for tok in set(tokenize(text)):
            df[tok] = df.get(tok, 0) + 1
    index: dict[str, int] = {}
    for text in texts:
        for tok in tokenize(text):
            if tok not in index and df[tok] >= min_freq:
                index[tok] = len(index)
    return Vocabulary(index, min_freq)


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector: strictly increasing indices, nonzero values."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        if self.indices:
            out[list(self.indices)] = self.values
        return out


def sparse_from_dense(vec: np.ndarray) -> SparseVector:
    nz = np.nonzero(vec)[0]
    return SparseVector(tuple(int(i) for i in nz), tuple(float(vec[i]) for i in nz), len(vec))


def sparse_dot(vec: SparseVector, weights: np.ndarray) -> float:
    total = 0.0
    for i, v in zip(vec.indices, vec.values):
        total += weights[i] * v
    return total


def sparse_sub(a: SparseVector, b: SparseVector) -> SparseVector:
    """Elementwise a - b; both operands must share a dimension."""
    if a.dim != b.dim:
        raise ContractError(f"dimension mismatch: {a.dim} != {b.dim}")
    acc: dict[int, float] = dict(zip(a.indices, a.values))
    for i, v in zip(b.indices, b.values):
        acc[i] = acc.get(i, 0.0) - v
    items = sorted((i, v) for i, v in acc.items() if v != 0.0)
    return SparseVector(tuple(i for i, _ in items), tuple(v for _, v in items), a.dim)


def bow_vector(text: str, vocab: Vocabulary, stats: dict | None = None) -> SparseVector:
    """Token-count vector over the vocabulary; OOV tokens drop silently.

    Pass a ``stats`` dict to count dropped OOV tokens under key "oov".
    """
    counts: dict[int, int] = {}
    oov = 0
    for tok in tokenize(text):
        idx = vocab.index.get(tok)
        if idx is None:
            oov += 1
        else:
            counts[idx] = counts.get(idx, 0) + 1
    if stats is not None:
        stats["oov"] = stats.get("oov", 0) + oov
    items = sorted(counts.items())
    return SparseVector(
        tuple(i for i, _ in items), tuple(float(c) for _, c in items), vocab.size
    )


def length_feature(text: str) -> float:
    """Unicode character count of the raw text."""
    return float(len(text))


@dataclass(frozen=True)
class LengthScaler:
    """Train-set standardization constants for the length features."""

    mean: float
    std: float

    @classmethod
    def fit(cls, lengths: Sequence[float]) -> "LengthScaler":
        if not lengths:
            raise ContractError("cannot fit a scaler on no lengths")
        arr = np.asarray(lengths, dtype=float)
        return cls(float(arr.mean()), float(arr.std()))

    def transform(self, x: float) -> float:
        if self.std == 0.0:
            return 0.0
        return (x - self.mean) / self.std


def pair_features(
    a_vec: SparseVector,
    b_vec: SparseVector,
    with_length: bool = False,
    a_len: float = 0.0,
    b_len: float = 0.0,
    scaler: LengthScaler | None = None,
) -> SparseVector:
    """Concatenate [a || b], optionally appending two standardized lengths.

    Output dimension is 2d, or 2d+2 with lengths.
    """
    if a_vec.dim != b_vec.dim:
        raise ContractError(f"dimension mismatch: {a_vec.dim} != {b_vec.dim}")
    d = a_vec.dim
    indices = list(a_vec.indices) + [i + d for i in b_vec.indices]
    values = list(a_vec.values) + list(b_vec.values)
    dim = 2 * d
    if with_length:
        if scaler is None:
            raise ContractError("length features require a fitted LengthScaler")
        dim = 2 * d + 2
        za, zb = scaler.transform(a_len), scaler.transform(b_len)
        if za != 0.0:
            indices.append(2 * d)
            values.append(za)
        if zb != 0.0:
            indices.append(2 * d + 1)
            values.append(zb)
    return SparseVector(tuple(indices), tuple(values), dim)


def version_features(
    text: str,
    vocab: Vocabulary | None = None,
    scaler: LengthScaler | None = None,
    embedding: np.ndarray | None = None,
) -> SparseVector:
    """Per-version representation for the pairwise ranker.

    Either BOW (plus a standardized length slot when a scaler is given) or a
    supplied dense embedding.
    """
    if embedding is not None:
        return sparse_from_dense(np.asarray(embedding, dtype=float))
    if vocab is None:
        raise ContractError("version_features needs a vocabulary or an embedding")
    bow = bow_vector(text, vocab)
    if scaler is None:
        return bow
    z = scaler.transform(length_feature(text))
    indices = list(bow.indices)
    values = list(bow.values)
    if z != 0.0:
        indices.append(vocab.size)
        values.append(z)
    return SparseVector(tuple(indices), tuple(values), vocab.size + 1)


_EMBED_HEADER = re.compile(r"^#dim=(\d+) normalized=(true|false)$")


@dataclass
class EmbeddingStore:
    """version_id -> dense vector, all of one dimension."""

    vectors: dict[str, np.ndarray]
    dim: int
    normalized: bool

    def lookup(self, version_id: str) -> np.ndarray:
        try:
            return self.vectors[version_id]
        except KeyError:
            raise NotFoundError(f"no embedding for version_id {version_id!r}") from None

    def __contains__(self, version_id: str) -> bool:
        return version_id in self.vectors


def load_embeddings(source: str | Path | Iterable[str]) -> EmbeddingStore:
    """Load an embedding file: header ``#dim=<d> normalized=<bool>``, then
    one ``version_id<TAB>f1..fd`` row per version.

    Vectors are L2-normalized at load time unless the header declares them
    normalized already.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_embeddings(list(fh))
    lines = iter(source)
    try:
        header = next(lines).rstrip("\n")
    except StopIteration:
        raise ParseError("empty embedding stream", 1) from None
    match = _EMBED_HEADER.match(header)
    if match is None:
        raise ParseError("expected header '#dim=<d> normalized=<true|false>'", 1)
    dim = int(match.group(1))
    declared_normalized = match.group(2) == "true"
    vectors: dict[str, np.ndarray] = {}
    for line_no, line in enumerate(lines, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != dim + 1:
            raise ParseError(
                f"expected {dim} values for {fields[0]!r}, got {len(fields) - 1}", line_no
            )
        try:
            vec = np.array([float(x) for x in fields[1:]])
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", line_no) from exc
        if not declared_normalized:
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec = vec / norm
        vec.setflags(write=False)
        vectors[fields[0]] = vec
    return EmbeddingStore(vectors, dim, normalized=True)


def lookup(store: EmbeddingStore, version_id: str) -> np.ndarray:
    return store.lookup(version_id)


@dataclass(frozen=True)
class CSRMatrix:
    """Minimal CSR matrix for the in-module optimizers."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    shape: tuple[int, int]

    @property
    def n_rows(self) -> int:
        return self.shape[0]

    def row_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rows), np.diff(self.indptr))

    def take_rows(self, rows: Sequence[int]) -> "CSRMatrix":
        indptr = [0]
        chunks_idx: list[np.ndarray] = []
        chunks_val: list[np.ndarray] = []
        for r in rows:
            s, e = self.indptr[r], self.indptr[r + 1]
            chunks_idx.append(self.indices[s:e])
            chunks_val.append(self.values[s:e])
            indptr.append(indptr[-1] + (e - s))
        indices = np.concatenate(chunks_idx) if chunks_idx else np.empty(0, dtype=np.int64)
        values = np.concatenate(chunks_val) if chunks_val else np.empty(0)
        return CSRMatrix(np.asarray(indptr, dtype=np.int64), indices, values, (len(rows), self.shape[1]))


def stack_sparse(vectors: Sequence[SparseVector]) -> CSRMatrix:
    if not vectors:
        raise ContractError("cannot stack zero vectors")
    dim = vectors[0].dim
    for v in vectors:
        if v.dim != dim:
            raise ContractError(f"dimension mismatch: {v.dim} != {dim}")
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + v.nnz
    indices = np.empty(indptr[-1], dtype=np.int64)
    values = np.empty(indptr[-1])
    for i, v in enumerate(vectors):
        indices[indptr[i] : indptr[i + 1]] = v.indices
        values[indptr[i] : indptr[i + 1]] = v.values
    return CSRMatrix(indptr, indices, values, (len(vectors), dim))


def csr_matvec(matrix: CSRMatrix, weights: np.ndarray) -> np.ndarray:
    """X @ w for CSR X."""
    if matrix.values.size == 0:
        return np.zeros(matrix.n_rows)
    return np.bincount(
        matrix.row_of(), weights=matrix.values * weights[matrix.indices], minlength=matrix.n_rows
    )


def csr_rmatvec(matrix: CSRMatrix, row_coeffs: np.ndarray) -> np.ndarray:
    """X.T @ c for CSR X and per-row coefficients c."""
    if matrix.values.size == 0:
        return np.zeros(matrix.shape[1])
    return np.bincount(
        matrix.indices,
        weights=matrix.values * row_coeffs[matrix.row_of()],
        minlength=matrix.shape[1],
    )
