"""Full-chain quality ranking.

Two routes from pairwise judgments to a ranking of all versions of a claim:
maximum-likelihood strengths under the Bradley-Terry-Luce model (fitted with
the minorization-maximization fixed point over a pairwise win-probability
matrix), and a linear ranker trained with a pairwise hinge loss on ordered
feature differences.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import RevisionChain, RevisionType, RevisionTypeLabel
from .errors import ContractError
from .features import CSRMatrix, SparseVector, csr_matvec, csr_rmatvec, sparse_dot, sparse_sub, stack_sparse
from .models import PairModel, predict_prob
from .pairs import MULTI_EDGE, ClaimPair


@dataclass(frozen=True)
class ScoreMatrix:
    """n x n pairwise win-probability matrix with zero diagonal.

    m[i][j] is the probability that version i is better than version j;
    off-diagonal cells are complementary: m[i][j] + m[j][i] = 1.
    """

    m: np.ndarray

    @property
    def n(self) -> int:
        return self.m.shape[0]

    def validate(self, tol: float = 1e-9) -> None:
        m = self.m
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ContractError("score matrix must be square with n >= 2")
        if np.any(np.abs(np.diag(m)) > 0):
            raise ContractError("score matrix diagonal must be zero")
        if np.any(m < 0) or np.any(m > 1):
            raise ContractError("score matrix entries must lie in [0, 1]")
        off = ~np.eye(self.n, dtype=bool)
        if np.max(np.abs((m + m.T)[off] - 1.0)) > tol:
            raise ContractError("off-diagonal entries must be complementary")


@dataclass(frozen=True)
class BTLStrengths:
    """Positive item strengths normalized to sum 1."""

    values: np.ndarray
    converged: bool
    iterations: int


@dataclass(frozen=True)
class Ranking:
    """Permutation of 0..n-1, best version first."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(len(self.order))):
            raise ContractError("ranking must be a permutation of 0..n-1")

    @property
    def n(self) -> int:
        return len(self.order)

    def position(self, item: int) -> int:
        return self.order.index(item)


def _probe_pair(chain: RevisionChain, first_idx: int, second_idx: int) -> ClaimPair:
    lo, hi = min(first_idx, second_idx), max(first_idx, second_idx)
    if hi - lo == 1:
        edge = chain.versions[hi].revision_type or RevisionTypeLabel(RevisionType.NONE, "")
    else:
        edge = MULTI_EDGE
    return ClaimPair(
        chain_id=chain.chain_id,
        first=chain.versions[first_idx],
        second=chain.versions[second_idx],
        label=second_idx > first_idx,
        distance=hi - lo,
        revision_type=edge,
        categories=chain.categories,
    )


PairScorer = Callable[[ClaimPair], float]


def build_score_matrix(chain: RevisionChain, model: PairModel | PairScorer) -> ScoreMatrix:
    """Score every ordered version pair with the model and symmetrize.

    m[i][j] averages the model's two feed orders, (p + (1 - q)) / 2 with
    p = P(i better | fed (j, i)) and q = P(j better | fed (i, j)), which
    enforces complementarity even for order-asymmetric models. ``model`` may
    be a PairModel or any callable mapping a pair to P(second better).
    """
    n = len(chain.versions)
    if n < 2:
        raise ContractError("score matrices need chains of at least 2 versions")
    score: PairScorer = model if callable(model) else (lambda p: predict_prob(model, p))
    fed = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                fed[i, j] = score(_probe_pair(chain, i, j))
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                m[i, j] = (fed[j, i] + (1.0 - fed[i, j])) / 2.0
    return ScoreMatrix(m)


def btl_fit(
    matrix: ScoreMatrix,
    tol: float = 1e-9,
    max_iter: int = 10000,
    epsilon: float = 1e-6,
) -> BTLStrengths:
    """Maximum-likelihood strengths via the minorization-maximization update.

    Matrix entries plus epsilon act as fractional win counts; the epsilon
    smoothing keeps the comparison graph connected so the MLE exists. The
    sweep renormalizes strengths and stops when the largest change drops
    below ``tol``; hitting ``max_iter`` returns the best iterate flagged
    non-converged.
    """
    matrix.validate()
    n = matrix.n
    wins_matrix = matrix.m + epsilon
    np.fill_diagonal(wins_matrix, 0.0)
    total_wins = wins_matrix.sum(axis=1)
    comparisons = wins_matrix + wins_matrix.T

    strengths = np.full(n, 1.0 / n)
    for iteration in range(1, max_iter + 1):
        denom = comparisons / (strengths[:, None] + strengths[None, :])
        np.fill_diagonal(denom, 0.0)
        updated = total_wins / denom.sum(axis=1)
        updated /= updated.sum()
        delta = float(np.max(np.abs(updated - strengths)))
        strengths = updated
        if delta < tol:
            strengths.setflags(write=False)
            return BTLStrengths(strengths, True, iteration)
    strengths.setflags(write=False)
    return BTLStrengths(strengths, False, max_iter)


def btl_rank(strengths: BTLStrengths, prefer_later_on_tie: bool = True) -> Ranking:
    """Sort by strength descending.

    Exact ties go to the higher version index by default (the later version
    is presumed better); pass ``prefer_later_on_tie=False`` to invert that.
    """
    values = strengths.values
    tie = -1 if prefer_later_on_tie else 1
    order = sorted(range(len(values)), key=lambda i: (-values[i], tie * i))
    return Ranking(tuple(order))


def random_ranking(n: int, rng: random.Random) -> Ranking:
    """Uniformly random permutation; the random ranking baseline."""
    order = list(range(n))
    rng.shuffle(order)
    return Ranking(tuple(order))


@dataclass(frozen=True)
class LinearRanker:
    weights: np.ndarray
    C: float
    seed: int


def ordered_difference_vectors(
    chains_features: Sequence[Sequence[SparseVector]],
) -> list[SparseVector]:
    """One (x_later - x_earlier) difference per ordered version pair."""
    diffs: list[SparseVector] = []
    for per_version in chains_features:
        n = len(per_version)
        for i in range(n):
            for j in range(i + 1, n):
                diffs.append(sparse_sub(per_version[j], per_version[i]))
    return diffs


def hinge_objective(weights: np.ndarray, diffs: CSRMatrix, C: float) -> float:
    """0.5*||w||^2 + C * sum of hinge losses max(0, 1 - w.diff)."""
    margins = csr_matvec(diffs, weights)
    hinges = np.maximum(0.0, 1.0 - margins)
    return 0.5 * float(weights @ weights) + C * float(hinges.sum())


def hinge_gradient(weights: np.ndarray, diffs: CSRMatrix, C: float) -> np.ndarray:
    margins = csr_matvec(diffs, weights)
    active = (margins < 1.0).astype(float)
    return weights - C * csr_rmatvec(diffs, active)


def svmrank_train(
    chains_features: Sequence[Sequence[SparseVector]],
    C: float = 1.0,
    epochs: int = 20,
    seed: int = 0,
    learning_rate: float = 0.01,
    batch_size: int | None = None,
) -> LinearRanker:
    """Train the linear ranker by seeded subgradient descent.

    ``batch_size`` None runs full-batch epochs with a diminishing step
    (learning_rate / (1 + epoch)); a positive value runs seeded mini-batch
    subgradient steps instead. Deterministic per seed either way.
    """
    if C <= 0:
        raise ContractError("C must be > 0")
    diffs = ordered_difference_vectors(chains_features)
    if not diffs:
        raise ContractError("no trainable ordered pairs (all chains length 1?)")
    X = stack_sparse(diffs)
    weights = np.zeros(X.shape[1])
    rng = random.Random(seed)
    if batch_size is None:
        for epoch in range(epochs):
            step = learning_rate / (1.0 + epoch)
            weights = weights - step * hinge_gradient(weights, X, C)
    else:
        order = list(range(X.n_rows))
        for epoch in range(epochs):
            rng.shuffle(order)
            step = learning_rate / (1.0 + epoch)
            for start in range(0, len(order), batch_size):
                batch = X.take_rows(order[start : start + batch_size])
                # scale C so the batch subgradient is an unbiased estimate
                # of the full-objective subgradient
                scaled_c = C * (X.n_rows / batch.n_rows)
                weights = weights - step * hinge_gradient(weights, batch, scaled_c)
    weights.setflags(write=False)
    return LinearRanker(weights=weights, C=C, seed=seed)


def svmrank_rank(
    ranker: LinearRanker,
    chain_features: Sequence[SparseVector],
    prefer_later_on_tie: bool = True,
) -> Ranking:
    """Sort versions by w.x descending; tie rule as in btl_rank."""
    scores = [sparse_dot(vec, ranker.weights) for vec in chain_features]
    tie = -1 if prefer_later_on_tie else 1
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], tie * i))
    return Ranking(tuple(order))


RankFn = Callable[[RevisionChain], Ranking]


def btl_rank_fn(model: PairModel | PairScorer, tol: float = 1e-9, epsilon: float = 1e-6) -> RankFn:
    def rank(chain: RevisionChain) -> Ranking:
        return btl_rank(btl_fit(build_score_matrix(chain, model), tol=tol, epsilon=epsilon))

    return rank
