"""Leakage-free train/test partitions of a corpus.

Random splits keep every chain whole on one side; cross-category folds hold
out one debate category at a time, excluding from training any chain that so
much as lists the held-out category.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, RevisionChain
from .errors import ContractError, ParseError

OTHER_CATEGORY = "other"


@dataclass(frozen=True)
class SplitSpec:
    kind: str  # "random" or "xcat"
    train_ratio: float = 0.8
    held_out_category: str = ""
    seed: int = 0
    k: int = 20


def split_corpus(corpus: Corpus, spec: SplitSpec) -> list[tuple[str, Corpus, Corpus]]:
    """Resolve a SplitSpec into (fold, train, test) triples.

    Random specs yield one "random" fold; cross-category specs yield one
    fold per top-k category, or just the named fold when
    ``held_out_category`` is set.
    """
    if spec.kind == "random":
        train, test = random_split(corpus, spec.train_ratio, spec.seed)
        return [("random", train, test)]
    if spec.kind != "xcat":
        raise ContractError(f"unknown split kind {spec.kind!r}")
    folds = cross_category_splits(corpus, spec.k)
    if spec.held_out_category:
        folds = [f for f in folds if f[0] == spec.held_out_category]
        if not folds:
            raise ContractError(
                f"{spec.held_out_category!r} is not a top-{spec.k} category"
            )
    return folds


def random_split(corpus: Corpus, ratio: float = 0.8, seed: int = 0) -> tuple[Corpus, Corpus]:
    """Chain-grouped random split: floor(ratio*N) chains train, rest test."""
    if not corpus.chains:
        raise ContractError("cannot split an empty corpus")
    if not 0.0 < ratio < 1.0:
        raise ContractError("ratio must be in (0, 1)")
    order = list(corpus.chains)
    random.Random(seed).shuffle(order)
    # epsilon guards the documented floor(ratio*N) against float artifacts
    cut = math.floor(ratio * len(order) + 1e-9)
    note = f"random_split(ratio={ratio}, seed={seed})"
    train = Corpus(tuple(order[:cut]), corpus.provenance + (f"{note}: train",))
    test = Corpus(tuple(order[cut:]), corpus.provenance + (f"{note}: test",))
    return train, test


def top_categories(corpus: Corpus, k: int = 20) -> list[str]:
    """The k categories listed by the most chains, ties broken lexicographically."""
    if k < 1:
        raise ContractError("k must be >= 1")
    counts: Counter[str] = Counter()
    for chain in corpus.chains:
        counts.update(set(chain.categories))
    ranked = sorted(counts, key=lambda c: (-counts[c], c))
    return ranked[:k]


def primary_category(chain: RevisionChain, rank: dict[str, int]) -> str:
    """The highest-ranked of the chain's categories, or "other"."""
    best: int | None = None
    for cat in chain.categories:
        pos = rank.get(cat)
        if pos is not None and (best is None or pos < best):
            best = pos
    if best is None:
        return OTHER_CATEGORY
    for cat, pos in rank.items():
        if pos == best:
            return cat
    raise AssertionError("unreachable")


def cross_category_splits(
    corpus: Corpus, k: int = 20
) -> list[tuple[str, Corpus, Corpus]]:
    """Leave-one-category-out folds over the top-k categories.

    Test of a fold: chains whose primary category is the held-out one.
    Train: chains whose category list does not contain it at all.
    """
    if not corpus.chains:
        raise ContractError("cannot split an empty corpus")
    tops = top_categories(corpus, k)
    rank = {cat: i for i, cat in enumerate(tops)}
    primaries = {chain.chain_id: primary_category(chain, rank) for chain in corpus.chains}
    folds: list[tuple[str, Corpus, Corpus]] = []
    for cat in tops:
        test = tuple(ch for ch in corpus.chains if primaries[ch.chain_id] == cat)
        train = tuple(ch for ch in corpus.chains if cat not in ch.categories)
        note = f"cross_category_splits(k={k}, held_out={cat!r})"
        folds.append(
            (
                cat,
                Corpus(train, corpus.provenance + (f"{note}: train",)),
                Corpus(test, corpus.provenance + (f"{note}: test",)),
            )
        )
    return folds


MANIFEST_HEADER = "chain_id\tfold\trole"


def write_split_manifest(
    rows: list[tuple[str, str, str]], path: str | Path, header_comments: tuple[str, ...] = ()
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        fh.write(MANIFEST_HEADER + "\n")
        for chain_id, fold, role in rows:
            fh.write(f"{chain_id}\t{fold}\t{role}\n")


def read_split_manifest(path: str | Path) -> list[tuple[str, str, str]]:
    rows: list[tuple[str, str, str]] = []
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != MANIFEST_HEADER:
                    raise ParseError("unexpected manifest header", line_no)
                header_seen = True
                continue
            fields = line.split("\t")
            if len(fields) != 3 or fields[2] not in ("train", "test"):
                raise ParseError("manifest rows are chain_id/fold/role", line_no)
            rows.append((fields[0], fields[1], fields[2]))
    return rows


def manifest_rows_random(train: Corpus, test: Corpus) -> list[tuple[str, str, str]]:
    rows = [(ch.chain_id, "random", "train") for ch in train.chains]
    rows += [(ch.chain_id, "random", "test") for ch in test.chains]
    return rows


def manifest_rows_folds(folds: list[tuple[str, Corpus, Corpus]]) -> list[tuple[str, str, str]]:
    rows: list[tuple[str, str, str]] = []
    for cat, train, test in folds:
        rows += [(ch.chain_id, cat, "train") for ch in train.chains]
        rows += [(ch.chain_id, cat, "test") for ch in test.chains]
    return rows
