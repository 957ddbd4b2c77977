"""Labeled claim-pair datasets derived from revision chains.

BASE pairs are consecutive versions; EXT pairs add every transitively
inferrable ordered pair. All generated pairs carry label=True ("the second
version is the better one"); `balance_pairs` adds the order-swapped
counterpart of every pair with label=False.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .corpus import (
    ClaimVersion,
    Corpus,
    RevisionChain,
    RevisionType,
    RevisionTypeLabel,
)
from .errors import ContractError, ParseError

# Composite marker for pairs spanning more than one revision step.
MULTI_EDGE = RevisionTypeLabel(RevisionType.MISC, raw="multi")

_NO_EDGE = RevisionTypeLabel(RevisionType.NONE, raw="")


class PairKind(Enum):
    BASE = "BASE"
    EXT = "EXT"


@dataclass(frozen=True)
class ClaimPair:
    """Two versions of one claim plus the better/worse label.

    ``label`` is True exactly when the second version is the later (and thus
    presumed better) one; ``distance`` is the number of revisions between the
    two versions, always positive.
    """

    chain_id: str
    first: ClaimVersion
    second: ClaimVersion
    label: bool
    distance: int
    revision_type: RevisionTypeLabel
    categories: tuple[str, ...]

    @property
    def type_key(self) -> str:
        """Grouping key: the canonical edge type, or "multi" beyond distance 1."""
        if self.distance > 1:
            return "multi"
        return self.revision_type.canonical.value


@dataclass(frozen=True)
class PairDataset:
    pairs: tuple[ClaimPair, ...]
    kind: PairKind
    balanced: bool = False

    def __len__(self) -> int:
        return len(self.pairs)


def _forward_pair(chain: RevisionChain, i: int, j: int) -> ClaimPair:
    # i < j: the second version is the later one, so the pair is labeled True.
    if j - i == 1:
        edge = chain.versions[j].revision_type or _NO_EDGE
    else:
        edge = MULTI_EDGE
    return ClaimPair(
        chain_id=chain.chain_id,
        first=chain.versions[i],
        second=chain.versions[j],
        label=True,
        distance=j - i,
        revision_type=edge,
        categories=chain.categories,
    )


def consecutive_pairs(chain: RevisionChain) -> list[ClaimPair]:
    """All (v_i, v_i+1) pairs of a chain; empty for single-version chains."""
    return [_forward_pair(chain, i, i + 1) for i in range(len(chain.versions) - 1)]


def transitive_pairs(chain: RevisionChain) -> list[ClaimPair]:
    """All ordered pairs (v_i, v_j) with i < j; n(n-1)/2 pairs for length n."""
    n = len(chain.versions)
    return [_forward_pair(chain, i, j) for i in range(n) for j in range(i + 1, n)]


def generate_pairs(corpus: Corpus, kind: PairKind) -> PairDataset:
    """Generate the all-true pair dataset of the given kind for a corpus."""
    gen = consecutive_pairs if kind is PairKind.BASE else transitive_pairs
    pairs: list[ClaimPair] = []
    for chain in corpus.chains:
        pairs.extend(gen(chain))
    return PairDataset(tuple(pairs), kind, balanced=False)


def balance_pairs(dataset: PairDataset, seed: int) -> PairDataset:
    """Add the order-swap of every pair with label False, then shuffle.

    Input pairs must all be labeled True. The output order is a
    seed-deterministic permutation of the doubled pair list.
    """
    for pair in dataset.pairs:
        if not pair.label:
            raise ContractError("balance_pairs expects an all-true input dataset")
    doubled: list[ClaimPair] = []
    for pair in dataset.pairs:
        doubled.append(pair)
        doubled.append(replace(pair, first=pair.second, second=pair.first, label=False))
    random.Random(seed).shuffle(doubled)
    return PairDataset(tuple(doubled), dataset.kind, balanced=True)


def distance_histogram(dataset: PairDataset) -> dict[int, int]:
    """Exact multiplicity count per revision distance."""
    return dict(Counter(pair.distance for pair in dataset.pairs))


def chain_max_distance_histogram(corpus: Corpus) -> dict[int, int]:
    """Chains counted by their maximum revision distance (length - 1)."""
    return dict(Counter(len(chain.versions) - 1 for chain in corpus.chains))


PAIR_TSV_HEADER = (
    "chain_id\tfirst_id\tsecond_id\tfirst_text\tsecond_text\t"
    "label\tdistance\trevision_type\tcategories"
)


def _clean_field(text: str) -> str:
    # The pair file is line/tab delimited; claim texts are single-line in the
    # release, but synthetic texts may not be.
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def write_pairs(dataset: PairDataset, path: str | Path, header_comments: tuple[str, ...] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        fh.write(f"# kind={dataset.kind.value} balanced={str(dataset.balanced).lower()}\n")
        fh.write(PAIR_TSV_HEADER + "\n")
        for p in dataset.pairs:
            fh.write(
                "\t".join(
                    (
                        p.chain_id,
                        p.first.version_id,
                        p.second.version_id,
                        _clean_field(p.first.text),
                        _clean_field(p.second.text),
                        "1" if p.label else "0",
                        str(p.distance),
                        p.type_key,
                        "|".join(p.categories),
                    )
                )
                + "\n"
            )


def _type_from_key(key: str) -> RevisionTypeLabel:
    if key == "multi":
        return MULTI_EDGE
    canonical = RevisionType(key)
    return RevisionTypeLabel(canonical, raw="" if canonical is RevisionType.NONE else key)


def read_pairs(path: str | Path) -> PairDataset:
    """Read a pair TSV back into a dataset.

    Version indices are reconstructed from label and distance (the file does
    not carry chain positions): the later version gets index = distance.
    """
    pairs: list[ClaimPair] = []
    kind = PairKind.BASE
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if "kind=EXT" in line:
                    kind = PairKind.EXT
                continue
            if not header_seen:
                if line != PAIR_TSV_HEADER:
                    raise ParseError("unexpected pair file header", line_no)
                header_seen = True
                continue
            fields = line.split("\t")
            if len(fields) != 9:
                raise ParseError(f"expected 9 fields, got {len(fields)}", line_no)
            chain_id, first_id, second_id, first_text, second_text = fields[:5]
            try:
                label = {"0": False, "1": True}[fields[5]]
                distance = int(fields[6])
                rev_type = _type_from_key(fields[7])
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad label/distance/revision_type: {exc}", line_no) from exc
            if distance < 1:
                raise ParseError("distance must be positive", line_no)
            if first_id == second_id:
                raise ParseError("pair members must be distinct versions", line_no)
            categories = tuple(c for c in fields[8].split("|") if c)
            first_idx, second_idx = (0, distance) if label else (distance, 0)
            pairs.append(
                ClaimPair(
                    chain_id=chain_id,
                    first=ClaimVersion(first_id, first_text, first_idx),
                    second=ClaimVersion(second_id, second_text, second_idx),
                    label=label,
                    distance=distance,
                    revision_type=rev_type,
                    categories=categories,
                )
            )
    n_true = sum(1 for p in pairs if p.label)
    balanced = bool(pairs) and n_true * 2 == len(pairs)
    return PairDataset(tuple(pairs), kind, balanced=balanced)
