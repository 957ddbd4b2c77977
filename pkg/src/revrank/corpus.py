"""Claim revision chains: data model, record parsing, and corpus filters.

A corpus is a set of revision chains, each an ordered version history of one
claim. Chains arrive as line-delimited JSON records and pass through three
filters before any dataset is derived from them: declared-language selection,
removal of uninformative short versions, and severing of edits that change
the claim's meaning (low lexical similarity between consecutive versions).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ContractError, ParseError, ValidationError


class RevisionType(Enum):
    """Canonical categories for the free-form revision labels."""

    CLARIFICATION = "Clarification"
    TYPO_GRAMMAR = "TypoGrammar"
    LINKS = "Links"
    CHANGED_MEANING = "ChangedMeaning"
    MISC = "Misc"
    NONE = "None"


@dataclass(frozen=True)
class RevisionTypeLabel:
    """A canonical revision category plus the raw label it came from.

    ``canonical`` is ``RevisionType.NONE`` exactly when the raw label is
    blank (empty or whitespace-only).
    """

    canonical: RevisionType
    raw: str = ""


@dataclass(frozen=True)
class ClaimVersion:
    """One version of a claim. ``revision_type`` is None at index 0."""

    version_id: str
    text: str
    index: int
    revision_type: RevisionTypeLabel | None = None


@dataclass(frozen=True)
class RevisionChain:
    """Ordered version history of one claim, oldest first."""

    chain_id: str
    debate_id: str
    categories: tuple[str, ...]
    language: str
    versions: tuple[ClaimVersion, ...]


@dataclass(frozen=True)
class Corpus:
    """Immutable set of revision chains plus a build log of applied filters."""

    chains: tuple[RevisionChain, ...]
    provenance: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.chains)


# Keyword rules are applied in order; the first match wins. Blank labels map
# to NONE and anything unmatched to MISC. "clari" covers clarification,
# clarify, and clarity spellings.
_KEYWORD_RULES: tuple[tuple[tuple[str, ...], RevisionType], ...] = (
    (("clari",), RevisionType.CLARIFICATION),
    (("typo", "grammar", "spell"), RevisionType.TYPO_GRAMMAR),
    (("link", "source"), RevisionType.LINKS),
    (("meaning",), RevisionType.CHANGED_MEANING),
)


def normalize_revision_type(raw: str) -> RevisionTypeLabel:
    """Map a free-form revision label onto its canonical category."""
    lowered = raw.lower()
    if not lowered.strip():
        return RevisionTypeLabel(RevisionType.NONE, raw)
    for keywords, canonical in _KEYWORD_RULES:
        if any(k in lowered for k in keywords):
            return RevisionTypeLabel(canonical, raw)
    return RevisionTypeLabel(RevisionType.MISC, raw)


def tokenize(text: str) -> list[str]:
    """Canonical tokenization used corpus-wide.

    Unicode-lowercase, split on whitespace, strip leading/trailing
    non-alphanumeric characters from each token, drop empty tokens.
    """
    tokens: list[str] = []
    for tok in text.lower().split():
        start, end = 0, len(tok)
        while start < end and not tok[start].isalnum():
            start += 1
        while end > start and not tok[end - 1].isalnum():
            end -= 1
        if start < end:
            tokens.append(tok[start:end])
    return tokens


def text_similarity(a: str, b: str) -> float:
    """Cosine similarity of token-count vectors, in [0, 1].

    Both texts empty of tokens -> 1.0; exactly one empty -> 0.0.
    """
    ca, cb = Counter(tokenize(a)), Counter(tokenize(b))
    if not ca and not cb:
        return 1.0
    if not ca or not cb:
        return 0.0
    if ca == cb:
        return 1.0
    dot = sum(n * cb.get(tok, 0) for tok, n in ca.items())
    norm = math.sqrt(sum(n * n for n in ca.values())) * math.sqrt(
        sum(n * n for n in cb.values())
    )
    return min(1.0, dot / norm)


def _parse_chain_record(line: str, line_no: int) -> RevisionChain:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
    if not isinstance(record, dict):
        raise ParseError("chain record must be a JSON object", line_no)
    for key in ("chain_id", "debate_id", "categories", "language", "versions"):
        if key not in record:
            raise ParseError(f"missing field {key!r}", line_no)

    chain_id = record["chain_id"]
    debate_id = record["debate_id"]
    language = record["language"]
    if not isinstance(chain_id, str) or not chain_id:
        raise ParseError("chain_id must be a non-empty string", line_no)
    if not isinstance(debate_id, str):
        raise ParseError("debate_id must be a string", line_no)
    if not isinstance(language, str):
        raise ParseError("language must be a string", line_no)

    categories = record["categories"]
    if (
        not isinstance(categories, list)
        or not categories
        or not all(isinstance(c, str) for c in categories)
    ):
        raise ParseError("categories must be a non-empty list of strings", line_no)

    raw_versions = record["versions"]
    if not isinstance(raw_versions, list) or not raw_versions:
        raise ParseError("versions must be a non-empty list", line_no)

    versions: list[ClaimVersion] = []
    seen_ids: set[str] = set()
    for idx, rv in enumerate(raw_versions):
        if not isinstance(rv, dict):
            raise ParseError(f"version {idx} must be an object", line_no)
        for key in ("version_id", "text"):
            if key not in rv:
                raise ParseError(f"version {idx} missing field {key!r}", line_no)
        vid, text = rv["version_id"], rv["text"]
        if not isinstance(vid, str) or not vid:
            raise ParseError(f"version {idx}: version_id must be non-empty", line_no)
        if not isinstance(text, str) or len(text) < 1:
            raise ParseError(f"version {idx}: text must be non-empty", line_no)
        if vid in seen_ids:
            raise ParseError(f"duplicate version_id {vid!r}", line_no)
        seen_ids.add(vid)
        label = None
        if idx > 0:
            label = normalize_revision_type(str(rv.get("revision_type", "")))
        versions.append(ClaimVersion(vid, text, idx, label))

    return RevisionChain(chain_id, debate_id, tuple(categories), language, tuple(versions))


def parse_corpus(stream: Iterable[str]) -> Corpus:
    """Parse a line-delimited chain record stream into a Corpus.

    Lines starting with '#' are provenance comments and are collected, not
    parsed. Preserves input order; version indices are assigned 0..n-1 in
    file order. Raises ParseError (with line number) on malformed lines and
    ValidationError on duplicate chain ids.
    """
    chains: list[RevisionChain] = []
    provenance: list[str] = []
    seen: set[str] = set()
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            provenance.append(line[2:] if line.startswith("# ") else line[1:])
            continue
        chain = _parse_chain_record(line, line_no)
        if chain.chain_id in seen:
            raise ValidationError(
                f"duplicate chain_id {chain.chain_id!r} at line {line_no}"
            )
        seen.add(chain.chain_id)
        chains.append(chain)
    return Corpus(tuple(chains), tuple(provenance))


def serialize_corpus(corpus: Corpus) -> Iterator[str]:
    """Yield the corpus as record lines (provenance first, as comments)."""
    for note in corpus.provenance:
        yield f"# {note}"
    for chain in corpus.chains:
        yield chain_to_record(chain)


def chain_to_record(chain: RevisionChain) -> str:
    record = {
        "chain_id": chain.chain_id,
        "debate_id": chain.debate_id,
        "categories": list(chain.categories),
        "language": chain.language,
        "versions": [
            {
                "version_id": v.version_id,
                "text": v.text,
                "revision_type": v.revision_type.raw if v.revision_type else "",
            }
            for v in chain.versions
        ],
    }
    return json.dumps(record, ensure_ascii=False)


def load_corpus(path: str | Path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in serialize_corpus(corpus):
            fh.write(line + "\n")


def _reindexed(chain: RevisionChain, versions: list[ClaimVersion], chain_id: str | None = None) -> RevisionChain:
    """Rebuild a chain with contiguous indices; the new head loses its edge label."""
    rebuilt = [
        ClaimVersion(v.version_id, v.text, i, None if i == 0 else v.revision_type)
        for i, v in enumerate(versions)
    ]
    return RevisionChain(
        chain_id or chain.chain_id,
        chain.debate_id,
        chain.categories,
        chain.language,
        tuple(rebuilt),
    )


def filter_language(corpus: Corpus, language: str = "en") -> Corpus:
    """Keep only chains whose declared language matches exactly."""
    kept = tuple(ch for ch in corpus.chains if ch.language == language)
    note = (
        f"filter_language(language={language!r}): kept {len(kept)} of "
        f"{len(corpus.chains)} chains"
    )
    return Corpus(kept, corpus.provenance + (note,))


def filter_short_claims(corpus: Corpus, min_chars: int = 4) -> Corpus:
    """Drop versions shorter than ``min_chars`` characters, re-indexing chains.

    Chains left without versions are dropped entirely.
    """
    if min_chars < 1:
        raise ContractError("min_chars must be >= 1")
    kept_chains: list[RevisionChain] = []
    removed_versions = 0
    dropped_chains = 0
    for chain in corpus.chains:
        kept = [v for v in chain.versions if len(v.text) >= min_chars]
        removed_versions += len(chain.versions) - len(kept)
        if not kept:
            dropped_chains += 1
            continue
        if len(kept) == len(chain.versions):
            kept_chains.append(chain)
        else:
            kept_chains.append(_reindexed(chain, kept))
    note = (
        f"filter_short_claims(min_chars={min_chars}): removed {removed_versions} "
        f"versions, dropped {dropped_chains} chains"
    )
    return Corpus(tuple(kept_chains), corpus.provenance + (note,))


def filter_meaning_changes(corpus: Corpus, threshold: float = 0.8) -> Corpus:
    """Sever chains at consecutive pairs whose similarity falls below threshold.

    Each maximal unsevered segment becomes a chain of its own with a derived
    id "<old>#k"; chains with no severed edge are kept unchanged. Length-1
    segments are retained.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ContractError("threshold must be in [0, 1]")
    out_chains: list[RevisionChain] = []
    severed_edges = 0
    split_chains = 0
    for chain in corpus.chains:
        versions = chain.versions
        cuts = [
            i
            for i in range(len(versions) - 1)
            if text_similarity(versions[i].text, versions[i + 1].text) < threshold
        ]
        if not cuts:
            out_chains.append(chain)
            continue
        severed_edges += len(cuts)
        split_chains += 1
        bounds = [0] + [c + 1 for c in cuts] + [len(versions)]
        for k in range(len(bounds) - 1):
            segment = list(versions[bounds[k] : bounds[k + 1]])
            out_chains.append(_reindexed(chain, segment, f"{chain.chain_id}#{k}"))
    note = (
        f"filter_meaning_changes(threshold={threshold}): severed {severed_edges} "
        f"edges across {split_chains} chains"
    )
    return Corpus(tuple(out_chains), corpus.provenance + (note,))
