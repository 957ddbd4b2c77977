"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import random

import pytest

from revrank.corpus import (
    ClaimVersion,
    Corpus,
    RevisionChain,
    normalize_revision_type,
)


def make_chain(
    chain_id: str,
    texts: list[str],
    categories: tuple[str, ...] = ("Politics",),
    language: str = "en",
    debate_id: str = "",
    types: list[str] | None = None,
) -> RevisionChain:
    versions = []
    for i, text in enumerate(texts):
        label = None
        if i > 0:
            raw = types[i - 1] if types else ""
            label = normalize_revision_type(raw)
        versions.append(ClaimVersion(f"{chain_id}.v{i}", text, i, label))
    return RevisionChain(
        chain_id, debate_id or f"d-{chain_id}", categories, language, tuple(versions)
    )


def make_corpus(chains: list[RevisionChain]) -> Corpus:
    return Corpus(tuple(chains))


def random_text(rng: random.Random, n_tokens: int = 6) -> str:
    words = ["dog", "cat", "tree", "river", "apple", "law", "city", "music", "light", "road"]
    return " ".join(rng.choice(words) for _ in range(n_tokens))


def synthetic_corpus(n_chains: int, seed: int = 0, max_len: int = 5) -> Corpus:
    rng = random.Random(seed)
    chains = []
    cats = ["Politics", "Ethics", "Education", "Entertainment", "Science"]
    for i in range(n_chains):
        length = rng.randint(1, max_len)
        texts = [random_text(rng, rng.randint(4, 9)) for _ in range(length)]
        chains.append(
            make_chain(
                f"c{i}",
                texts,
                categories=tuple(rng.sample(cats, rng.randint(1, 2))),
            )
        )
    return make_corpus(chains)


def write_embedding_file(path, rows: dict[str, list[float]], dim: int, normalized: bool = False):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={dim} normalized={'true' if normalized else 'false'}\n")
        for vid, values in rows.items():
            fh.write(vid + "\t" + "\t".join(f"{v:.6f}" for v in values) + "\n")


_ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def pytest_runtest_makereport(item, call):
    if call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, desc = marker.args
    if call.excinfo is None:
        outcome = "PASS"
    elif call.excinfo.errisinstance(pytest.skip.Exception):
        outcome = f"SKIP ({call.excinfo.value})"
    else:
        outcome = "FAIL"
    _ACCEPTANCE_RESULTS.append((num, desc, outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, outcome in sorted(set(_ACCEPTANCE_RESULTS)):
        terminalreporter.write_line(f"criterion {num:>2} [{outcome}] {desc}")
