"""Batch-encode a corpus file and write the embedding TSV.

The corpus file is UTF-8 JSON lines, one chain per line, with a
``versions`` list of ``{version_id, text, ...}`` objects; ``#`` lines are
comments. The output starts with ``#dim=<d> normalized=<true|false>``
followed by one ``version_id<TAB>f1..fd`` row per version, floats fixed to
6 decimals so re-exports are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import EncoderSpec, make_encoder
from .errors import CorpusFormatError, EncodingError


@dataclass(frozen=True)
class ExportStats:
    versions: int
    dim: int
    normalized: bool


def read_corpus_versions(path: str | Path) -> list[tuple[str, str]]:
    """Collect (version_id, text) in file order; first occurrence wins."""
    versions: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc.msg}", line_no) from exc
            raw_versions = record.get("versions")
            if not isinstance(raw_versions, list):
                raise CorpusFormatError("chain record has no versions list", line_no)
            for rv in raw_versions:
                if not isinstance(rv, dict) or "version_id" not in rv or "text" not in rv:
                    raise CorpusFormatError("version needs version_id and text", line_no)
                vid = str(rv["version_id"])
                if vid in seen:
                    continue
                seen.add(vid)
                versions.append((vid, str(rv["text"])))
    return versions


def export_embeddings(
    corpus_path: str | Path, spec: EncoderSpec, out_path: str | Path
) -> ExportStats:
    """Encode every version and write the embedding file."""
    encoder = make_encoder(spec)
    versions = read_corpus_versions(corpus_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={encoder.dim} normalized={'true' if spec.normalize else 'false'}\n")
        for start in range(0, len(versions), spec.batch_size):
            batch = versions[start : start + spec.batch_size]
            try:
                vectors = encoder.encode([text for _, text in batch])
            except Exception as exc:
                raise EncodingError(str(exc), batch[0][0]) from exc
            for (vid, _), vec in zip(batch, vectors):
                if vec.shape != (encoder.dim,):
                    raise EncodingError(
                        f"encoder returned shape {vec.shape}, expected ({encoder.dim},)", vid
                    )
                if spec.normalize:
                    norm = float(np.linalg.norm(vec))
                    if norm > 0.0:
                        vec = vec / norm
                fh.write(vid + "\t" + "\t".join(f"{v:.6f}" for v in vec) + "\n")
    return ExportStats(len(versions), encoder.dim, spec.normalize)
