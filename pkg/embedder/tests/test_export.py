"""Embedding export: determinism, format, and the primary-side round-trip."""

import json

import numpy as np
import pytest

from embedder.cli import main
from embedder.encoders import EncoderSpec, HashingEncoder, make_encoder
from embedder.errors import CorpusFormatError, StartupError
from embedder.export import export_embeddings, read_corpus_versions


def write_corpus(path, chains):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# test fixture\n")
        for chain_id, texts in chains:
            record = {
                "chain_id": chain_id,
                "debate_id": "d",
                "categories": ["Politics"],
                "language": "en",
                "versions": [
                    {"version_id": f"{chain_id}.v{i}", "text": t, "revision_type": ""}
                    for i, t in enumerate(texts)
                ],
            }
            fh.write(json.dumps(record) + "\n")


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_corpus(
        path,
        [
            ("c1", ["dogs help people", "dogs help people better"]),
            ("c2", ["identical claim text", "identical claim text"]),
            ("c3", ["a third unrelated claim about rivers"]),
        ],
    )
    return path


def parse_embedding_file(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0]
    assert header.startswith("#dim=")
    dim = int(header.split()[0].removeprefix("#dim="))
    normalized = header.split()[1] == "normalized=true"
    rows = {}
    for line in lines[1:]:
        fields = line.split("\t")
        rows[fields[0]] = np.array([float(x) for x in fields[1:]])
    return dim, normalized, rows


class TestHashingEncoder:
    def test_deterministic(self):
        enc = HashingEncoder(32)
        a = enc.encode(["some claim text"])
        b = enc.encode(["some claim text"])
        np.testing.assert_array_equal(a, b)

    def test_different_texts_differ(self):
        enc = HashingEncoder(64)
        a, b = enc.encode(["first claim here", "second claim there"])
        assert not np.array_equal(a, b)

    def test_bad_spec_is_startup_error(self):
        with pytest.raises(StartupError):
            make_encoder(EncoderSpec(model="hash:zero"))
        with pytest.raises(StartupError):
            make_encoder(EncoderSpec(model="hash:0"))


class TestReadCorpus:
    def test_collects_all_versions_in_order(self, corpus_path):
        versions = read_corpus_versions(corpus_path)
        assert [vid for vid, _ in versions] == [
            "c1.v0", "c1.v1", "c2.v0", "c2.v1", "c3.v0",
        ]

    def test_bad_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"chain_id": "c", "versions": [{"text": "x"}]}\n')
        with pytest.raises(CorpusFormatError) as err:
            read_corpus_versions(path)
        assert err.value.line_no == 1

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{nope\n")
        with pytest.raises(CorpusFormatError):
            read_corpus_versions(path)


class TestExport:
    def test_identical_texts_identical_vectors(self, corpus_path, tmp_path):
        out = tmp_path / "emb.tsv"
        export_embeddings(corpus_path, EncoderSpec("hash:64", normalize=True), out)
        _, _, rows = parse_embedding_file(out)
        np.testing.assert_array_equal(rows["c2.v0"], rows["c2.v1"])

    def test_header_dim_matches_rows(self, corpus_path, tmp_path):
        out = tmp_path / "emb.tsv"
        stats = export_embeddings(corpus_path, EncoderSpec("hash:48"), out)
        dim, normalized, rows = parse_embedding_file(out)
        assert dim == stats.dim == 48
        assert not normalized
        assert all(len(vec) == 48 for vec in rows.values())
        assert len(rows) == stats.versions == 5

    def test_normalized_unit_norms(self, corpus_path, tmp_path):
        out = tmp_path / "emb.tsv"
        export_embeddings(corpus_path, EncoderSpec("hash:64", normalize=True), out)
        _, normalized, rows = parse_embedding_file(out)
        assert normalized
        for vec in rows.values():
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-5

    def test_reexport_byte_identical(self, corpus_path, tmp_path):
        out = tmp_path / "emb.tsv"
        spec = EncoderSpec("hash:64", batch_size=2, normalize=True)
        export_embeddings(corpus_path, spec, out)
        first = out.read_bytes()
        export_embeddings(corpus_path, spec, out)
        assert out.read_bytes() == first

    def test_batch_size_does_not_change_output(self, corpus_path, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        export_embeddings(corpus_path, EncoderSpec("hash:32", batch_size=1), a)
        export_embeddings(corpus_path, EncoderSpec("hash:32", batch_size=64), b)
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip_through_primary_loader(self, corpus_path, tmp_path):
        features = pytest.importorskip("revrank.features")
        out = tmp_path / "emb.tsv"
        export_embeddings(corpus_path, EncoderSpec("hash:64", normalize=True), out)
        store = features.load_embeddings(out)
        assert store.dim == 64
        for vid, _ in read_corpus_versions(corpus_path):
            vec = store.lookup(vid)
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-5


class TestHubBackend:
    def test_unloadable_model_is_startup_error(self):
        with pytest.raises(StartupError):
            make_encoder(EncoderSpec(model="hub:this-model-does-not-exist-anywhere"))


class TestCli:
    def test_end_to_end(self, corpus_path, tmp_path, capsys):
        out = tmp_path / "emb.tsv"
        code = main(
            ["--corpus", str(corpus_path), "--model", "hash:16", "--out", str(out), "--normalize"]
        )
        assert code == 0
        assert "wrote 5 vectors of dimension 16" in capsys.readouterr().out
        dim, normalized, rows = parse_embedding_file(out)
        assert dim == 16 and normalized and len(rows) == 5

    def test_usage_error(self):
        assert main(["--corpus", "x"]) == 1

    def test_missing_corpus_is_data_error(self, tmp_path):
        code = main(["--corpus", str(tmp_path / "nope"), "--model", "hash:8", "--out", str(tmp_path / "o")])
        assert code == 2

    def test_bad_model_is_startup_error_code(self, corpus_path, tmp_path):
        code = main(["--corpus", str(corpus_path), "--model", "hash:bad", "--out", str(tmp_path / "o")])
        assert code == 3
