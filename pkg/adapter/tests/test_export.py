import json
import struct

import numpy as np
import pytest

from rvhate_export import ExportError, ExportJob, HashEncoder, export_embeddings, read_jsonl
from rvhate_export.cli import main


def write_dataset(path, texts):
    with open(path, "w", encoding="utf-8") as fh:
        for i, text in enumerate(texts):
            fh.write(
                json.dumps({"id": f"d{i}", "text": text, "label": i % 2, "split": "train"}) + "\n"
            )
    return path


def parse_rvhe(path):
    """Independent parse straight from the format definition."""
    raw = open(path, "rb").read()
    magic, version, count, dim = struct.unpack("<4sIII", raw[:16])
    assert magic == b"RVHE" and version == 1
    vectors = np.frombuffer(raw[16:], dtype="<f4").reshape(count, dim)
    return vectors


class TestExport:
    def test_three_line_dataset(self, tmp_path):
        data = write_dataset(tmp_path / "d.jsonl", ["first text", "second text", "third text"])
        out = tmp_path / "d.rvhe"
        count, dim = export_embeddings(ExportJob(str(data), "hash:96", str(out)))
        assert (count, dim) == (3, 96)
        vectors = parse_rvhe(out)
        assert vectors.shape == (3, 96)

    def test_rows_unit_norm(self, tmp_path):
        data = write_dataset(tmp_path / "d.jsonl", ["alpha beta", "gamma", "delta epsilon zeta"])
        out = tmp_path / "d.rvhe"
        export_embeddings(ExportJob(str(data), "hash:64", str(out)))
        vectors = parse_rvhe(out)
        np.testing.assert_allclose(np.linalg.norm(vectors, axis=1), 1.0, atol=1e-6)

    def test_row_order_matches_line_order(self, tmp_path):
        texts = ["one sentence", "a different sentence", "yet another line"]
        data = write_dataset(tmp_path / "d.jsonl", texts)
        out = tmp_path / "d.rvhe"
        export_embeddings(ExportJob(str(data), "hash:64", str(out)))
        vectors = parse_rvhe(out)
        # spot-encode single lines and compare
        encoder = HashEncoder(64)
        for i, text in enumerate(texts):
            single = encoder.encode([text])[0]
            single = single / np.linalg.norm(single)
            np.testing.assert_allclose(vectors[i], single.astype(np.float32), atol=1e-6)

    def test_reexport_reproduces_vectors(self, tmp_path):
        data = write_dataset(tmp_path / "d.jsonl", [f"text number {i}" for i in range(10)])
        a, b = tmp_path / "a.rvhe", tmp_path / "b.rvhe"
        export_embeddings(ExportJob(str(data), "hash:128", str(a), batch_size=3))
        export_embeddings(ExportJob(str(data), "hash:128", str(b), batch_size=7))
        np.testing.assert_allclose(parse_rvhe(a), parse_rvhe(b), atol=1e-6)

    def test_failing_batch_names_index(self, tmp_path):
        data = write_dataset(tmp_path / "d.jsonl", [f"t {i}" for i in range(10)])

        class Flaky:
            dim = 8

            def encode(self, texts):
                if "t 7" in texts:
                    raise RuntimeError("encoder exploded")
                return np.zeros((len(texts), 8))

        with pytest.raises(ExportError) as err:
            export_embeddings(
                ExportJob(str(data), "unused", str(tmp_path / "d.rvhe"), batch_size=3),
                encoder=Flaky(),
            )
        assert err.value.batch_index == 2
        assert "batch 2" in str(err.value)

    def test_no_partial_file_on_failure(self, tmp_path):
        data = write_dataset(tmp_path / "d.jsonl", ["a", "b"])

        class Broken:
            dim = 4

            def encode(self, texts):
                raise RuntimeError("nope")

        out = tmp_path / "d.rvhe"
        with pytest.raises(ExportError):
            export_embeddings(ExportJob(str(data), "u", str(out)), encoder=Broken())
        assert not out.exists()

    def test_reader_helper(self, tmp_path):
        data = write_dataset(tmp_path / "d.jsonl", ["x", "y"])
        lines = read_jsonl(data)
        assert [line.id for line in lines] == ["d0", "d1"]

    def test_bad_dataset_line_numbered(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "x", "label": 0, "split": "train"}\n{oops\n')
        with pytest.raises(ValueError, match=":2:"):
            read_jsonl(path)


class TestCli:
    def test_export_command(self, tmp_path, capsys):
        data = write_dataset(tmp_path / "d.jsonl", ["hello there", "general greeting"])
        out = tmp_path / "d.rvhe"
        code = main(["export", "--data", str(data), "--encoder", "hash:32", "--out", str(out)])
        assert code == 0
        assert "wrote 2 rows of dim 32" in capsys.readouterr().out
        assert out.exists()

    def test_missing_dataset_nonzero_exit(self, tmp_path, capsys):
        code = main(
            [
                "export",
                "--data", str(tmp_path / "missing.jsonl"),
                "--encoder", "hash:32",
                "--out", str(tmp_path / "x.rvhe"),
            ]
        )
        assert code == 2
        assert "missing.jsonl" in capsys.readouterr().err
