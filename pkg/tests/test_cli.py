import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from rvhate.cli import main
from rvhate.data import load_dataset, read_embeddings

from conftest import synthetic_corpus_rows, write_jsonl


def file_hash(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def tree_hashes(root, skip=()):
    hashes = {}
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            if rel in skip:
                continue
            hashes[rel] = file_hash(path)
    return hashes


@pytest.fixture
def corpus(tmp_path):
    return write_jsonl(tmp_path / "corpus.jsonl", synthetic_corpus_rows(n=200))


class TestFeaturize:
    def test_writes_aligned_file(self, corpus, tmp_path, capsys):
        out = tmp_path / "corpus.rvhe"
        code = main(["featurize", "--data", str(corpus), "--out", str(out), "--dim", "64"])
        assert code == 0
        assert "wrote 200 rows of dim 64" in capsys.readouterr().out
        matrix = read_embeddings(out)
        assert matrix.count == len(load_dataset(corpus).examples)

    def test_missing_input_exits_2_naming_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.jsonl"
        code = main(["featurize", "--data", str(missing), "--out", str(tmp_path / "x.rvhe")])
        assert code == 2
        assert "nope.jsonl" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, corpus, tmp_path):
        a = tmp_path / "a.rvhe"
        b = tmp_path / "b.rvhe"
        assert main(["featurize", "--data", str(corpus), "--out", str(a), "--dim", "128"]) == 0
        assert main(["featurize", "--data", str(corpus), "--out", str(b), "--dim", "128"]) == 0
        assert file_hash(a) == file_hash(b)

    def test_parse_error_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a", "text": "x", "label": 2, "split": "train"}\n')
        code = main(["featurize", "--data", str(bad), "--out", str(tmp_path / "x.rvhe")])
        assert code == 2


class TestTag:
    def test_writes_augmented_dataset(self, corpus, tmp_path, capsys):
        out = tmp_path / "augmented.jsonl"
        assert main(["tag", "--data", str(corpus), "--out", str(out)]) == 0
        augmented = load_dataset(out)
        original = load_dataset(corpus)
        assert len(augmented.examples) >= len(original.examples)
        assert any(ex.id.endswith("#tagged") for ex in augmented.examples)
        assert "coverage" in capsys.readouterr().out


class TestTrainVoteEval:
    def test_staged_workflow(self, corpus, tmp_path, capsys):
        heads = []
        for module in ("M0", "M1", "M2", "M3"):
            path = tmp_path / f"{module}.rvhd"
            code = main(
                [
                    "train",
                    "--data", str(corpus),
                    "--module", module,
                    "--out", str(path),
                    "--dim", "64",
                    "--epochs", "2",
                    "--batch-size", "32",
                    "--k", "2",
                ]
            )
            assert code == 0
            heads.append(str(path))
        vote_dir = tmp_path / "vote"
        code = main(
            [
                "vote",
                "--data", str(corpus),
                "--heads", *heads,
                "--out-dir", str(vote_dir),
                "--dim", "64",
                "--rl-steps", "320",
            ]
        )
        assert code == 0
        assert (vote_dir / "weights.csv").exists()
        eval_dir = tmp_path / "eval"
        code = main(
            [
                "eval",
                "--data", str(corpus),
                "--heads", *heads,
                "--out-dir", str(eval_dir),
                "--dim", "64",
            ]
        )
        assert code == 0
        lines = (eval_dir / "eval.csv").read_text().strip().splitlines()
        assert lines[0].startswith("variant,seed_count,macro_f1_mean")
        assert len(lines) == 1 + 4 + 1  # four heads + ensemble

    def test_eval_weight_shape_violation_exits_4(self, corpus, tmp_path):
        head = tmp_path / "m0.rvhd"
        assert (
            main(
                [
                    "train",
                    "--data", str(corpus),
                    "--module", "M0",
                    "--out", str(head),
                    "--dim", "64",
                    "--epochs", "1",
                    "--k", "2",
                ]
            )
            == 0
        )
        code = main(
            [
                "eval",
                "--data", str(corpus),
                "--heads", str(head),
                "--out-dir", str(tmp_path / "e"),
                "--dim", "64",
                "--weights", "0.5,0.5",
            ]
        )
        assert code == 4

    def test_train_k_too_large_exits_3(self, corpus, tmp_path, capsys):
        code = main(
            [
                "train",
                "--data", str(corpus),
                "--module", "M0",
                "--out", str(tmp_path / "h.rvhd"),
                "--dim", "64",
                "--k", "1000",
            ]
        )
        assert code == 3


class TestPipeline:
    def _base_args(self, corpus, out, seeds="13"):
        return [
            "pipeline",
            "--dataset", str(corpus),
            "--out", str(out),
            "--seeds", seeds,
            "--dim", "64",
            "--epochs", "2",
            "--batch-size", "32",
            "--k", "2",
            "--rl-steps", "640",
        ]

    def test_full_run_produces_reports(self, corpus, tmp_path, capsys):
        import time

        before = file_hash(corpus)
        out = tmp_path / "run"
        t0 = time.perf_counter()
        assert main(self._base_args(corpus, out)) == 0
        assert time.perf_counter() - t0 < 120.0
        for name in ("manifest.json", "weights.csv", "eval.csv", "eval.txt"):
            assert (out / name).exists()
        assert (out / "heads" / "seed13" / "M2.rvhd").exists()
        assert (out / "reports" / "reward_trace_seed13.csv").exists()
        # input files are never mutated
        assert file_hash(corpus) == before

    def test_single_module_skips_voting(self, corpus, tmp_path):
        out = tmp_path / "solo"
        assert main(self._base_args(corpus, out) + ["--modules", "M0"]) == 0
        weights = (out / "weights.csv").read_text().strip().splitlines()
        assert weights[0] == "dataset,seed,w0,valid_macro_f1"
        assert weights[1].split(",")[2] == "1.0"
        assert not (out / "reports" / "reward_trace_seed13.csv").exists()

    def test_manifest_reproduces_run_bit_for_bit(self, corpus, tmp_path):
        out1 = tmp_path / "r1"
        assert main(self._base_args(corpus, out1, seeds="13,42") + ["--ablate"]) == 0
        manifest = json.loads((out1 / "manifest.json").read_text())
        out2 = tmp_path / "r2"
        manifest_path = tmp_path / "replay.json"
        manifest["out"] = str(out2)
        manifest_path.write_text(json.dumps(manifest))
        assert main(["pipeline", "--config", str(manifest_path)]) == 0
        h1 = tree_hashes(out1, skip=("manifest.json",))
        h2 = tree_hashes(out2, skip=("manifest.json",))
        assert h1 == h2

    def test_metric_variants_share_report_shape(self, corpus, tmp_path):
        rows = {}
        for metric in ("cosine", "l2"):
            out = tmp_path / f"run-{metric}"
            assert main(self._base_args(corpus, out) + ["--metric", metric]) == 0
            lines = (out / "eval.csv").read_text().strip().splitlines()
            rows[metric] = lines
        assert [r.split(",")[0] for r in rows["cosine"]] == [r.split(",")[0] for r in rows["l2"]]

    def test_external_embeddings_path(self, corpus, tmp_path):
        emb = tmp_path / "c.rvhe"
        assert main(["featurize", "--data", str(corpus), "--out", str(emb), "--dim", "64"]) == 0
        out = tmp_path / "ext"
        args = [
            "pipeline",
            "--dataset", str(corpus),
            "--embeddings", str(emb),
            "--out", str(out),
            "--seeds", "13",
            "--epochs", "2",
            "--batch-size", "32",
            "--k", "2",
            "--rl-steps", "320",
        ]
        assert main(args) == 0
        assert (out / "eval.csv").exists()

    def test_jobs_parallel_matches_serial(self, corpus, tmp_path):
        out1 = tmp_path / "serial"
        out2 = tmp_path / "parallel"
        assert main(self._base_args(corpus, out1, seeds="13,42")) == 0
        assert main(self._base_args(corpus, out2, seeds="13,42") + ["--jobs", "4"]) == 0
        h1 = tree_hashes(out1, skip=("manifest.json",))
        h2 = tree_hashes(out2, skip=("manifest.json",))
        assert h1 == h2

    def test_thread_env_cap(self, corpus, tmp_path, monkeypatch):
        monkeypatch.setenv("RV_HATE_THREADS", "1")
        out = tmp_path / "capped"
        assert main(self._base_args(corpus, out) + ["--jobs", "8"]) == 0

    def test_config_file_with_flag_overrides(self, corpus, tmp_path):
        config = {
            "dataset": str(corpus),
            "out": str(tmp_path / "cfg-run"),
            "seeds": [13],
            "rl_steps": 320,
            "featurizer": {"dim": 64, "word_ngrams": [1, 2], "char_ngrams": [3, 5], "hash_seed": 0},
            "train": {"epochs": 2, "batch_size": 32, "k_per_class": 2},
        }
        path = tmp_path / "run.json"
        path.write_text(json.dumps(config))
        out = tmp_path / "override-run"
        assert main(["pipeline", "--config", str(path), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["out"] == str(out)
        assert manifest["train"]["epochs"] == 2

    def test_unknown_module_exits_2(self, corpus, tmp_path, capsys):
        out = tmp_path / "bad"
        code = main(self._base_args(corpus, out) + ["--modules", "M9"])
        assert code == 2

    def test_cluster_reports_flag(self, corpus, tmp_path):
        out = tmp_path / "clusters"
        assert main(self._base_args(corpus, out) + ["--cluster-reports"]) == 0
        report = out / "reports" / "cluster_M2_seed13.csv"
        assert report.exists()
        assert report.read_text().startswith("cluster_id,label,size,anchor_id,removed_count")

    def test_failing_stage_is_named(self, tmp_path, capsys):
        # all rows land in the train split, so training cannot validate
        rows = [
            {"id": f"r{i}", "text": f"text {i}", "label": i % 2, "split": "train"}
            for i in range(40)
        ]
        corpus = write_jsonl(tmp_path / "trainonly.jsonl", rows)
        code = main(self._base_args(corpus, tmp_path / "run"))
        assert code != 0
        assert "stage 'train'" in capsys.readouterr().err


class TestAblateCommand:
    def test_ablation_table_written(self, corpus, tmp_path):
        out = tmp_path / "ablation"
        code = main(
            [
                "ablate",
                "--dataset", str(corpus),
                "--out", str(out),
                "--seeds", "13",
                "--dim", "64",
                "--epochs", "2",
                "--batch-size", "32",
                "--k", "2",
                "--rl-steps", "320",
            ]
        )
        assert code == 0
        lines = (out / "ablation.csv").read_text().strip().splitlines()
        variants = [line.split(",")[0] for line in lines[1:]]
        assert variants == [
            "M0",
            "M1",
            "M2",
            "M3",
            "rv",
            "rv_minus_M0",
            "rv_minus_M1",
            "rv_minus_M2",
            "rv_minus_M3",
            "equal_weights",
            "rv_l2",
            "combined_modules",
        ]
        assert (out / "ablation.txt").exists()


class TestSubprocessEntry:
    def test_console_entry_point(self, tmp_path):
        corpus = write_jsonl(tmp_path / "c.jsonl", synthetic_corpus_rows(n=60))
        out = tmp_path / "c.rvhe"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "rvhate",
                "featurize",
                "--data", str(corpus),
                "--out", str(out),
                "--dim", "32",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()

    def test_subprocess_exit_code_2(self, tmp_path):
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "rvhate",
                "featurize",
                "--data", str(tmp_path / "missing.jsonl"),
                "--out", str(tmp_path / "x.rvhe"),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
        assert "missing.jsonl" in proc.stderr
