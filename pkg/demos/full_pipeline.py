"""One-shot pipeline run on a generated toy corpus.

Writes a small JSONL dataset, runs ingest -> tag -> train -> vote -> eval
through the library API, and prints the resulting reports. Equivalent CLI:

    rvhate pipeline --dataset toy.jsonl --out runs/toy \
        --seeds 13,42 --dim 64 --epochs 3 --k 2 --rl-steps 2000
"""

import json
import os
import tempfile

from rvhate import FeaturizerConfig, RunConfig, TrainConfig, run_pipeline, toy_corpus_rows

workdir = tempfile.mkdtemp(prefix="rvhate-demo-")
corpus = os.path.join(workdir, "toy.jsonl")
with open(corpus, "w", encoding="utf-8") as fh:
    for row in toy_corpus_rows(n=200, seed=3):
        fh.write(json.dumps(row) + "\n")

cfg = RunConfig(
    dataset=corpus,
    out=os.path.join(workdir, "run"),
    featurizer=FeaturizerConfig(dim=64),
    train=TrainConfig(epochs=3, batch_size=32, k_per_class=2),
    rl_steps=2000,
    seeds=(13, 42),
)

result = run_pipeline(cfg)

print("\nlearned weights per seed:")
for sa in result.per_seed:
    weights = ", ".join(f"{w:.3f}" for w in sa.weights)
    print(f"  seed {sa.seed}: [{weights}]  valid macro-F1 {sa.valid_f1:.4f}")

print("\n" + open(result.report_paths["eval_text"]).read())
print(f"artifacts kept under {cfg.out}")
