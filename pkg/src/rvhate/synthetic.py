"""Synthetic benchmark builders.

Small generators used by the test suite and the demo scripts: a separable
text corpus for exercising the full pipeline, a separable embedding set
for the trainers, and planted-oracle logit panels for the voting stage.
All are pure functions of their seeds.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, EmbeddingMatrix, LabeledExample


def toy_corpus_rows(n: int = 200, seed: int = 0) -> list[dict]:
    """Separable two-class text corpus with both labels in every split.

    Returns JSONL-ready dicts; hate-labeled rows use taggable group terms
    so the M1 augmentation path has something to find.
    """
    rng = np.random.default_rng(seed)
    hate_words = ["china", "immigrants", "muslims", "mexicans", "refugees"]
    neutral_words = ["coffee", "weather", "music", "garden", "bicycle"]
    rows = []
    for i in range(n):
        label = i % 2
        words = hate_words if label else neutral_words
        text = " ".join(rng.choice(words, size=6)) + (" go back" if label else " nice day")
        pos = (i // 2) % 10
        split = "train" if pos < 8 else ("valid" if pos == 8 else "test")
        rows.append({"id": f"t{i}", "text": text, "label": label, "split": split})
    return rows


def separable_embeddings(
    n: int = 400, dim: int = 16, seed: int = 11, spread: float = 0.15
) -> tuple[Dataset, EmbeddingMatrix]:
    """Linearly separable unit-norm embeddings with an aligned dataset shell.

    Classes sit at antipodal directions on the sphere; every split contains
    both labels (8:1:1 shape).
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    centers = np.zeros((2, dim))
    centers[0, 0] = 1.0
    centers[1, 0] = -1.0
    X = centers[labels] + rng.normal(0.0, spread, size=(n, dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    examples = []
    for i in range(n):
        pos = (i // 2) % 10
        split = "train" if pos < 8 else ("valid" if pos == 8 else "test")
        examples.append(LabeledExample(f"e{i}", f"synthetic point {i}", int(labels[i]), split))
    return Dataset("separable", examples), EmbeddingMatrix(X.astype(np.float32))


def planted_oracle_panel(
    n: int = 600,
    seed: int = 5,
    oracle: int = 0,
    k: int = 4,
    bias: float = 0.55,
    band: float = 0.3,
    jitter: float = 0.15,
) -> tuple[np.ndarray, np.ndarray]:
    """Logit panel with one oracle module and label-independent noise modules.

    The oracle emits correct-side logits with margins e^U(-band, band); the
    other modules emit a jittered constant non-hate bias, so the ensemble
    flips to correct exactly when the oracle's weight odds clear the bias.
    The reward landscape therefore rises steeply (and keeps rising) as the
    oracle weight grows, while uniform weights score poorly.
    """
    rng = np.random.default_rng(seed)
    labels = (np.arange(n) % 2).astype(np.int64)
    rng.shuffle(labels)
    margins = np.exp(rng.uniform(-band, band, size=n))
    panel = np.zeros((k, n, 2))
    for module in range(k):
        if module == oracle:
            panel[module, np.arange(n), labels] = margins
            panel[module, np.arange(n), 1 - labels] = -margins
        else:
            panel[module, :, 0] = bias + rng.normal(0.0, jitter, size=n)
            panel[module, :, 1] = -bias + rng.normal(0.0, jitter, size=n)
    return panel, labels


def oracle_panel_pair(seed: int, oracle: int = 0, n: int = 600, **kwargs):
    """(valid, test) panel pair from the same generator, fresh draws."""
    panel_valid, labels_valid = planted_oracle_panel(n=n, seed=seed, oracle=oracle, **kwargs)
    panel_test, labels_test = planted_oracle_panel(n=n, seed=seed + 1000, oracle=oracle, **kwargs)
    return panel_valid, labels_valid, panel_test, labels_test
