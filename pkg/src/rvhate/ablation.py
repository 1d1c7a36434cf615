"""Ablation harness: solo modules, full ensemble, leave-one-out, and variants.

Produces one report row per variant, each averaged over the requested
seeds:

    M0..M3            each module scored alone
    rv                full ensemble with PPO-optimized weights
    rv_minus_Mk       3-module ensembles, PPO re-optimized on the reduced
                      simplex (weights are re-learned, not renormalized)
    equal_weights     fixed uniform weights
    rv_l2             all modules re-trained with the Euclidean metric,
                      then PPO-voted
    combined_modules  one head trained with every mechanism enabled at
                      once, no voting

Weight optimization always runs against the validation panel; the reported
scores come from the test split.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, EmbeddingMatrix, FeaturizerConfig
from .evaluation import EvalReport, confusion, macro_f1, summarize
from .tagging import Gazetteer
from .training import (
    MODULE_IDS,
    TrainConfig,
    compute_logit_panel,
    predict,
    prepare_module_inputs,
    train_module,
)
from .voting import optimize_weights, soft_vote


@dataclass
class PanelVariantRow:
    variant: str
    test_f1: float
    confusion: tuple[int, int, int, int]
    weights: np.ndarray | None = None


def panel_variants(
    panel_valid,
    labels_valid,
    panel_test,
    labels_test,
    module_names=MODULE_IDS,
    rl_steps: int = 10000,
    episodes_per_update: int = 32,
    seed: int = 0,
) -> list[PanelVariantRow]:
    """Every variant derivable from cached logit panels alone."""
    panel_valid = np.asarray(panel_valid, dtype=np.float64)
    panel_test = np.asarray(panel_test, dtype=np.float64)
    k = panel_valid.shape[0]
    names = list(module_names)[:k]
    rows: list[PanelVariantRow] = []

    for i, name in enumerate(names):
        preds = panel_test[i].argmax(axis=1)
        rows.append(PanelVariantRow(name, macro_f1(preds, labels_test), confusion(preds, labels_test)))

    full = optimize_weights(
        panel_valid, labels_valid, steps=rl_steps, episodes_per_update=episodes_per_update, seed=seed
    )
    preds = soft_vote(panel_test, full.weights).predictions
    rows.append(
        PanelVariantRow("rv", macro_f1(preds, labels_test), confusion(preds, labels_test), full.weights)
    )

    for i, name in enumerate(names):
        keep = [j for j in range(k) if j != i]
        sub = optimize_weights(
            panel_valid[keep],
            labels_valid,
            steps=rl_steps,
            episodes_per_update=episodes_per_update,
            seed=seed,
        )
        preds = soft_vote(panel_test[keep], sub.weights).predictions
        rows.append(
            PanelVariantRow(
                f"rv_minus_{name}", macro_f1(preds, labels_test), confusion(preds, labels_test), sub.weights
            )
        )

    equal = np.full(k, 1.0 / k)
    preds = soft_vote(panel_test, equal).predictions
    rows.append(
        PanelVariantRow("equal_weights", macro_f1(preds, labels_test), confusion(preds, labels_test), equal)
    )
    return rows


def _train_heads(dataset, embeddings, cfg, module_ids, gazetteer, featurizer, augmented_embeddings):
    heads = []
    for module_id in module_ids:
        ds_m, emb_m = prepare_module_inputs(
            module_id,
            dataset,
            embeddings,
            gazetteer=gazetteer,
            featurizer=featurizer,
            augmented_embeddings=augmented_embeddings,
        )
        heads.append(train_module(module_id, ds_m, emb_m, cfg).head)
    return heads


def run_ablation(
    dataset: Dataset,
    embeddings: EmbeddingMatrix,
    cfg: TrainConfig,
    seeds,
    gazetteer: Gazetteer | None = None,
    featurizer: FeaturizerConfig | None = None,
    augmented_embeddings: EmbeddingMatrix | None = None,
    rl_steps: int = 10000,
    episodes_per_update: int = 32,
) -> list[EvalReport]:
    """Train and score every ablation variant, averaged over ``seeds``."""
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("run_ablation needs at least one seed")
    valid_idx = dataset.split_indices("valid")
    test_idx = dataset.split_indices("test")
    labels = dataset.labels()
    X = embeddings.vectors.astype(np.float64)
    X_valid, y_valid = X[valid_idx], labels[valid_idx]
    X_test, y_test = X[test_idx], labels[test_idx]

    order: list[str] = (
        list(MODULE_IDS)
        + ["rv"]
        + [f"rv_minus_{m}" for m in MODULE_IDS]
        + ["equal_weights", "rv_l2", "combined_modules"]
    )
    scores: dict[str, list[float]] = {name: [] for name in order}
    confusions: dict[str, tuple[int, int, int, int]] = {}

    for seed in seeds:
        seed_cfg = replace(cfg, seed=seed)
        heads = _train_heads(
            dataset, embeddings, seed_cfg, MODULE_IDS, gazetteer, featurizer, augmented_embeddings
        )
        panel_valid = compute_logit_panel(heads, X_valid)
        panel_test = compute_logit_panel(heads, X_test)
        for row in panel_variants(
            panel_valid,
            y_valid,
            panel_test,
            y_test,
            rl_steps=rl_steps,
            episodes_per_update=episodes_per_update,
            seed=seed,
        ):
            scores[row.variant].append(row.test_f1)
            confusions.setdefault(row.variant, row.confusion)

        l2_cfg = replace(seed_cfg, metric="l2")
        l2_heads = _train_heads(
            dataset, embeddings, l2_cfg, MODULE_IDS, gazetteer, featurizer, augmented_embeddings
        )
        l2_valid = compute_logit_panel(l2_heads, X_valid)
        l2_test = compute_logit_panel(l2_heads, X_test)
        l2_opt = optimize_weights(
            l2_valid, y_valid, steps=rl_steps, episodes_per_update=episodes_per_update, seed=seed
        )
        l2_preds = soft_vote(l2_test, l2_opt.weights).predictions
        scores["rv_l2"].append(macro_f1(l2_preds, y_test))
        confusions.setdefault("rv_l2", confusion(l2_preds, y_test))

        ds_c, emb_c = prepare_module_inputs(
            "combined",
            dataset,
            embeddings,
            gazetteer=gazetteer,
            featurizer=featurizer,
            augmented_embeddings=augmented_embeddings,
        )
        combined = train_module("combined", ds_c, emb_c, seed_cfg)
        c_preds = predict(combined.head, X_test)
        scores["combined_modules"].append(macro_f1(c_preds, y_test))
        confusions.setdefault("combined_modules", confusion(c_preds, y_test))

    return [summarize(dataset.name, name, scores[name], confusions[name]) for name in order]
