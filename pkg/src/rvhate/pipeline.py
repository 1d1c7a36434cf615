"""End-to-end run orchestration: ingest, tag, train, vote, evaluate.

A run is described by a :class:`RunConfig`, serialized as a JSON manifest
into the output directory. Re-running with the manifest reproduces every
output file bit for bit: all randomness is derived from the config seeds,
panels are computed from the saved checkpoints (so staged subcommands and
the one-shot pipeline agree exactly), and report floats are written with
``repr`` round-tripping.

Output layout under ``out/``:

    manifest.json
    heads/seed<seed>/<module>.rvhd
    reports/train_<module>_seed<seed>.csv
    reports/reward_trace_seed<seed>.csv
    reports/cluster_<module>_seed<seed>.csv   (with cluster_reports)
    weights.csv
    eval.csv, eval.txt
    ablation.csv, ablation.txt               (with ablate)
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .ablation import run_ablation
from .clustering import build_cluster_model, write_cluster_report
from .data import (
    Dataset,
    EmbeddingMatrix,
    FeaturizerConfig,
    featurize,
    load_dataset,
    read_embeddings,
)
from .evaluation import confusion, macro_f1, summarize, write_report_csv, write_report_text
from .tagging import Gazetteer, default_gazetteer
from .training import (
    MODULE_IDS,
    MODULE_MECHANISMS,
    TrainConfig,
    TrainedModule,
    compute_logit_panel,
    forward_batch,
    load_head,
    prepare_module_inputs,
    save_head,
    train_module,
    write_training_report,
)
from .voting import optimize_weights, soft_vote, write_reward_trace, write_weight_report

THREAD_ENV_VAR = "RV_HATE_THREADS"


class StageError(Exception):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


@dataclass
class RunConfig:
    dataset: str
    out: str
    embeddings: str | None = None
    augmented_embeddings: str | None = None
    gazetteer: str | None = None
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    modules: tuple[str, ...] = MODULE_IDS
    rl_steps: int = 10000
    episodes_per_update: int = 32
    seeds: tuple[int, ...] = (13, 42, 87)
    jobs: int = 1
    ablate: bool = False
    cluster_reports: bool = False

    def __post_init__(self):
        self.modules = tuple(self.modules)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.modules:
            raise ValueError("modules must be nonempty")
        unknown = [m for m in self.modules if m not in MODULE_IDS]
        if unknown:
            raise ValueError(f"unknown modules {unknown}; valid ids are {MODULE_IDS}")
        if len(set(self.modules)) != len(self.modules):
            raise ValueError("modules contains duplicates")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.rl_steps < 1 or self.episodes_per_update < 1 or self.jobs < 1:
            raise ValueError("rl_steps, episodes_per_update, and jobs must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["featurizer"] = asdict(self.featurizer)
        d["train"] = asdict(self.train)
        d["modules"] = list(self.modules)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        feat = d.pop("featurizer", {})
        if feat.get("word_ngrams") is not None:
            feat["word_ngrams"] = tuple(feat["word_ngrams"])
        if feat.get("char_ngrams") is not None:
            feat["char_ngrams"] = tuple(feat["char_ngrams"])
        train = d.pop("train", {})
        return cls(featurizer=FeaturizerConfig(**feat), train=TrainConfig(**train), **d)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def effective_jobs(requested: int) -> int:
    cap = os.environ.get(THREAD_ENV_VAR)
    if cap is not None:
        try:
            return max(1, min(requested, int(cap)))
        except ValueError:
            raise ValueError(f"{THREAD_ENV_VAR} must be an integer, got {cap!r}")
    return max(1, requested)


@dataclass
class SeedArtifacts:
    seed: int
    weights: np.ndarray
    valid_f1: float
    test_scores: dict[str, float]
    test_confusions: dict[str, tuple[int, int, int, int]]


@dataclass
class PipelineResult:
    config: RunConfig
    dataset: Dataset
    per_seed: list[SeedArtifacts]
    report_paths: dict[str, str]


def _load_base_inputs(cfg: RunConfig):
    dataset = load_dataset(cfg.dataset)
    gazetteer = Gazetteer.load(cfg.gazetteer) if cfg.gazetteer else default_gazetteer()
    if cfg.embeddings:
        embeddings = read_embeddings(cfg.embeddings)
        if embeddings.count != len(dataset.examples):
            raise ValueError(
                f"embedding file has {embeddings.count} rows, dataset has {len(dataset.examples)}"
            )
        featurizer = None
        augmented = read_embeddings(cfg.augmented_embeddings) if cfg.augmented_embeddings else None
    else:
        embeddings = featurize(dataset, cfg.featurizer)
        featurizer = cfg.featurizer
        augmented = None
    return dataset, gazetteer, embeddings, featurizer, augmented


def _train_one(args) -> tuple[int, str, TrainedModule, Dataset, EmbeddingMatrix]:
    module_id, dataset, embeddings, cfg, gazetteer, featurizer, augmented = args
    ds_m, emb_m = prepare_module_inputs(
        module_id,
        dataset,
        embeddings,
        gazetteer=gazetteer,
        featurizer=featurizer,
        augmented_embeddings=augmented,
    )
    trained = train_module(module_id, ds_m, emb_m, cfg)
    return cfg.seed, module_id, trained, ds_m, emb_m


def run_pipeline(cfg: RunConfig, log=print) -> PipelineResult:
    """Execute the full workflow for every configured seed."""

    def stage(name):
        class _Ctx:
            def __enter__(self):
                return None

            def __exit__(self, exc_type, exc, tb):
                if exc is not None and not isinstance(exc, StageError):
                    raise StageError(name, exc) from exc
                return False

        return _Ctx()

    with stage("load-inputs"):
        dataset, gazetteer, embeddings, featurizer, augmented = _load_base_inputs(cfg)
        os.makedirs(cfg.out, exist_ok=True)
        os.makedirs(os.path.join(cfg.out, "heads"), exist_ok=True)
        os.makedirs(os.path.join(cfg.out, "reports"), exist_ok=True)
        cfg.save(os.path.join(cfg.out, "manifest.json"))
        labels = dataset.labels()
        valid_idx = dataset.split_indices("valid")
        test_idx = dataset.split_indices("test")
        X = embeddings.vectors.astype(np.float64)
        X_valid, y_valid = X[valid_idx], labels[valid_idx]
        X_test, y_test = X[test_idx], labels[test_idx]

    with stage("train"):
        jobs = [
            (module_id, dataset, embeddings, replace(cfg.train, seed=seed), gazetteer, featurizer, augmented)
            for seed in cfg.seeds
            for module_id in cfg.modules
        ]
        workers = effective_jobs(cfg.jobs)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_train_one, jobs))
        else:
            outcomes = [_train_one(job) for job in jobs]
        trained: dict[tuple[int, str], TrainedModule] = {}
        train_inputs: dict[tuple[int, str], tuple[Dataset, EmbeddingMatrix]] = {}
        for seed, module_id, tm, ds_m, emb_m in outcomes:
            trained[(seed, module_id)] = tm
            train_inputs[(seed, module_id)] = (ds_m, emb_m)
        for seed in cfg.seeds:
            seed_dir = os.path.join(cfg.out, "heads", f"seed{seed}")
            os.makedirs(seed_dir, exist_ok=True)
            for module_id in cfg.modules:
                tm = trained[(seed, module_id)]
                save_head(tm.head, os.path.join(seed_dir, f"{module_id}.rvhd"))
                write_training_report(
                    tm.report,
                    os.path.join(cfg.out, "reports", f"train_{module_id}_seed{seed}.csv"),
                )
                if cfg.cluster_reports:
                    ds_m, emb_m = train_inputs[(seed, module_id)]
                    tr_idx = ds_m.split_indices("train")
                    Xm = emb_m.vectors.astype(np.float64)[tr_idx]
                    ym = ds_m.labels()[tr_idx]
                    _, Zm, _ = forward_batch(tm.head, Xm)
                    model = build_cluster_model(
                        Zm,
                        ym,
                        cfg.train.k_per_class,
                        metric=cfg.train.metric,
                        seed=[seed, 7002, tm.best_epoch],
                        remove_outliers=MODULE_MECHANISMS[module_id].remove_outliers,
                    )
                    ids = [ds_m.examples[i].id for i in tr_idx]
                    write_cluster_report(
                        model,
                        os.path.join(cfg.out, "reports", f"cluster_{module_id}_seed{seed}.csv"),
                        ids=ids,
                    )
        log(f"trained {len(cfg.modules)} modules x {len(cfg.seeds)} seeds")

    per_seed: list[SeedArtifacts] = []
    weight_rows = []
    with stage("vote"):
        for seed in cfg.seeds:
            seed_dir = os.path.join(cfg.out, "heads", f"seed{seed}")
            heads = [load_head(os.path.join(seed_dir, f"{m}.rvhd")) for m in cfg.modules]
            panel_valid = compute_logit_panel(heads, X_valid)
            panel_test = compute_logit_panel(heads, X_test)
            if len(cfg.modules) > 1:
                opt = optimize_weights(
                    panel_valid,
                    y_valid,
                    steps=cfg.rl_steps,
                    episodes_per_update=cfg.episodes_per_update,
                    seed=seed,
                )
                weights = opt.weights
                write_reward_trace(
                    opt.trace, os.path.join(cfg.out, "reports", f"reward_trace_seed{seed}.csv")
                )
            else:
                weights = np.array([1.0])
            valid_f1 = macro_f1(soft_vote(panel_valid, weights).predictions, y_valid)
            test_scores: dict[str, float] = {}
            test_conf: dict[str, tuple[int, int, int, int]] = {}
            for i, module_id in enumerate(cfg.modules):
                preds = panel_test[i].argmax(axis=1)
                test_scores[module_id] = macro_f1(preds, y_test)
                test_conf[module_id] = confusion(preds, y_test)
            if len(cfg.modules) > 1:
                eq = np.full(len(cfg.modules), 1.0 / len(cfg.modules))
                preds = soft_vote(panel_test, eq).predictions
                test_scores["equal_weights"] = macro_f1(preds, y_test)
                test_conf["equal_weights"] = confusion(preds, y_test)
            preds = soft_vote(panel_test, weights).predictions
            test_scores["rv"] = macro_f1(preds, y_test)
            test_conf["rv"] = confusion(preds, y_test)
            per_seed.append(
                SeedArtifacts(
                    seed=seed,
                    weights=weights,
                    valid_f1=valid_f1,
                    test_scores=test_scores,
                    test_confusions=test_conf,
                )
            )
            weight_rows.append((dataset.name, seed, list(weights), valid_f1))
        write_weight_report(weight_rows, os.path.join(cfg.out, "weights.csv"))

    with stage("eval"):
        variants = list(cfg.modules)
        if len(cfg.modules) > 1:
            variants.append("equal_weights")
        variants.append("rv")
        reports = []
        for variant in variants:
            scores = [sa.test_scores[variant] for sa in per_seed]
            reports.append(
                summarize(dataset.name, variant, scores, per_seed[0].test_confusions[variant])
            )
        write_report_csv(reports, os.path.join(cfg.out, "eval.csv"))
        write_report_text(
            reports, os.path.join(cfg.out, "eval.txt"), title=f"dataset: {dataset.name}"
        )

    report_paths = {
        "manifest": os.path.join(cfg.out, "manifest.json"),
        "weights": os.path.join(cfg.out, "weights.csv"),
        "eval_csv": os.path.join(cfg.out, "eval.csv"),
        "eval_text": os.path.join(cfg.out, "eval.txt"),
    }

    if cfg.ablate:
        with stage("ablate"):
            rows = run_ablation(
                dataset,
                embeddings,
                cfg.train,
                cfg.seeds,
                gazetteer=gazetteer,
                featurizer=featurizer,
                augmented_embeddings=augmented,
                rl_steps=cfg.rl_steps,
                episodes_per_update=cfg.episodes_per_update,
            )
            write_report_csv(rows, os.path.join(cfg.out, "ablation.csv"))
            write_report_text(
                rows, os.path.join(cfg.out, "ablation.txt"), title=f"ablation: {dataset.name}"
            )
            report_paths["ablation_csv"] = os.path.join(cfg.out, "ablation.csv")
            report_paths["ablation_text"] = os.path.join(cfg.out, "ablation.txt")

    return PipelineResult(config=cfg, dataset=dataset, per_seed=per_seed, report_paths=report_paths)

