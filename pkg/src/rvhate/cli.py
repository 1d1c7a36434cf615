"""Command-line interface.

Subcommands: featurize, tag, train, vote, eval, ablate, pipeline.
Exit codes: 0 success, 2 input error, 3 training failure, 4 internal
invariant violation. The RV_HATE_THREADS environment variable caps the
worker count used by --jobs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .ablation import run_ablation
from .data import (
    FeaturizerConfig,
    featurize,
    load_dataset,
    read_embeddings,
    save_dataset,
    write_embeddings,
)
from .errors import (
    EmptyBatch,
    EmptyCluster,
    KTooLarge,
    MissingAnchorClass,
    ShapeMismatch,
)
from .evaluation import confusion, macro_f1, summarize, write_report_csv, write_report_text
from .pipeline import RunConfig, StageError, run_pipeline
from .tagging import Gazetteer, augment_train_set, default_gazetteer, tagging_coverage
from .training import (
    MODULE_IDS,
    TrainConfig,
    compute_logit_panel,
    load_head,
    prepare_module_inputs,
    save_head,
    train_module,
    write_training_report,
)
from .voting import optimize_weights, soft_vote, write_reward_trace, write_weight_report


def _parse_ngrams(text: str):
    if text.lower() == "none":
        return None
    lo, hi = (int(part) for part in text.split(","))
    return (lo, hi)


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part]


def _featurizer_from_args(args) -> FeaturizerConfig:
    return FeaturizerConfig(
        dim=args.dim,
        word_ngrams=_parse_ngrams(args.word_ngrams),
        char_ngrams=_parse_ngrams(args.char_ngrams),
        hash_seed=args.hash_seed,
    )


def _add_featurizer_args(parser) -> None:
    parser.add_argument("--dim", type=int, default=512, help="feature-hashing dimension")
    parser.add_argument("--word-ngrams", default="1,2", help="lo,hi or 'none'")
    parser.add_argument("--char-ngrams", default="3,5", help="lo,hi or 'none'")
    parser.add_argument("--hash-seed", type=int, default=0)


def _add_train_args(parser) -> None:
    parser.add_argument("--epochs", type=int, default=6)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--tau", type=float, default=0.3)
    parser.add_argument("--lam", type=float, default=0.5)
    parser.add_argument("--k", type=int, default=20, help="clusters per class")
    parser.add_argument("--metric", choices=("cosine", "l2"), default="cosine")
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--hard-k", type=int, default=8)
    parser.add_argument("--confidence", type=float, default=0.9)
    parser.add_argument("--hidden", type=int, default=128)


def _train_config_from_args(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        tau=args.tau,
        lam=args.lam,
        k_per_class=args.k,
        metric=args.metric,
        seed=args.seed,
        hard_k=args.hard_k,
        confidence=args.confidence,
        hidden_dim=args.hidden,
    )


def _load_embeddings(args, dataset):
    if getattr(args, "embeddings", None):
        emb = read_embeddings(args.embeddings)
        if emb.count != len(dataset.examples):
            raise ValueError(
                f"embedding file has {emb.count} rows, dataset has {len(dataset.examples)}"
            )
        return emb, None
    featurizer = _featurizer_from_args(args)
    return featurize(dataset, featurizer), featurizer


def _gazetteer(args) -> Gazetteer:
    if getattr(args, "gazetteer", None):
        return Gazetteer.load(args.gazetteer)
    return default_gazetteer()


def cmd_featurize(args) -> int:
    dataset = load_dataset(args.data)
    cfg = _featurizer_from_args(args)
    matrix = featurize(dataset, cfg)
    write_embeddings(matrix, args.out)
    zeros = int(matrix.zero_rows.sum())
    print(f"wrote {matrix.count} rows of dim {matrix.dim} to {args.out}")
    if zeros:
        print(f"warning: {zeros} rows featurized to the zero vector (empty text)")
    return 0


def cmd_tag(args) -> int:
    dataset = load_dataset(args.data)
    gaz = _gazetteer(args)
    coverage = tagging_coverage(dataset, gaz)
    augmented = augment_train_set(dataset, gaz)
    save_dataset(augmented, args.out)
    before = dataset.split_counts()["train"]
    after = augmented.split_counts()["train"]
    print(
        f"tagged coverage {coverage:.2%} of hate-labeled train examples; "
        f"train split {before} -> {after}; wrote {args.out}"
    )
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    embeddings, featurizer = _load_embeddings(args, dataset)
    augmented = read_embeddings(args.augmented_embeddings) if args.augmented_embeddings else None
    cfg = _train_config_from_args(args)
    ds_m, emb_m = prepare_module_inputs(
        args.module,
        dataset,
        embeddings,
        gazetteer=_gazetteer(args),
        featurizer=featurizer,
        augmented_embeddings=augmented,
    )
    trained = train_module(args.module, ds_m, emb_m, cfg)
    save_head(trained.head, args.out)
    if args.report:
        write_training_report(trained.report, args.report)
    print(
        f"{args.module}: best valid macro-F1 {trained.best_valid_f1:.4f} "
        f"at epoch {trained.best_epoch}; checkpoint {args.out}"
    )
    return 0


def cmd_vote(args) -> int:
    dataset = load_dataset(args.data)
    embeddings, _ = _load_embeddings(args, dataset)
    heads = [load_head(path) for path in args.heads]
    labels = dataset.labels()
    valid_idx = dataset.split_indices("valid")
    X_valid = embeddings.vectors.astype(np.float64)[valid_idx]
    panel = compute_logit_panel(heads, X_valid)
    opt = optimize_weights(
        panel,
        labels[valid_idx],
        steps=args.rl_steps,
        episodes_per_update=args.episodes_per_update,
        seed=args.seed,
    )
    valid_f1 = macro_f1(soft_vote(panel, opt.weights).predictions, labels[valid_idx])
    os.makedirs(args.out_dir, exist_ok=True)
    write_weight_report(
        [(dataset.name, args.seed, list(opt.weights), valid_f1)],
        os.path.join(args.out_dir, "weights.csv"),
    )
    write_reward_trace(opt.trace, os.path.join(args.out_dir, f"reward_trace_seed{args.seed}.csv"))
    formatted = ", ".join(f"{w:.4f}" for w in opt.weights)
    print(f"optimized weights [{formatted}] with valid macro-F1 {valid_f1:.4f}")
    return 0


def cmd_eval(args) -> int:
    dataset = load_dataset(args.data)
    embeddings, _ = _load_embeddings(args, dataset)
    heads = [load_head(path) for path in args.heads]
    labels = dataset.labels()
    idx = dataset.split_indices(args.split)
    X = embeddings.vectors.astype(np.float64)[idx]
    y = labels[idx]
    panel = compute_logit_panel(heads, X)
    if args.weights:
        weights = np.array(_parse_float_list(args.weights))
    else:
        weights = np.full(len(heads), 1.0 / len(heads))
    reports = []
    for i, head in enumerate(heads):
        preds = panel[i].argmax(axis=1)
        reports.append(
            summarize(dataset.name, head.module_id, [macro_f1(preds, y)], confusion(preds, y))
        )
    preds = soft_vote(panel, weights).predictions
    reports.append(summarize(dataset.name, "ensemble", [macro_f1(preds, y)], confusion(preds, y)))
    os.makedirs(args.out_dir, exist_ok=True)
    write_report_csv(reports, os.path.join(args.out_dir, "eval.csv"))
    write_report_text(
        reports,
        os.path.join(args.out_dir, "eval.txt"),
        title=f"dataset: {dataset.name} ({args.split} split)",
    )
    print(f"ensemble macro-F1 on {args.split}: {reports[-1].mean:.4f}")
    return 0


def _runconfig_from_args(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        if not args.dataset or not args.out:
            raise ValueError("either --config or both --dataset and --out are required")
        cfg = RunConfig(dataset=args.dataset, out=args.out)
    overrides = {}
    if args.dataset:
        overrides["dataset"] = args.dataset
    if args.out:
        overrides["out"] = args.out
    if args.embeddings:
        overrides["embeddings"] = args.embeddings
    if args.augmented_embeddings:
        overrides["augmented_embeddings"] = args.augmented_embeddings
    if args.gazetteer:
        overrides["gazetteer"] = args.gazetteer
    if args.modules:
        overrides["modules"] = tuple(args.modules.split(","))
    if args.seeds:
        overrides["seeds"] = tuple(_parse_int_list(args.seeds))
    if args.rl_steps is not None:
        overrides["rl_steps"] = args.rl_steps
    if args.episodes_per_update is not None:
        overrides["episodes_per_update"] = args.episodes_per_update
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.ablate:
        overrides["ablate"] = True
    if args.cluster_reports:
        overrides["cluster_reports"] = True

    train_overrides = {}
    for attr, field_name in (
        ("epochs", "epochs"),
        ("batch_size", "batch_size"),
        ("lr", "learning_rate"),
        ("tau", "tau"),
        ("lam", "lam"),
        ("k", "k_per_class"),
        ("metric", "metric"),
        ("hard_k", "hard_k"),
        ("confidence", "confidence"),
        ("hidden", "hidden_dim"),
    ):
        value = getattr(args, attr)
        if value is not None:
            train_overrides[field_name] = value
    feat_overrides = {}
    if args.dim is not None:
        feat_overrides["dim"] = args.dim
    if args.word_ngrams is not None:
        feat_overrides["word_ngrams"] = _parse_ngrams(args.word_ngrams)
    if args.char_ngrams is not None:
        feat_overrides["char_ngrams"] = _parse_ngrams(args.char_ngrams)
    if args.hash_seed is not None:
        feat_overrides["hash_seed"] = args.hash_seed

    d = cfg.to_dict()
    d.update(overrides)
    d["train"].update(train_overrides)
    d["featurizer"].update(feat_overrides)
    return RunConfig.from_dict(d)


def _add_pipeline_args(parser) -> None:
    parser.add_argument("--config", help="JSON run configuration (flags override file values)")
    parser.add_argument("--dataset")
    parser.add_argument("--out")
    parser.add_argument("--embeddings")
    parser.add_argument("--augmented-embeddings", dest="augmented_embeddings")
    parser.add_argument("--gazetteer")
    parser.add_argument("--modules", help="comma-separated subset of M0,M1,M2,M3")
    parser.add_argument("--seeds", help="comma-separated seed list")
    parser.add_argument("--rl-steps", dest="rl_steps", type=int)
    parser.add_argument("--episodes-per-update", dest="episodes_per_update", type=int)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--ablate", action="store_true")
    parser.add_argument("--cluster-reports", dest="cluster_reports", action="store_true")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--lam", type=float)
    parser.add_argument("--k", type=int)
    parser.add_argument("--metric", choices=("cosine", "l2"))
    parser.add_argument("--hard-k", dest="hard_k", type=int)
    parser.add_argument("--confidence", type=float)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--word-ngrams", dest="word_ngrams")
    parser.add_argument("--char-ngrams", dest="char_ngrams")
    parser.add_argument("--hash-seed", dest="hash_seed", type=int)


def cmd_pipeline(args) -> int:
    cfg = _runconfig_from_args(args)
    result = run_pipeline(cfg)
    rv = [r for r in result.per_seed]
    mean_rv = float(np.mean([sa.test_scores["rv"] for sa in rv]))
    print(f"pipeline complete: test macro-F1 (rv) {mean_rv:.4f} over {len(rv)} seed(s)")
    print(f"reports under {cfg.out}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _runconfig_from_args(args)
    dataset = load_dataset(cfg.dataset)
    gaz = Gazetteer.load(cfg.gazetteer) if cfg.gazetteer else default_gazetteer()
    if cfg.embeddings:
        embeddings = read_embeddings(cfg.embeddings)
        featurizer = None
        augmented = read_embeddings(cfg.augmented_embeddings) if cfg.augmented_embeddings else None
    else:
        embeddings = featurize(dataset, cfg.featurizer)
        featurizer = cfg.featurizer
        augmented = None
    rows = run_ablation(
        dataset,
        embeddings,
        cfg.train,
        cfg.seeds,
        gazetteer=gaz,
        featurizer=featurizer,
        augmented_embeddings=augmented,
        rl_steps=cfg.rl_steps,
        episodes_per_update=cfg.episodes_per_update,
    )
    os.makedirs(cfg.out, exist_ok=True)
    cfg.save(os.path.join(cfg.out, "manifest.json"))
    write_report_csv(rows, os.path.join(cfg.out, "ablation.csv"))
    write_report_text(rows, os.path.join(cfg.out, "ablation.txt"), title=f"ablation: {dataset.name}")
    print(f"wrote ablation table ({len(rows)} variants) under {cfg.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rvhate",
        description="dataset-adaptive hate speech detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="hash a JSONL dataset into an embedding file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_featurizer_args(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("tag", help="tag targets and write the augmented dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gazetteer")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("train", help="train a single module head")
    p.add_argument("--data", required=True)
    p.add_argument("--module", required=True, choices=MODULE_IDS + ("combined",))
    p.add_argument("--out", required=True, help="checkpoint path (.rvhd)")
    p.add_argument("--report", help="optional training-report CSV path")
    p.add_argument("--embeddings")
    p.add_argument("--augmented-embeddings", dest="augmented_embeddings")
    p.add_argument("--gazetteer")
    _add_featurizer_args(p)
    _add_train_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("vote", help="optimize ensemble weights on the validation split")
    p.add_argument("--data", required=True)
    p.add_argument("--heads", nargs="+", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--rl-steps", dest="rl_steps", type=int, default=10000)
    p.add_argument("--episodes-per-update", dest="episodes_per_update", type=int, default=32)
    p.add_argument("--seed", type=int, default=13)
    _add_featurizer_args(p)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("eval", help="score heads and an ensemble on a split")
    p.add_argument("--data", required=True)
    p.add_argument("--heads", nargs="+", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--weights", help="comma-separated ensemble weights (default: equal)")
    p.add_argument("--split", choices=("train", "valid", "test"), default="test")
    p.add_argument("--embeddings")
    _add_featurizer_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the ablation table")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("pipeline", help="full workflow: train, vote, evaluate")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (AssertionError, ShapeMismatch)):
        return 4
    if isinstance(exc, (KTooLarge, EmptyCluster, MissingAnchorClass, EmptyBatch)):
        return 3
    if isinstance(exc, (OSError, ValueError)):
        return 2
    return 4


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code_for(err)
    except Exception as err:  # map everything onto the documented exit codes
        print(f"error: {err}", file=sys.stderr)
        return _exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
