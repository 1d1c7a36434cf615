"""Dataset-adaptive hate speech detection.

Four specialized training modules over fixed text embeddings (base,
target-tag augmentation, cluster outlier removal, hard-negative queue),
combined by a soft-voting ensemble whose per-module weights are optimized
per dataset with clipped-surrogate policy gradients.
"""

from .ablation import panel_variants, run_ablation
from .clustering import (
    ClusterModel,
    KMeansResult,
    build_cluster_model,
    iqr_filter,
    iqr_keep_mask,
    kmeans,
    select_anchor,
)
from .data import (
    Dataset,
    EmbeddingMatrix,
    FeaturizerConfig,
    LabeledExample,
    featurize,
    featurize_text,
    load_dataset,
    read_embeddings,
    save_dataset,
    write_embeddings,
)
from .evaluation import EvalReport, confusion, macro_f1, summarize
from .mathops import (
    QuantileSpec,
    cosine_similarity,
    euclidean_distance,
    log_sum_exp,
    quantile,
    softmax,
)
from .pipeline import PipelineResult, RunConfig, run_pipeline
from .synthetic import (
    oracle_panel_pair,
    planted_oracle_panel,
    separable_embeddings,
    toy_corpus_rows,
)
from .tagging import Gazetteer, TaggedExample, augment_train_set, default_gazetteer, tag_targets
from .training import (
    MODULE_IDS,
    HardNegativeQueue,
    ModuleHead,
    TrainConfig,
    TrainedModule,
    compute_logit_panel,
    contrastive_loss,
    forward,
    forward_batch,
    init_head,
    load_head,
    prepare_module_inputs,
    save_head,
    select_hard_negatives,
    train_module,
)
from .voting import (
    Episode,
    OptimizationResult,
    VoteResult,
    WeightPolicy,
    check_weight_vector,
    optimize_weights,
    ppo_update,
    sample_weights,
    soft_vote,
)

__version__ = "0.1.0"
