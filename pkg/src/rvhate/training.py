"""Per-module head training: cross-entropy plus anchored contrastive loss.

Each module head is a small trainable stack over frozen embeddings:

    pre       = tanh(W_p x + b_p)          (hidden activation)
    projected = pre / ||pre||              (contrastive representation)
    logits    = W_c pre + b_c              (classifier reads the
                                            pre-normalization activation)

The batch loss is the convex combination ``(1 - lam) * CE + lam * CON``
where CON is the anchored contrastive term: for sample i with label y_i,
positives are the anchors sharing y_i, candidates are all anchors plus any
selected hard negatives, and

    CON_i = logsumexp_c(cos(z_i, z_c)/tau) - mean_p cos(z_i, z_p)/tau

Anchors are re-clustered at the start of every epoch from the current
projected vectors and then held fixed as constants for that epoch
(stop-gradient targets); queue negatives are likewise stored constants.
With lam == 0 the clustering, queue, and contrastive term are skipped
entirely, so training reduces to pure cross-entropy bit for bit.

The four module configurations differ from the base pipeline only by their
designated mechanism:

    M0  base
    M1  trains on the tag-augmented train set (prepared upstream)
    M2  IQR outlier removal before anchor selection
    M3  hard-negative queue feeding extra contrastive candidates

Head checkpoints (extension ``.rvhd``, little-endian): magic b"RVHD",
u32 version, module-id byte, u32 input dim, u32 hidden dim, then float32
parameters in declared order (W_p row-major, b_p, W_c row-major, b_c,
tau, lam).
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import METRICS, build_cluster_model
from .data import Dataset, EmbeddingMatrix, FeaturizerConfig, featurize
from .errors import (
    BadMagic,
    DimensionMismatch,
    MissingAnchorClass,
    NonPositiveTemperature,
    TruncatedFile,
    VersionMismatch,
)
from .evaluation import macro_f1
from .mathops import as_vector
from .tagging import Gazetteer, augment_train_set, default_gazetteer

MODULE_IDS = ("M0", "M1", "M2", "M3")

HEAD_MAGIC = b"RVHD"
HEAD_VERSION = 1
_HEAD_HEADER = struct.Struct("<4sIBII")

MODULE_CODES = {"M0": 0, "M1": 1, "M2": 2, "M3": 3, "combined": 4}
_CODE_MODULES = {v: k for k, v in MODULE_CODES.items()}

# rng stream tags so the independent random decisions never share a stream
_STREAM_INIT = 7001
_STREAM_CLUSTER = 7002
_STREAM_BATCH = 7003


@dataclass(frozen=True)
class Mechanisms:
    """Which dataset-adaptive mechanisms a training run enables."""

    augment_train: bool = False
    remove_outliers: bool = False
    negative_queue: bool = False


MODULE_MECHANISMS = {
    "M0": Mechanisms(),
    "M1": Mechanisms(augment_train=True),
    "M2": Mechanisms(remove_outliers=True),
    "M3": Mechanisms(negative_queue=True),
    "combined": Mechanisms(augment_train=True, remove_outliers=True, negative_queue=True),
}


@dataclass
class TrainConfig:
    epochs: int = 6
    batch_size: int = 64
    learning_rate: float = 1e-3
    tau: float = 0.3
    lam: float = 0.5
    k_per_class: int = 20
    metric: str = "cosine"
    seed: int = 13
    hard_k: int = 8
    confidence: float = 0.9
    hidden_dim: int = 128
    queue_capacity: int = 2048

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.k_per_class < 1:
            raise ValueError("epochs, batch_size, and k_per_class must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.tau <= 0:
            raise NonPositiveTemperature(f"tau must be > 0, got {self.tau}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.hard_k < 1 or self.hidden_dim < 1 or self.queue_capacity < 1:
            raise ValueError("hard_k, hidden_dim, and queue_capacity must be positive")


@dataclass
class ModuleHead:
    module_id: str
    w_proj: np.ndarray
    b_proj: np.ndarray
    w_cls: np.ndarray
    b_cls: np.ndarray
    tau: float
    lam: float

    @property
    def input_dim(self) -> int:
        return int(self.w_proj.shape[1])

    @property
    def hidden_dim(self) -> int:
        return int(self.w_proj.shape[0])

    def params(self) -> dict[str, np.ndarray]:
        return {
            "w_proj": self.w_proj,
            "b_proj": self.b_proj,
            "w_cls": self.w_cls,
            "b_cls": self.b_cls,
        }

    def copy(self) -> "ModuleHead":
        return replace(
            self,
            w_proj=self.w_proj.copy(),
            b_proj=self.b_proj.copy(),
            w_cls=self.w_cls.copy(),
            b_cls=self.b_cls.copy(),
        )


def init_head(
    module_id: str, dim: int, hidden: int = 128, tau: float = 0.3, lam: float = 0.5, seed: int = 13
) -> ModuleHead:
    """Seed-deterministic head initialization.

    The draw depends only on (dim, hidden, seed), never on module_id, so
    switching a mechanism off reproduces the base module exactly.
    """
    if module_id not in MODULE_CODES:
        raise ValueError(f"unknown module id {module_id!r}")
    if tau <= 0:
        raise NonPositiveTemperature(f"tau must be > 0, got {tau}")
    rng = np.random.default_rng([int(seed), _STREAM_INIT])
    return ModuleHead(
        module_id=module_id,
        w_proj=rng.normal(0.0, dim**-0.5, size=(hidden, dim)),
        b_proj=np.zeros(hidden),
        w_cls=rng.normal(0.0, hidden**-0.5, size=(2, hidden)),
        b_cls=np.zeros(2),
        tau=float(tau),
        lam=float(lam),
    )


def forward_batch(head: ModuleHead, X: np.ndarray):
    """Returns (pre, projected, logits) for a (B, dim) batch."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != head.input_dim:
        raise DimensionMismatch(f"input dim {X.shape[1]} vs head dim {head.input_dim}")
    pre = np.tanh(X @ head.w_proj.T + head.b_proj)
    norms = np.linalg.norm(pre, axis=1, keepdims=True)
    projected = np.divide(pre, np.where(norms == 0.0, 1.0, norms))
    logits = pre @ head.w_cls.T + head.b_cls
    return pre, projected, logits


def forward(head: ModuleHead, x) -> tuple[np.ndarray, np.ndarray]:
    """Single-vector forward pass: (unit-norm projection, 2-class logits)."""
    xv = as_vector(x, "x")
    pre, projected, logits = forward_batch(head, xv[None, :])
    return projected[0], logits[0]


def predict(head: ModuleHead, X: np.ndarray) -> np.ndarray:
    """Argmax labels; a logit tie resolves to label 0."""
    _, _, logits = forward_batch(head, X)
    return logits.argmax(axis=1)


class HardNegativeQueue:
    """FIFO store of (projected vector, label, hate-confidence) entries.

    Length never exceeds capacity; eviction is strictly oldest-first.
    Stored vectors are constants: they never receive gradient.
    """

    def __init__(self, capacity: int = 2048):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: deque = deque(maxlen=capacity)
        self._cache = None

    def push(self, vector: np.ndarray, label: int, confidence: float) -> None:
        self._entries.append((np.array(vector, dtype=np.float64), int(label), float(confidence)))
        self._cache = None

    def push_batch(self, vectors, labels, confidences) -> None:
        for vec, lab, conf in zip(vectors, labels, confidences):
            self.push(vec, lab, conf)

    def __len__(self) -> int:
        return len(self._entries)

    def snapshot(self):
        """(vectors (Q, h), labels (Q,), confidences (Q,)) or (None, ..) when empty."""
        if not self._entries:
            return None, None, None
        if self._cache is None:
            vectors = np.stack([e[0] for e in self._entries])
            labels = np.array([e[1] for e in self._entries], dtype=np.int64)
            confidences = np.array([e[2] for e in self._entries], dtype=np.float64)
            self._cache = (vectors, labels, confidences)
        return self._cache


@dataclass
class SelectedNegatives:
    vectors: np.ndarray
    queue_indices: np.ndarray


def select_hard_negatives(
    queue: HardNegativeQueue, z, y: int, hard_k: int, confidence_threshold: float
) -> SelectedNegatives:
    """Top-``hard_k`` queue entries by cosine similarity to ``z``.

    Eligible entries either carry a different label than ``y`` or are
    label-0 entries whose recorded hate-confidence reached the threshold
    (confident false positives). Ties break toward the oldest entry.
    """
    empty = SelectedNegatives(
        vectors=np.zeros((0, np.asarray(z).shape[-1])), queue_indices=np.zeros(0, dtype=np.int64)
    )
    vectors, labels, confidences = queue.snapshot()
    if vectors is None:
        return empty
    eligible = (labels != y) | ((labels == 0) & (confidences >= confidence_threshold))
    idx = np.flatnonzero(eligible)
    if idx.size == 0:
        return empty
    zv = np.asarray(z, dtype=np.float64)
    znorm = np.linalg.norm(zv)
    norms = np.linalg.norm(vectors[idx], axis=1)
    sims = np.full(idx.size, -np.inf)
    ok = (norms > 0.0) & (znorm > 0.0)
    if znorm > 0.0:
        sims[ok] = vectors[idx[ok]] @ zv / (norms[ok] * znorm)
    order = np.argsort(-sims, kind="stable")[:hard_k]
    chosen = idx[order]
    return SelectedNegatives(vectors=vectors[chosen], queue_indices=chosen)


def _check_contrastive_inputs(anchor_labels, batch_labels, tau: float) -> None:
    if tau <= 0:
        raise NonPositiveTemperature(f"tau must be > 0, got {tau}")
    present = set(int(label) for label in np.asarray(anchor_labels).ravel())
    needed = set(int(label) for label in np.asarray(batch_labels).ravel())
    if not needed <= present:
        # every batch sample needs at least one positive anchor
        raise MissingAnchorClass(
            f"anchors cover labels {sorted(present)}, batch carries {sorted(needed)}"
        )


def _contrastive_core(batch_z, batch_labels, anchor_z, anchor_labels, tau, negatives):
    batch_z = np.asarray(batch_z, dtype=np.float64)
    batch_labels = np.asarray(batch_labels, dtype=np.int64)
    anchor_z = np.asarray(anchor_z, dtype=np.float64)
    anchor_labels = np.asarray(anchor_labels, dtype=np.int64)
    _check_contrastive_inputs(anchor_labels, batch_labels, tau)

    B = batch_z.shape[0]
    n_anchors = anchor_z.shape[0]
    anchor_sims = batch_z @ anchor_z.T
    losses = np.empty(B)
    grad_z = np.zeros_like(batch_z)
    for i in range(B):
        neg = None
        if negatives is not None and negatives[i] is not None and len(negatives[i]) > 0:
            neg = np.asarray(negatives[i], dtype=np.float64)
        if neg is not None:
            cands = np.vstack([anchor_z, neg])
            sims = np.concatenate([anchor_sims[i], neg @ batch_z[i]])
        else:
            cands = anchor_z
            sims = anchor_sims[i]
        s = sims / tau
        pos_mask = np.zeros(s.shape[0], dtype=bool)
        pos_mask[:n_anchors] = anchor_labels == batch_labels[i]
        n_pos = int(pos_mask.sum())
        m = s.max()
        lse = m + np.log(np.exp(s - m).sum())
        losses[i] = lse - s[pos_mask].mean()
        coef = np.exp(s - lse) / tau
        coef[pos_mask] -= 1.0 / (n_pos * tau)
        grad_z[i] = coef @ cands
    loss = float(losses.mean())
    return max(loss, 0.0), grad_z / B


def contrastive_loss(batch_z, batch_labels, anchor_z, anchor_labels, tau, negatives=None) -> float:
    """Anchored contrastive loss (mean over the batch); always >= 0."""
    loss, _ = _contrastive_core(batch_z, batch_labels, anchor_z, anchor_labels, tau, negatives)
    return loss


def contrastive_loss_grad(batch_z, batch_labels, anchor_z, anchor_labels, tau, negatives=None):
    """Loss plus its gradient with respect to the batch projections."""
    return _contrastive_core(batch_z, batch_labels, anchor_z, anchor_labels, tau, negatives)


def _cross_entropy(logits: np.ndarray, y: np.ndarray):
    B = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-logp[np.arange(B), y].mean())
    grad = np.exp(logp)
    grad[np.arange(B), y] -= 1.0
    return loss, grad / B


def loss_and_grads(head, X, y, anchor_z=None, anchor_labels=None, negatives=None):
    """Total loss ``(1-lam)*CE + lam*CON`` and gradients for every parameter.

    Anchor projections and queue negatives are treated as constants; the
    gradient flows only through the batch forward pass.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    lam, tau = head.lam, head.tau
    pre, projected, logits = forward_batch(head, X)

    grads = {k: np.zeros_like(v) for k, v in head.params().items()}
    d_pre = np.zeros_like(pre)
    ce = 0.0
    con = 0.0

    if lam < 1.0:
        ce, d_logits = _cross_entropy(logits, y)
        grads["w_cls"] = (1.0 - lam) * d_logits.T @ pre
        grads["b_cls"] = (1.0 - lam) * d_logits.sum(axis=0)
        d_pre += (1.0 - lam) * d_logits @ head.w_cls

    if lam > 0.0:
        if anchor_z is None or anchor_labels is None:
            raise MissingAnchorClass("contrastive term requires anchors when lam > 0")
        con, g_proj = contrastive_loss_grad(projected, y, anchor_z, anchor_labels, tau, negatives)
        norms = np.linalg.norm(pre, axis=1, keepdims=True)
        safe = np.where(norms == 0.0, 1.0, norms)
        # Jacobian of z = t/||t||: (g - z (z.g)) / ||t||, zero rows pass zero
        g_pre = (g_proj - projected * (projected * g_proj).sum(axis=1, keepdims=True)) / safe
        g_pre[norms[:, 0] == 0.0] = 0.0
        d_pre += lam * g_pre

    d_act = d_pre * (1.0 - pre * pre)
    grads["w_proj"] += d_act.T @ X
    grads["b_proj"] += d_act.sum(axis=0)
    total = (1.0 - lam) * ce + lam * con
    return total, grads, {"ce": ce, "contrastive": con}


class Adam:
    """Adaptive-moment optimizer over a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, p in params.items():
            g = grads[key]
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * g * g
            p -= self.lr * (self.m[key] / bc1) / (np.sqrt(self.v[key] / bc2) + self.eps)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    valid_macro_f1: float


@dataclass
class TrainedModule:
    head: ModuleHead
    report: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_f1: float = 0.0


def train_module(
    module_id: str,
    dataset: Dataset,
    embeddings: EmbeddingMatrix,
    cfg: TrainConfig,
    mechanisms: Mechanisms | None = None,
) -> TrainedModule:
    """Train one module head; returns the epoch with the best validation macro-F1.

    The M1 augmentation mechanism operates on the inputs, not in here: pass a
    dataset/embedding pair prepared by :func:`prepare_module_inputs`.
    """
    if module_id not in MODULE_CODES:
        raise ValueError(f"unknown module id {module_id!r}")
    mech = mechanisms if mechanisms is not None else MODULE_MECHANISMS[module_id]
    if embeddings.count != len(dataset.examples):
        raise DimensionMismatch(
            f"embeddings have {embeddings.count} rows for {len(dataset.examples)} examples"
        )
    train_idx = dataset.split_indices("train")
    valid_idx = dataset.split_indices("valid")
    if train_idx.size == 0 or valid_idx.size == 0:
        raise ValueError("dataset needs nonempty train and valid splits")
    labels = dataset.labels()
    X = embeddings.vectors.astype(np.float64)
    Xtr, ytr = X[train_idx], labels[train_idx]
    Xva, yva = X[valid_idx], labels[valid_idx]
    if np.unique(ytr).size < 2:
        raise MissingAnchorClass("train split must contain both classes")

    head = init_head(
        module_id,
        dim=X.shape[1],
        hidden=cfg.hidden_dim,
        tau=cfg.tau,
        lam=cfg.lam,
        seed=cfg.seed,
    )
    opt = Adam(head.params(), lr=cfg.learning_rate)
    queue = HardNegativeQueue(cfg.queue_capacity) if (mech.negative_queue and cfg.lam > 0) else None
    use_contrastive = cfg.lam > 0.0

    best_head = head.copy()
    best_f1 = -1.0
    best_epoch = 0
    report: list[EpochStats] = []
    n = train_idx.size

    for epoch in range(1, cfg.epochs + 1):
        anchor_z = anchor_labels = None
        if use_contrastive:
            _, Z_all, _ = forward_batch(head, Xtr)
            model = build_cluster_model(
                Z_all,
                ytr,
                cfg.k_per_class,
                metric=cfg.metric,
                seed=[cfg.seed, _STREAM_CLUSTER, epoch],
                remove_outliers=mech.remove_outliers,
            )
            valid_anchor = model.anchors >= 0
            anchor_z = Z_all[model.anchors[valid_anchor]]
            anchor_labels = ytr[model.anchors[valid_anchor]]

        order = np.random.default_rng([cfg.seed, _STREAM_BATCH, epoch]).permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            bidx = order[start : start + cfg.batch_size]
            xb, yb = Xtr[bidx], ytr[bidx]
            negatives = None
            if queue is not None and len(queue) > 0:
                _, zb, _ = forward_batch(head, xb)
                negatives = [
                    select_hard_negatives(queue, zb[i], int(yb[i]), cfg.hard_k, cfg.confidence).vectors
                    for i in range(len(bidx))
                ]
            loss, grads, _ = loss_and_grads(head, xb, yb, anchor_z, anchor_labels, negatives)
            opt.step(head.params(), grads)
            batch_losses.append(loss)
            if queue is not None:
                # push post-update projections with the model's current
                # hate-class confidence
                _, zb_new, logits_new = forward_batch(head, xb)
                shifted = logits_new - logits_new.max(axis=1, keepdims=True)
                probs = np.exp(shifted)
                probs /= probs.sum(axis=1, keepdims=True)
                queue.push_batch(zb_new, yb, probs[:, 1])

        valid_f1 = macro_f1(predict(head, Xva), yva)
        report.append(EpochStats(epoch, float(np.mean(batch_losses)), valid_f1))
        if valid_f1 > best_f1:
            best_f1 = valid_f1
            best_epoch = epoch
            best_head = head.copy()

    return TrainedModule(head=best_head, report=report, best_epoch=best_epoch, best_valid_f1=best_f1)


def compute_logit_panel(heads: list[ModuleHead], X: np.ndarray) -> np.ndarray:
    """Stack per-module logits into a (K, N, 2) panel for the voting stage."""
    panels = []
    for head in heads:
        _, _, logits = forward_batch(head, X)
        panels.append(logits)
    return np.stack(panels)


def prepare_module_inputs(
    module_id: str,
    dataset: Dataset,
    embeddings: EmbeddingMatrix,
    gazetteer: Gazetteer | None = None,
    featurizer: FeaturizerConfig | None = None,
    augmented_embeddings: EmbeddingMatrix | None = None,
    mechanisms: Mechanisms | None = None,
) -> tuple[Dataset, EmbeddingMatrix]:
    """Apply input-level mechanisms (M1 train-set augmentation) for a module.

    Preference order for embedding the tagged copies: an explicitly supplied
    augmented-embedding matrix, re-featurizing the augmented dataset, then
    falling back to duplicating each copy's original row (the only option
    when embeddings came from a fixed external file).
    """
    mech = mechanisms if mechanisms is not None else MODULE_MECHANISMS[module_id]
    if not mech.augment_train:
        return dataset, embeddings
    gaz = gazetteer if gazetteer is not None else default_gazetteer()
    augmented = augment_train_set(dataset, gaz)
    if len(augmented.examples) == len(dataset.examples):
        return dataset, embeddings
    if augmented_embeddings is not None:
        if augmented_embeddings.count != len(augmented.examples):
            raise DimensionMismatch(
                f"augmented embeddings have {augmented_embeddings.count} rows, "
                f"augmented dataset has {len(augmented.examples)}"
            )
        return augmented, augmented_embeddings
    if featurizer is not None:
        return augmented, featurize(augmented, featurizer)
    id_index = {ex.id: i for i, ex in enumerate(dataset.examples)}
    copy_rows = [
        id_index[ex.id.removesuffix("#tagged")]
        for ex in augmented.examples[len(dataset.examples) :]
    ]
    vectors = np.vstack([embeddings.vectors, embeddings.vectors[copy_rows]])
    zero = np.concatenate([embeddings.zero_rows, embeddings.zero_rows[copy_rows]])
    return augmented, EmbeddingMatrix(vectors=vectors, zero_rows=zero)


def save_head(head: ModuleHead, path) -> None:
    blocks = [
        head.w_proj.ravel(),
        head.b_proj,
        head.w_cls.ravel(),
        head.b_cls,
        np.array([head.tau, head.lam]),
    ]
    payload = np.concatenate(blocks).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(
            _HEAD_HEADER.pack(
                HEAD_MAGIC,
                HEAD_VERSION,
                MODULE_CODES[head.module_id],
                head.input_dim,
                head.hidden_dim,
            )
        )
        fh.write(payload.tobytes())


def load_head(path) -> ModuleHead:
    with open(path, "rb") as fh:
        header = fh.read(_HEAD_HEADER.size)
        if len(header) < _HEAD_HEADER.size:
            raise TruncatedFile(f"{path}: file shorter than header")
        magic, version, code, dim, hidden = _HEAD_HEADER.unpack(header)
        if magic != HEAD_MAGIC:
            raise BadMagic(f"{path}: expected magic {HEAD_MAGIC!r}, got {magic!r}")
        if version != HEAD_VERSION:
            raise VersionMismatch(f"{path}: unsupported head version {version}")
        if code not in _CODE_MODULES:
            raise ValueError(f"{path}: unknown module code {code}")
        payload = fh.read()
    expected = dim * hidden + hidden + 2 * hidden + 2 + 2
    values = np.frombuffer(payload, dtype="<f4")
    if values.size != expected:
        raise TruncatedFile(f"{path}: expected {expected} parameters, got {values.size}")
    values = values.astype(np.float64)
    offset = 0

    def take(count, shape):
        nonlocal offset
        block = values[offset : offset + count].reshape(shape)
        offset += count
        return block.copy()

    w_proj = take(hidden * dim, (hidden, dim))
    b_proj = take(hidden, (hidden,))
    w_cls = take(2 * hidden, (2, hidden))
    b_cls = take(2, (2,))
    tau, lam = float(values[offset]), float(values[offset + 1])
    return ModuleHead(
        module_id=_CODE_MODULES[code],
        w_proj=w_proj,
        b_proj=b_proj,
        w_cls=w_cls,
        b_cls=b_cls,
        tau=tau,
        lam=lam,
    )


def write_training_report(report: list[EpochStats], path) -> None:
    """CSV rows: epoch, train_loss, valid_macro_f1."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,train_loss,valid_macro_f1\n")
        for row in report:
            fh.write(f"{row.epoch},{row.train_loss!r},{row.valid_macro_f1!r}\n")
