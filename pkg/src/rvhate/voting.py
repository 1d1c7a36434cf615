"""Soft-voting ensemble and PPO optimization of the module weights.

The ensemble logit for class h is ``Z_i[h] = sum_k w_k * panel[k, i, h]``;
the prediction is the argmax, with ties resolving to label 0.

Weights live on the simplex. The policy is a stateless diagonal Gaussian
over pre-softmax logits u: sampling draws ``u ~ N(mu, diag(std^2))`` and
maps ``w = softmax(u)``, which enforces positivity and sum-to-one by
construction. Log-densities are taken over u (the pre-softmax action).
``mu`` starts at zero, so the initial deterministic weights are uniform.

PPO ascends the clipped surrogate

    L = mean_t min(r_t * A_t, clip(r_t, 1-eps, 1+eps) * A_t),
    r_t = exp(logp(u_t) - logp_old(u_t)),   A_t = reward_t - baseline

with analytic gradients through the Gaussian log-density. The baseline is
an exponential moving average of batch mean reward, seeded with the first
batch's mean (so a flat reward landscape yields exactly zero gradient).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBatch, ShapeMismatch
from .evaluation import macro_f1
from .mathops import softmax

_LOG_2PI = float(np.log(2.0 * np.pi))


def as_panel(panel) -> np.ndarray:
    """Validate a (modules, examples, 2) logit panel."""
    p = np.asarray(panel, dtype=np.float64)
    if p.ndim != 3 or p.shape[2] != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise ShapeMismatch(f"panel must have shape (K, N, 2), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ShapeMismatch("panel contains NaN or Inf")
    return p


def check_weight_vector(w, k: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Assert the simplex invariants: strictly positive, summing to 1 +/- tol."""
    wv = np.asarray(w, dtype=np.float64).ravel()
    if k is not None and wv.shape[0] != k:
        raise ShapeMismatch(f"expected {k} weights, got {wv.shape[0]}")
    if not np.all(wv > 0.0):
        raise ValueError(f"weights must all be positive, got {wv}")
    if abs(float(wv.sum()) - 1.0) > tol:
        raise ValueError(f"weights must sum to 1 within {tol}, got sum {wv.sum()!r}")
    return wv


@dataclass
class VoteResult:
    predictions: np.ndarray
    ensemble_logits: np.ndarray


def soft_vote(panel, w) -> VoteResult:
    """Weighted-logit vote: ``Z_i = sum_k w_k * panel[k, i]``, argmax label.

    The guard admits any nonnegative weight vector with positive sum
    (degenerate one-hot weights included); the weighted sum is applied as
    given, since the argmax is invariant to positive rescaling.
    """
    p = as_panel(panel)
    wv = np.asarray(w, dtype=np.float64).ravel()
    if wv.shape[0] != p.shape[0]:
        raise ShapeMismatch(f"{wv.shape[0]} weights for a {p.shape[0]}-module panel")
    if np.any(wv < 0.0) or not np.all(np.isfinite(wv)):
        raise ValueError(f"weights must be nonnegative and finite, got {wv}")
    if float(wv.sum()) <= 0.0:
        raise ValueError("weights sum to zero")
    ensemble = np.tensordot(wv, p, axes=([0], [0]))
    return VoteResult(predictions=ensemble.argmax(axis=1), ensemble_logits=ensemble)


@dataclass
class WeightPolicy:
    """Stateless Gaussian policy over pre-softmax weight logits."""

    mu: np.ndarray
    log_std: np.ndarray
    baseline: float | None = None
    baseline_decay: float = 0.99
    clip_eps: float = 0.2
    step: int = 0

    @classmethod
    def initial(cls, k: int = 4, sigma: float = 0.5, clip_eps: float = 0.2) -> "WeightPolicy":
        if k < 1:
            raise ValueError("policy needs at least one module")
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(mu=np.zeros(k), log_std=np.full(k, np.log(sigma)), clip_eps=clip_eps)

    @property
    def k(self) -> int:
        return int(self.mu.shape[0])

    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def weights(self) -> np.ndarray:
        """Deterministic weights: softmax of the policy mean."""
        return softmax(self.mu)


def gaussian_log_prob(u, mu, log_std) -> float:
    """Diagonal Gaussian log-density of the raw action u."""
    u = np.asarray(u, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    delta = (u - mu) / np.exp(log_std)
    return float(-0.5 * np.sum(delta * delta) - np.sum(log_std) - 0.5 * u.shape[0] * _LOG_2PI)


@dataclass(frozen=True)
class Episode:
    u: np.ndarray
    log_prob: float
    reward: float


def sample_weights(policy: WeightPolicy, rng: np.random.Generator):
    """Draw (weights, raw action u, log-prob of u) from the policy."""
    u = rng.normal(policy.mu, policy.std())
    w = softmax(u)
    return w, u, gaussian_log_prob(u, policy.mu, policy.log_std)


def clipped_surrogate_terms(ratios, advantages, eps: float) -> np.ndarray:
    """Per-episode PPO objective values: min(r*A, clip(r, 1-eps, 1+eps)*A)."""
    r = np.asarray(ratios, dtype=np.float64)
    a = np.asarray(advantages, dtype=np.float64)
    return np.minimum(r * a, np.clip(r, 1.0 - eps, 1.0 + eps) * a)


def ppo_surrogate(mu, log_std, u, old_log_prob, advantages, eps: float) -> float:
    """Clipped-surrogate mean as a pure function of the policy parameters."""
    mu = np.asarray(mu, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    delta = (u - mu) / np.exp(log_std)
    lp = -0.5 * (delta * delta).sum(axis=1) - log_std.sum() - 0.5 * mu.shape[0] * _LOG_2PI
    ratios = np.exp(lp - np.asarray(old_log_prob, dtype=np.float64))
    return float(clipped_surrogate_terms(ratios, advantages, eps).mean())


def ppo_surrogate_grads(mu, log_std, u, old_log_prob, advantages, eps: float):
    """Surrogate value and its analytic gradients w.r.t. (mu, log_std)."""
    mu = np.asarray(mu, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    std = np.exp(log_std)
    delta = (u - mu) / std
    lp = -0.5 * (delta * delta).sum(axis=1) - log_std.sum() - 0.5 * mu.shape[0] * _LOG_2PI
    ratios = np.exp(lp - np.asarray(old_log_prob, dtype=np.float64))
    unclipped = ratios * adv
    clipped = np.clip(ratios, 1.0 - eps, 1.0 + eps) * adv
    value = float(np.minimum(unclipped, clipped).mean())
    # gradient flows through the unclipped branch wherever it attains the min
    # (ties included); the clipped branch is flat in theta where it is lower
    active = unclipped <= clipped
    coef = np.where(active, adv * ratios, 0.0) / u.shape[0]
    d_lp_mu = delta / std
    d_lp_ls = delta * delta - 1.0
    return value, coef @ d_lp_mu, coef @ d_lp_ls


def ppo_update(
    policy: WeightPolicy,
    episodes: list[Episode],
    passes: int = 4,
    lr: float = 3e-3,
) -> dict:
    """Ascend the clipped surrogate over one episode batch, in place."""
    if not episodes:
        raise EmptyBatch("ppo_update needs at least one episode")
    u = np.stack([ep.u for ep in episodes])
    old_lp = np.array([ep.log_prob for ep in episodes])
    rewards = np.array([ep.reward for ep in episodes])
    if policy.baseline is None:
        policy.baseline = float(rewards.mean())
    advantages = rewards - policy.baseline

    std = np.exp(policy.log_std)
    delta0 = (u - policy.mu) / std
    lp0 = -0.5 * (delta0 * delta0).sum(axis=1) - policy.log_std.sum() - 0.5 * policy.k * _LOG_2PI
    entry_ratios = np.exp(lp0 - old_lp)

    value = 0.0
    for _ in range(passes):
        value, d_mu, d_ls = ppo_surrogate_grads(
            policy.mu, policy.log_std, u, old_lp, advantages, policy.clip_eps
        )
        policy.mu = policy.mu + lr * d_mu
        policy.log_std = policy.log_std + lr * d_ls

    policy.baseline = policy.baseline_decay * policy.baseline + (
        1.0 - policy.baseline_decay
    ) * float(rewards.mean())
    policy.step += len(episodes)
    return {
        "entry_ratios": entry_ratios,
        "entry_surrogate": float(
            clipped_surrogate_terms(entry_ratios, advantages, policy.clip_eps).mean()
        ),
        "surrogate": value,
        "mean_reward": float(rewards.mean()),
        "baseline": policy.baseline,
    }


@dataclass(frozen=True)
class TraceRow:
    step: int
    reward: float
    baseline: float


@dataclass
class OptimizationResult:
    weights: np.ndarray
    policy: WeightPolicy
    trace: list[TraceRow] = field(default_factory=list)


def optimize_weights(
    panel,
    labels,
    steps: int = 10000,
    episodes_per_update: int = 32,
    seed: int = 0,
    clip_eps: float = 0.2,
    init_sigma: float = 0.5,
    passes: int = 4,
    policy_lr: float = 3e-3,
) -> OptimizationResult:
    """Optimize module weights against macro-F1 on a cached logit panel.

    One step = one sampled weight vector = one reward evaluation; the panel
    is the read-only reward oracle (heads are never re-run). Returns the
    deterministic weights softmax(mu) after ``steps`` total samples plus the
    full reward trace.
    """
    p = as_panel(panel)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if y.shape[0] != p.shape[1]:
        raise ShapeMismatch(f"{y.shape[0]} labels for a panel of {p.shape[1]} examples")
    if steps < 1 or episodes_per_update < 1:
        raise ValueError("steps and episodes_per_update must be positive")

    policy = WeightPolicy.initial(k=p.shape[0], clip_eps=clip_eps, sigma=init_sigma)
    rng = np.random.default_rng([int(seed), 9001])
    trace: list[TraceRow] = []
    consumed = 0
    while consumed < steps:
        batch = min(episodes_per_update, steps - consumed)
        episodes = []
        for _ in range(batch):
            w, u, lp = sample_weights(policy, rng)
            reward = macro_f1(soft_vote(p, w).predictions, y)
            episodes.append(Episode(u=u, log_prob=lp, reward=reward))
        ppo_update(policy, episodes, passes=passes, lr=policy_lr)
        for offset, ep in enumerate(episodes):
            trace.append(TraceRow(step=consumed + offset + 1, reward=ep.reward, baseline=policy.baseline))
        consumed += batch

    weights = check_weight_vector(softmax(policy.mu), k=policy.k)
    return OptimizationResult(weights=weights, policy=policy, trace=trace)


def write_weight_report(rows, path) -> None:
    """CSV rows: dataset, seed, w0..w{K-1}, valid_macro_f1.

    ``rows`` is an iterable of (dataset, seed, weights, valid_macro_f1).
    """
    rows = list(rows)
    k = max((len(r[2]) for r in rows), default=4)
    header = "dataset,seed," + ",".join(f"w{i}" for i in range(k)) + ",valid_macro_f1"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for dataset, seed, weights, f1 in rows:
            ws = ",".join(repr(float(w)) for w in weights)
            fh.write(f"{dataset},{seed},{ws},{f1!r}\n")


def write_reward_trace(trace: list[TraceRow], path) -> None:
    """CSV rows: step, reward, baseline."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,reward,baseline\n")
        for row in trace:
            fh.write(f"{row.step},{row.reward!r},{row.baseline!r}\n")
