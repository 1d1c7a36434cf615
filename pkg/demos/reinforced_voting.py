"""Policy-gradient weight optimization on a planted-oracle logit panel.

Module 0 is a perfect (but variable-margin) oracle; modules 1-3 emit
label-independent noise biased toward the non-hate class. Uniform weights
drown the oracle, so the ensemble starts poor; the policy learns to
concentrate weight on module 0.
"""

import numpy as np

from rvhate import macro_f1, optimize_weights, planted_oracle_panel, soft_vote

panel, labels = planted_oracle_panel(n=600, seed=5)

equal = np.full(4, 0.25)
equal_f1 = macro_f1(soft_vote(panel, equal).predictions, labels)
solo_f1 = macro_f1(panel[0].argmax(axis=1), labels)
print(f"oracle module alone:  macro-F1 {solo_f1:.4f}")
print(f"equal-weight vote:    macro-F1 {equal_f1:.4f}")

result = optimize_weights(panel, labels, steps=10000, episodes_per_update=32, seed=13)
learned_f1 = macro_f1(soft_vote(panel, result.weights).predictions, labels)
print(f"learned-weight vote:  macro-F1 {learned_f1:.4f}")
print(f"learned weights:      {np.round(result.weights, 4).tolist()}")

# reward trace, thinned
print("\nreward trace (every 1000th sample):")
for row in result.trace[::1000]:
    print(f"  step {row.step:5d}  reward {row.reward:.4f}  baseline {row.baseline:.4f}")
print(f"  step {result.trace[-1].step:5d}  reward {result.trace[-1].reward:.4f}  "
      f"baseline {result.trace[-1].baseline:.4f}")
