"""Feature-hashing featurizer walkthrough.

Shows the determinism guarantees the rest of the pipeline leans on:
identical text always hashes to the identical row, token order only
matters through higher-order n-grams, and inserting a [TARGET] marker
moves the vector.
"""

import numpy as np

from rvhate import FeaturizerConfig, cosine_similarity, featurize_text

cfg = FeaturizerConfig(dim=256)

sentences = [
    "go back to china",
    "[TARGET] go back to china",
    "china back to go",
    "what lovely weather today",
]

rows = {s: featurize_text(s, cfg) for s in sentences}

print("determinism: re-hashing gives a bit-identical row:",
      np.array_equal(rows[sentences[0]], featurize_text(sentences[0], cfg)))

print("\npairwise cosine similarities (dim=256, word 1-2 grams, char 3-5 grams):")
for i, a in enumerate(sentences):
    for b in sentences[i + 1 :]:
        sim = cosine_similarity(rows[a], rows[b])
        print(f"  {sim:6.3f}   {a!r:38} vs {b!r}")

print("\nnotes:")
print(" - the marker shifts the vector but keeps it close to the original")
print(" - scrambled word order stays similar through shared unigrams/char-grams")
print(" - an unrelated sentence lands near zero")

unigram_cfg = FeaturizerConfig(dim=256, word_ngrams=(1, 1), char_ngrams=None)
a = featurize_text("a b", unigram_cfg)
b = featurize_text("b a", unigram_cfg)
print("\nbag-of-unigrams mode ignores order entirely:", np.array_equal(a, b))
